use std::thread;

use super::adversary::{Adversary, RoundData};
use super::ensemble::{EnsembleSpec, Instance};
use super::metrics::regret_bound;
use crate::automata::Path;
use crate::contextual::{assign_edge_gains, edge_gain, path_gain_oracle, ContextAutomaton, PatternSet};
use crate::error::{Error, Result};
use crate::learners::{build_learner, default_tuning, Algorithm, Feedback, Learner, LearnerConfig, PartialConfig, Prediction, Regime};
use crate::rng::stream;

/// What the learner is shown after a round, owned.
#[derive(Debug, Clone, PartialEq)]
pub enum Revealed {
    Full(Vec<f64>),
    Semi(Vec<f64>),
    Bandit(f64),
}

impl Revealed {
    pub fn feedback(&self) -> Feedback<'_> {
        match self {
            Revealed::Full(g) => Feedback::Full(g),
            Revealed::Semi(g) => Feedback::Semi(g),
            Revealed::Bandit(g) => Feedback::Bandit(*g),
        }
    }

    /// Short text form for trial records.
    pub fn digest(&self) -> String {
        let join = |g: &[f64]| g.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
        match self {
            Revealed::Full(g) => format!("full:{}", g.len()),
            Revealed::Semi(g) => format!("semi:{}", join(g)),
            Revealed::Bandit(g) => format!("bandit:{g}"),
        }
    }
}

/// Builds the feedback of `regime` for the played prediction. Only the data
/// the regime exposes is read: every output in the full setting, the outputs
/// of the played transitions in the semi-bandit setting, and in the bandit
/// setting the played path's gain alone.
pub fn reveal(
    ca: Option<&ContextAutomaton>,
    expert: &crate::automata::Automaton,
    patterns: &PatternSet,
    regime: Regime,
    round: &RoundData,
    played: &Prediction,
) -> Result<Revealed> {
    let need_context = || {
        ca.ok_or(Error::RegimeMismatch {
            algorithm: "exp3-ag".into(),
            regime: regime.to_string(),
        })
    };
    Ok(match regime {
        Regime::Full => Revealed::Full(assign_edge_gains(need_context()?, &round.out, &round.y, patterns)),
        Regime::Semi => {
            let ca = need_context()?;
            let cp = played.context_path.as_ref().ok_or(Error::NotAccepting)?;
            let mut visible: Vec<Option<&str>> = vec![None; round.out.len()];
            for &e in &played.path.0 {
                visible[e] = Some(round.out[e].as_str());
            }
            let counts = patterns.theta(&round.y);
            Revealed::Semi(cp.0.iter().map(|&e| edge_gain(ca, e, &visible, &counts, patterns)).collect())
        }
        Regime::Bandit => Revealed::Bandit(path_gain_oracle(expert, &played.path, &round.out, &round.y, patterns)),
    })
}

/// One round as seen from outside the learner.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub t: usize,
    pub round: RoundData,
    pub path: Path,
    pub context_path: Option<Path>,
    pub realized: f64,
    pub revealed: String,
}

/// One line of `trace.csv`. `realized` and `expected` are this round's
/// gains; `comparator`, `regret` and `bound` are cumulative up to `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub chosen: String,
    pub realized: f64,
    pub expected: f64,
    /// Cumulative gain of the best fixed path over rounds `1..=t`.
    pub comparator: f64,
    /// `comparator` minus the learner's cumulative expected gain.
    pub regret: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub algorithm: Algorithm,
    pub regime: Regime,
    pub rows: Vec<TraceRow>,
    pub trials: Vec<TrialRecord>,
    /// Best fixed expert path over the whole run.
    pub best_path: Path,
    /// That path's gain in every round.
    pub best_round_gains: Vec<f64>,
}

impl RegretTrace {
    /// Expected regret after `t` rounds, zero before the first.
    pub fn regret_at(&self, t: usize) -> f64 {
        if t == 0 {
            0.0
        } else {
            self.rows[t - 1].regret
        }
    }
}

/// Best fixed expert path for a history of rounds and its cumulative gain,
/// found by summing context-transition gains and taking a best path.
pub fn best_fixed_path(history: &[RoundData], ca: &ContextAutomaton, patterns: &PatternSet) -> Result<(Path, f64)> {
    let mut total = vec![0.0; ca.machine().num_transitions()];
    for r in history {
        for (acc, g) in total.iter_mut().zip(assign_edge_gains(ca, &r.out, &r.y, patterns)) {
            *acc += g;
        }
    }
    let best = best_context_path(ca, &total)?;
    let gain = best.0.iter().map(|&e| total[e]).sum();
    Ok((ca.representative_path(&best)?, gain))
}

/// Highest-gain accepting path of the context automaton. Ties go to the
/// path whose expert transition names come first in lexicographic order.
fn best_context_path(ca: &ContextAutomaton, gains: &[f64]) -> Result<Path> {
    let m = ca.machine();
    let src = ca.source();
    // best[q] = (value, names along the suffix, suffix edges)
    let mut best: Vec<Option<(f64, Vec<&str>, Vec<usize>)>> = vec![None; m.num_states()];
    for &q in m.topo_order().iter().rev() {
        let mut cur: Option<(f64, Vec<&str>, Vec<usize>)> = m.is_final(q).then(|| (0.0, Vec::new(), Vec::new()));
        for &e in m.outgoing(q) {
            let Some((v, names, edges)) = &best[m.transition(e).dst] else { continue };
            let value = gains[e] + v;
            let mut cand_names: Vec<&str> = ca.edge_sources(e).iter().map(|&i| src.name(i)).collect();
            cand_names.extend(names.iter().copied());
            let better = match &cur {
                None => true,
                Some((cv, cn, _)) => value > *cv || (value == *cv && cand_names < *cn),
            };
            if better {
                let mut cand_edges = vec![e];
                cand_edges.extend(edges.iter().copied());
                cur = Some((value, cand_names, cand_edges));
            }
        }
        best[q] = cur;
    }
    best[m.initial()].take().map(|b| Path(b.2)).ok_or(Error::EmptyLanguage)
}

/// Runs `learner` for the instance's horizon against its adversary.
pub fn run_learner(inst: &Instance, learner: &mut dyn Learner, regime: Regime, delta: f64) -> Result<RegretTrace> {
    let algorithm = learner.algorithm();
    algorithm.check_regime(regime)?;
    let horizon = inst.spec.horizon;
    let sizes = inst.sizes();
    let ca = &inst.context;
    let mut adversary = Adversary::new(&inst.spec);
    let mut rng = stream(inst.spec.seed, "learner", 0);
    let mut played: Vec<Path> = Vec::with_capacity(horizon);
    let mut rows = Vec::with_capacity(horizon);
    let mut trials = Vec::with_capacity(horizon);
    let mut cumulative = vec![0.0; ca.machine().num_transitions()];
    let mut per_round_edges = Vec::with_capacity(horizon);
    let mut learner_expected = 0.0;
    for t in 1..=horizon {
        let round = adversary.step(t, &played);
        let probs = learner.play_probabilities(&inst.paths)?;
        let pred = learner.predict(&mut rng)?;
        let edges = assign_edge_gains(ca, &round.out, &round.y, &inst.patterns);
        let expected: f64 = inst
            .context_paths
            .iter()
            .zip(&probs)
            .map(|(cp, p)| p * cp.0.iter().map(|&e| edges[e]).sum::<f64>())
            .sum();
        learner_expected += expected;
        let realized = path_gain_oracle(&inst.automaton, &pred.path, &round.out, &round.y, &inst.patterns);
        for (acc, g) in cumulative.iter_mut().zip(&edges) {
            *acc += g;
        }
        let best = ca.machine().best_path(&cumulative)?;
        let comparator: f64 = best.0.iter().map(|&e| cumulative[e]).sum();
        let revealed = reveal(learner.context(), &inst.automaton, &inst.patterns, regime, &round, &pred)?;
        learner.update(&pred, revealed.feedback())?;
        rows.push(TraceRow {
            t,
            chosen: inst.path_string(&pred.path),
            realized,
            expected,
            comparator,
            regret: comparator - learner_expected,
            bound: regret_bound(algorithm, &sizes, t, delta),
        });
        trials.push(TrialRecord {
            t,
            round,
            path: pred.path.clone(),
            context_path: pred.context_path.clone(),
            realized,
            revealed: revealed.digest(),
        });
        per_round_edges.push(edges);
        played.push(pred.path);
    }
    let best = best_context_path(ca, &cumulative)?;
    let best_round_gains = per_round_edges.iter().map(|g| best.0.iter().map(|&e| g[e]).sum()).collect();
    Ok(RegretTrace {
        algorithm,
        regime,
        rows,
        trials,
        best_path: ca.representative_path(&best)?,
        best_round_gains,
    })
}

/// Runs a resolved learner configuration on an instance.
pub fn run_experiment(inst: &Instance, cfg: &LearnerConfig, regime: Regime) -> Result<RegretTrace> {
    cfg.algorithm.check_regime(regime)?;
    let mut learner = build_learner(cfg, &inst.context)?;
    run_learner(inst, learner.as_mut(), regime, cfg.confidence)
}

/// Default-tuned run of `algorithm` in its own regime.
pub fn run_default(spec: &EnsembleSpec, algorithm: Algorithm, partial: &PartialConfig) -> Result<(Instance, LearnerConfig, RegretTrace)> {
    let inst = Instance::new(spec)?;
    let cfg = default_tuning(algorithm, partial, &inst.sizes(), spec.seed)?;
    let trace = run_experiment(&inst, &cfg, algorithm.regime())?;
    Ok((inst, cfg, trace))
}

/// Runs one default-tuned experiment per seed on separate threads. Results
/// come back in seed order.
pub fn sweep(spec: &EnsembleSpec, algorithm: Algorithm, partial: &PartialConfig, seeds: &[u64]) -> Vec<Result<(Instance, LearnerConfig, RegretTrace)>> {
    thread::scope(|s| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                let spec = EnsembleSpec { seed, ..spec.clone() };
                s.spawn(move || run_default(&spec, algorithm, partial))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("experiment thread panicked")).collect()
    })
}
