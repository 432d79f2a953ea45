//! Self-checks run by `pathlearn verify`: each check rebuilds a small
//! instance, compares a construction against a direct computation and
//! reports how long it took.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::Rng;

use crate::automata::{Automaton, Label, WeightedArc, WeightedAutomaton};
use crate::contextual::{assign_edge_gains, path_gain_oracle, ContextAutomaton, PatternSet};
use crate::error::{Error, Result};
use crate::harness::{
    build_ensemble_automaton, reveal, translation_instance, verify_non_additivity, Adversary, AdversaryModel,
    EnsembleSpec, Instance,
};
use crate::learners::{
    covering_paths, default_tuning, flow_decompose, polytope_violation, Algorithm, Cdch, Exp3Ag, Learner,
    PartialConfig, Regime,
};
use crate::rng::{stream, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    /// Small instances, well under a minute.
    Quick,
    Full,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Quick => "quick",
            Level::Full => "full",
        })
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            _ => Err(Error::Config(format!("unknown level `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub level: Level,
    /// Test hook: negate every context-transition gain before the
    /// additivity checks compare sums.
    pub flip_edge_gains: bool,
}

impl VerifyOptions {
    pub fn new(level: Level) -> Self {
        VerifyOptions {
            level,
            flip_edge_gains: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

type Check = fn(&VerifyOptions) -> Result<(bool, String)>;

const CHECKS: [(&str, Check); 9] = [
    ("additivity", check_additivity),
    ("gappy-additivity", check_gappy_additivity),
    ("path-correspondence", check_path_correspondence),
    ("weight-pushing", check_weight_pushing),
    ("exp3-equivalence", check_exp3),
    ("polytope", check_polytope),
    ("covering", check_covering),
    ("size-formulas", check_sizes),
    ("non-additivity", check_non_additivity),
];

/// Runs every check, in a fixed order.
pub fn run_checks(opts: &VerifyOptions) -> Vec<CheckOutcome> {
    CHECKS
        .iter()
        .map(|(name, check)| {
            let start = Instant::now();
            let (passed, detail) = match check(opts) {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            CheckOutcome {
                name,
                passed,
                detail,
                elapsed: start.elapsed(),
            }
        })
        .collect()
}

fn instances(opts: &VerifyOptions) -> usize {
    match opts.level {
        Level::Quick => 40,
        Level::Full => 200,
    }
}

fn random_dag(rng: &mut StreamRng) -> Automaton {
    loop {
        let n = rng.random_range(2..=8);
        let m = rng.random_range(1..=14);
        let names: Vec<String> = (0..m).map(|i| format!("e{i}")).collect();
        let edges: Vec<(usize, usize, &str)> = names
            .iter()
            .map(|nm| {
                let s = rng.random_range(0..n - 1);
                (s, rng.random_range(s + 1..n), nm.as_str())
            })
            .collect();
        if let Ok(a) = Automaton::from_edges(0, &[n - 1, rng.random_range(1..n)], &edges) {
            if a.has_accepting_path() {
                return a;
            }
        }
    }
}

fn word(rng: &mut StreamRng, sigma: &[&str], len: usize) -> Vec<String> {
    (0..len).map(|_| sigma[rng.random_range(0..sigma.len())].to_string()).collect()
}

fn additivity(opts: &VerifyOptions, stream_name: &str, discounts: &[Option<f64>]) -> Result<(bool, String)> {
    let sigma = ["a", "b", "c"];
    let mut rng = stream(0, stream_name, 0);
    let (mut paths, mut worst) = (0usize, 0.0f64);
    let sign = if opts.flip_edge_gains { -1.0 } else { 1.0 };
    for _ in 0..instances(opts) {
        let a = random_dag(&mut rng);
        let n = rng.random_range(1..=3);
        let y_len = rng.random_range(1..=8);
        let y = word(&mut rng, &sigma, y_len);
        let out = word(&mut rng, &sigma, a.num_transitions());
        for d in discounts {
            let base = PatternSet::all_ngrams(&sigma, n)?;
            let ps = match d {
                Some(d) => base.with_gaps(*d, None)?,
                None => base,
            };
            let ca = ContextAutomaton::build(&a, &ps)?;
            let g = assign_edge_gains(&ca, &out, &y, &ps);
            for p in a.enumerate_paths(10_000)? {
                let sum: f64 = ca.map_path(&p)?.0.iter().map(|&e| sign * g[e]).sum();
                worst = worst.max((sum - path_gain_oracle(&a, &p, &out, &y, &ps)).abs());
                paths += 1;
            }
        }
    }
    Ok((worst <= 1e-9, format!("{paths} paths, max difference {worst:e}")))
}

fn check_additivity(opts: &VerifyOptions) -> Result<(bool, String)> {
    additivity(opts, "verify-additivity", &[None])
}

fn check_gappy_additivity(opts: &VerifyOptions) -> Result<(bool, String)> {
    additivity(opts, "verify-gappy", &[Some(0.0), Some(0.5), Some(1.0)])
}

fn check_path_correspondence(opts: &VerifyOptions) -> Result<(bool, String)> {
    let mut rng = stream(0, "verify-paths", 0);
    let mut checked = 0;
    for _ in 0..instances(opts) {
        let a = random_dag(&mut rng);
        let ps = PatternSet::all_ngrams(&["a", "b"], rng.random_range(1..=3))?;
        let ca = ContextAutomaton::build(&a, &ps)?;
        let mut images = std::collections::BTreeSet::new();
        for p in a.enumerate_paths(10_000)? {
            let q = ca.map_path(&p)?;
            if !ca.machine().is_accepting(&q) || ca.representative_path(&q)?.0.len() > a.longest_path().unwrap_or(0) {
                return Ok((false, format!("path {:?} maps outside the context automaton", p.0)));
            }
            images.insert(q);
            checked += 1;
        }
        if images.len() != ca.machine().enumerate_paths(100_000)?.len() {
            return Ok((false, "some context path has no preimage".into()));
        }
    }
    Ok((true, format!("{checked} paths map to accepting context paths, every context path reached")))
}

fn check_weight_pushing(opts: &VerifyOptions) -> Result<(bool, String)> {
    let mut rng = stream(0, "verify-push", 0);
    let mut worst = 0.0f64;
    for _ in 0..instances(opts) {
        let a = random_dag(&mut rng);
        let arcs = (0..a.num_transitions())
            .map(|i| {
                let t = a.transition(i);
                WeightedArc::new(t.src, t.dst, Label::sym(t.name.as_str()), rng.random_range(0.05..3.0))
            })
            .collect();
        let finals: Vec<(usize, f64)> = (0..a.num_states()).filter(|&q| a.is_final(q)).map(|q| (q, 1.0)).collect();
        let w = WeightedAutomaton::new(a.num_states(), 0, finals, arcs)?;
        let p = w.weight_push()?;
        if !p.is_stochastic() {
            return Ok((false, "pushed machine is not stochastic".into()));
        }
        let total: f64 = w.paths(10_000)?.iter().map(|x| x.1).sum();
        for (path, x) in w.paths(10_000)? {
            worst = worst.max((x / total - p.path_weight(&w.labels_of(&path))).abs());
        }
    }
    Ok((worst <= 1e-12, format!("max normalized path weight change {worst:e}")))
}

fn ensemble(r: usize, l: usize, n: usize, horizon: usize) -> EnsembleSpec {
    EnsembleSpec {
        experts: r,
        substructures: l,
        order: n,
        alphabet: vec!["a".into(), "b".into()],
        adversary: AdversaryModel::Iid,
        horizon,
        seed: 17,
    }
}

fn check_exp3(opts: &VerifyOptions) -> Result<(bool, String)> {
    let horizon = if opts.level == Level::Quick { 60 } else { 200 };
    let s = ensemble(2, 5, 2, horizon);
    let inst = Instance::new(&s)?;
    let cfg = default_tuning(Algorithm::Exp3Ag, &PartialConfig::default(), &inst.sizes(), s.seed)?;
    let mut ag = Exp3Ag::new(&inst.automaton, &cfg)?;
    let mut log_w = vec![0.0f64; inst.paths.len()];
    let mut adv = Adversary::new(&s);
    let mut rng = stream(s.seed, "learner", 0);
    let mut worst = 0.0f64;
    for t in 1..=horizon {
        let round = adv.step(t, &[]);
        let top = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = log_w.iter().map(|x| (x - top).exp()).sum();
        let flat: Vec<f64> = log_w.iter().map(|x| (x - top).exp() / z).collect();
        for (a, b) in ag.play_probabilities(&inst.paths)?.iter().zip(&flat) {
            worst = worst.max((a - b).abs());
        }
        let pred = ag.predict(&mut rng)?;
        let k = inst.paths.iter().position(|p| *p == pred.path).ok_or(Error::NotAccepting)?;
        let fb = reveal(None, &inst.automaton, &inst.patterns, Regime::Bandit, &round, &pred)?;
        ag.update(&pred, fb.feedback())?;
        if let crate::harness::Revealed::Bandit(g) = fb {
            log_w[k] += cfg.learning_rate * g / flat[k];
        }
    }
    let sizes_ok = ag.growth().iter().all(|g| g.after <= g.before + g.update);
    Ok((worst <= 1e-9 && sizes_ok, format!("max probability difference {worst:e}, size growth bounded: {sizes_ok}")))
}

fn check_polytope(opts: &VerifyOptions) -> Result<(bool, String)> {
    let horizon = if opts.level == Level::Quick { 200 } else { 1000 };
    let s = ensemble(2, 5, 2, horizon);
    let inst = Instance::new(&s)?;
    let cfg = default_tuning(Algorithm::Cdch, &PartialConfig::default(), &inst.sizes(), s.seed)?;
    let mut cdch = Cdch::new(&inst.context, &cfg)?;
    let mut adv = Adversary::new(&s);
    let mut rng = stream(s.seed, "learner", 0);
    let mut worst = 0.0f64;
    for t in 1..=horizon {
        let round = adv.step(t, &[]);
        let pred = cdch.predict(&mut rng)?;
        let fb = reveal(cdch.context(), &inst.automaton, &inst.patterns, Regime::Full, &round, &pred)?;
        cdch.update(&pred, fb.feedback())?;
        worst = worst.max(polytope_violation(cdch.context().expect("runs on a context automaton").machine(), cdch.weights()));
    }
    let m = cdch.context().expect("runs on a context automaton").machine().clone();
    let parts = flow_decompose(&m, cdch.weights())?;
    let mut rebuilt = vec![0.0; m.num_transitions()];
    for (p, c) in &parts {
        for &e in &p.0 {
            rebuilt[e] += c;
        }
    }
    let recon = rebuilt.iter().zip(cdch.weights()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let ok = worst <= 1e-8 && recon <= 1e-8 && parts.len() <= m.num_transitions();
    Ok((ok, format!("max violation {worst:e}, decomposition error {recon:e} in {} parts", parts.len())))
}

fn check_covering(_: &VerifyOptions) -> Result<(bool, String)> {
    for (r, n, l) in [(2, 2, 4), (2, 3, 6), (3, 2, 5), (3, 3, 7)] {
        let a = build_ensemble_automaton(&ensemble(r, l, n, 1))?;
        let ca = ContextAutomaton::build(&a, &PatternSet::all_ngrams(&["a", "b"], n)?)?;
        let c = covering_paths(ca.machine());
        if c.paths.len() != r.pow(n as u32) || !c.partition {
            return Ok((false, format!("r={r} n={n} l={l}: {} covering paths", c.paths.len())));
        }
    }
    Ok((true, "ensemble machines split into r^n disjoint covering paths".into()))
}

fn check_sizes(opts: &VerifyOptions) -> Result<(bool, String)> {
    let top = if opts.level == Level::Quick { 5 } else { 7 };
    let mut count = 0;
    for r in [2usize, 3] {
        for n in [2usize, 3] {
            for l in 4..=top {
                let a = build_ensemble_automaton(&ensemble(r, l, n, 1))?;
                let s = ContextAutomaton::build(&a, &PatternSet::all_ngrams(&["a", "b"], n)?)?.sizes();
                let expect = (
                    1 + r.pow(n as u32 - 1) * (l - n + 1),
                    r.pow(n as u32) * (l - n + 1),
                    l - n + 1,
                    (r as u128).pow(l as u32),
                );
                if (s.states, s.transitions, s.longest_path, s.paths) != expect {
                    return Ok((false, format!("r={r} n={n} l={l}: got {s:?}, expected {expect:?}")));
                }
                count += 1;
            }
        }
    }
    Ok((true, format!("states, transitions, longest path and path count exact on {count} ensembles")))
}

fn check_non_additivity(_: &VerifyOptions) -> Result<(bool, String)> {
    let rep = verify_non_additivity(&translation_instance())?;
    Ok((
        rep.gains == [1.0, 0.0, 0.0, 0.0] && !rep.feasible,
        format!("gains {:?}, additive system feasible: {}", rep.gains, rep.feasible),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_level_passes() {
        let out = run_checks(&VerifyOptions::new(Level::Quick));
        assert_eq!(out.len(), CHECKS.len());
        for c in &out {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn sign_flip_breaks_additivity() {
        let opts = VerifyOptions {
            level: Level::Quick,
            flip_edge_gains: true,
        };
        let (ok, _) = check_additivity(&opts).unwrap();
        assert!(!ok);
        let (ok, _) = check_gappy_additivity(&opts).unwrap();
        assert!(!ok);
    }

    #[test]
    fn levels_parse() {
        assert_eq!("quick".parse::<Level>().unwrap(), Level::Quick);
        assert_eq!(Level::Full.to_string(), "full");
        assert!("slow".parse::<Level>().is_err());
    }
}
