use rand::RngCore;

use super::{check_cap, check_feedback, read_snapshot, write_snapshot, Algorithm, Feedback, Learner, LearnerConfig, Prediction};
use crate::automata::{intersect, Automaton, Label, Path, WeightedArc, WeightedAutomaton};
use crate::contextual::ContextAutomaton;
use crate::error::{Error, Result};

/// Machine sizes around one multiplicative update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeStep {
    pub before: usize,
    pub update: usize,
    pub after: usize,
}

/// Deterministic machine giving weight `factor` to the path reading exactly
/// `names` and weight one to every other string.
///
/// States `0..=k` follow the path, state `k + 1` is a sink reached by a rho
/// arc from every chain state.
pub fn update_machine<S: AsRef<str>>(names: &[S], factor: f64) -> Result<WeightedAutomaton> {
    let k = names.len();
    let sink = k + 1;
    let mut arcs = Vec::with_capacity(2 * k + 2);
    for (i, n) in names.iter().enumerate() {
        arcs.push(WeightedArc::new(i, i + 1, Label::sym(n.as_ref()), 1.0));
    }
    for q in 0..=sink {
        arcs.push(WeightedArc::new(q, sink, Label::Rho, 1.0));
    }
    let finals = (0..=sink).map(|q| (q, if q == k { factor } else { 1.0 }));
    WeightedAutomaton::new(k + 2, 0, finals, arcs)
}

/// Exponential weights over the paths of the expert automaton, kept as a
/// pushed weighted automaton and updated by intersection.
#[derive(Debug, Clone)]
pub struct Exp3Ag {
    a: Automaton,
    w: WeightedAutomaton,
    eta: f64,
    cap: f64,
    rounds: usize,
    growth: Vec<SizeStep>,
}

impl Exp3Ag {
    pub fn new(a: &Automaton, cfg: &LearnerConfig) -> Result<Self> {
        Ok(Exp3Ag {
            a: a.clone(),
            w: WeightedAutomaton::from_automaton(a).weight_push()?,
            eta: cfg.learning_rate,
            cap: cfg.path_gain_cap,
            rounds: 0,
            growth: Vec::new(),
        })
    }

    pub fn machine(&self) -> &WeightedAutomaton {
        &self.w
    }

    /// Sizes recorded at every non-trivial update.
    pub fn growth(&self) -> &[SizeStep] {
        &self.growth
    }

    /// Probability of drawing the expert path `p`.
    pub fn path_probability(&self, p: &Path) -> f64 {
        let names: Vec<&str> = p.0.iter().map(|&i| self.a.name(i)).collect();
        self.w.path_weight(&names)
    }
}

impl Learner for Exp3Ag {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Exp3Ag
    }

    fn context(&self) -> Option<&ContextAutomaton> {
        None
    }

    fn predict(&mut self, rng: &mut dyn RngCore) -> Result<Prediction> {
        let arcs = self.w.sample_path(rng)?;
        let labels = self.w.labels_of(&arcs);
        let path = self.a.path_from_names(&labels).ok_or(Error::NotAccepting)?;
        Ok(Prediction {
            probability: self.w.path_weight(&labels),
            path,
            context_path: None,
        })
    }

    fn update(&mut self, played: &Prediction, feedback: Feedback<'_>) -> Result<()> {
        check_feedback(Algorithm::Exp3Ag, &feedback)?;
        let Feedback::Bandit(gain) = feedback else { unreachable!() };
        check_cap(gain, self.cap)?;
        self.rounds += 1;
        if gain == 0.0 || self.eta == 0.0 {
            return Ok(());
        }
        let names: Vec<&str> = played.path.0.iter().map(|&i| self.a.name(i)).collect();
        let p = self.w.path_weight(&names);
        if !(p > 0.0) {
            return Err(Error::ZeroFlow(0));
        }
        let v = update_machine(&names, (self.eta * gain / p).exp())?;
        let next = intersect(&self.w, &v)?.weight_push()?;
        self.growth.push(SizeStep {
            before: self.w.size(),
            update: v.size(),
            after: next.size(),
        });
        self.w = next;
        Ok(())
    }

    fn play_probabilities(&self, paths: &[Path]) -> Result<Vec<f64>> {
        Ok(paths.iter().map(|p| self.path_probability(p)).collect())
    }

    fn snapshot(&self) -> String {
        write_snapshot(Algorithm::Exp3Ag, self.rounds, &[self.w.to_string()])
    }

    fn restore(&mut self, snapshot: &str) -> Result<()> {
        let (rounds, body) = read_snapshot(Algorithm::Exp3Ag, snapshot)?;
        let w: WeightedAutomaton = body.join("\n").parse().map_err(|e: Error| Error::Snapshot(e.to_string()))?;
        if !w.is_stochastic() {
            return Err(Error::Snapshot("machine is not stochastic".into()));
        }
        self.w = w;
        self.rounds = rounds;
        self.growth.clear();
        Ok(())
    }
}
