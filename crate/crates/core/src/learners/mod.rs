//! Online learners over the context automaton (full information,
//! semi-bandit, bandit) and over the expert automaton itself (bandit with
//! arbitrary gains), behind one predict/update contract.

mod cdcb;
mod cdch;
mod cdsb;
mod config;
mod cooccurrence;
mod covering;
mod distribution;
mod exp3ag;
mod flow;

use rand::RngCore;

pub use cdcb::Cdcb;
pub use cdch::Cdch;
pub use cdsb::Cdsb;
pub use config::{default_tuning, Algorithm, InstanceSizes, LearnerConfig, PartialConfig, Regime, DEFAULT_CONFIDENCE};
pub use cooccurrence::{pair_probabilities, pseudo_inverse, CooccurrenceModel, RANK_TOL};
pub use covering::{covering_paths, Covering};
pub use distribution::EdgeDistribution;
pub use exp3ag::{update_machine, Exp3Ag, SizeStep};
pub use flow::{flow_decompose, polytope_violation, re_project, uniform_flow, MEMBERSHIP_TOL, PROJECTION_TOL};

use crate::automata::Path;
use crate::contextual::ContextAutomaton;
use crate::error::{Error, Result};

/// One round's decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Path of the expert automaton.
    pub path: Path,
    /// The corresponding path of the learner's context automaton, if any.
    pub context_path: Option<Path>,
    /// Probability with which the learner drew this decision.
    pub probability: f64,
}

/// What is revealed after a round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Feedback<'a> {
    /// Gain of every transition of the context automaton.
    Full(&'a [f64]),
    /// Gains of the transitions of the played context path, in path order.
    Semi(&'a [f64]),
    /// Gain of the played path.
    Bandit(f64),
}

impl Feedback<'_> {
    pub fn regime(&self) -> Regime {
        match self {
            Feedback::Full(_) => Regime::Full,
            Feedback::Semi(_) => Regime::Semi,
            Feedback::Bandit(_) => Regime::Bandit,
        }
    }
}

pub trait Learner {
    fn algorithm(&self) -> Algorithm;

    /// The automaton whose transitions receive gains, for learners that
    /// work on one.
    fn context(&self) -> Option<&ContextAutomaton>;

    fn predict(&mut self, rng: &mut dyn RngCore) -> Result<Prediction>;

    fn update(&mut self, played: &Prediction, feedback: Feedback<'_>) -> Result<()>;

    /// Probability of playing each expert path in the current round.
    fn play_probabilities(&self, paths: &[Path]) -> Result<Vec<f64>>;

    /// Versioned text image of the learner state.
    fn snapshot(&self) -> String;

    fn restore(&mut self, snapshot: &str) -> Result<()>;
}

/// Builds the learner named in `cfg`. `ca` is only used by the learners
/// that run on the context automaton.
pub fn build_learner(cfg: &LearnerConfig, ca: &ContextAutomaton) -> Result<Box<dyn Learner>> {
    cfg.validate()?;
    Ok(match cfg.algorithm {
        Algorithm::Cdch => Box::new(Cdch::new(ca, cfg)?),
        Algorithm::Cdsb => Box::new(Cdsb::new(ca, cfg)?),
        Algorithm::Cdcb => Box::new(Cdcb::new(ca, cfg)?),
        Algorithm::Exp3Ag => Box::new(Exp3Ag::new(ca.source(), cfg)?),
    })
}

pub(crate) fn check_feedback(alg: Algorithm, fb: &Feedback<'_>) -> Result<()> {
    alg.check_regime(fb.regime())
}

pub(crate) fn check_cap(gain: f64, cap: f64) -> Result<()> {
    if gain > cap * (1.0 + 1e-12) || gain.is_nan() {
        Err(Error::GainExceedsCap { gain, cap })
    } else {
        Ok(())
    }
}

const SNAPSHOT_MAGIC: &str = "pathlearn-snapshot 1";

pub(crate) fn write_snapshot(alg: Algorithm, rounds: usize, body: &[String]) -> String {
    let mut s = format!("{SNAPSHOT_MAGIC}\nalgorithm {alg}\nrounds {rounds}\n");
    for l in body {
        s.push_str(l);
        s.push('\n');
    }
    s
}

/// Checks the header and returns the round count and the remaining lines.
pub(crate) fn read_snapshot(alg: Algorithm, text: &str) -> Result<(usize, Vec<&str>)> {
    let bad = |m: &str| Error::Snapshot(m.to_string());
    let mut lines = text.lines();
    if lines.next() != Some(SNAPSHOT_MAGIC) {
        return Err(bad("missing or unsupported version header"));
    }
    let name = lines.next().and_then(|l| l.strip_prefix("algorithm ")).ok_or_else(|| bad("missing algorithm"))?;
    if name != alg.to_string() {
        return Err(bad(&format!("snapshot is for `{name}`, not `{alg}`")));
    }
    let rounds = lines
        .next()
        .and_then(|l| l.strip_prefix("rounds "))
        .and_then(|r| r.parse().ok())
        .ok_or_else(|| bad("missing round count"))?;
    Ok((rounds, lines.collect()))
}

pub(crate) fn format_weights(w: &[f64]) -> String {
    let mut s = String::from("weights");
    for x in w {
        s.push(' ');
        s.push_str(&x.to_string());
    }
    s
}

pub(crate) fn parse_weights(line: Option<&&str>, expected: usize) -> Result<Vec<f64>> {
    let body = line
        .and_then(|l| l.strip_prefix("weights"))
        .ok_or_else(|| Error::Snapshot("missing weights".into()))?;
    let w: Vec<f64> = body
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Snapshot("unreadable weight".into()))?;
    if w.len() != expected {
        return Err(Error::Snapshot(format!("expected {expected} weights, found {}", w.len())));
    }
    Ok(w)
}

/// Index of the part chosen by a uniform draw `u` among positive
/// coefficients summing to about one.
pub(crate) fn pick_by_weight(weights: impl Iterator<Item = f64>, u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            last = i;
        }
        acc += w;
        if u < acc {
            return i;
        }
    }
    last
}
