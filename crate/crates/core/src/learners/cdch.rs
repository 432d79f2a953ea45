use std::collections::HashMap;

use rand::{Rng, RngCore};

use super::flow::{flow_decompose, re_project, uniform_flow};
use super::{
    check_cap, check_feedback, format_weights, parse_weights, pick_by_weight, read_snapshot, write_snapshot, Algorithm,
    Feedback, Learner, LearnerConfig, Prediction,
};
use crate::automata::Path;
use crate::contextual::ContextAutomaton;
use crate::error::{Error, Result};

/// Full-information learner keeping a point of the unit-flow polytope of
/// the (length-equalized) context automaton.
#[derive(Debug, Clone)]
pub struct Cdch {
    ca: ContextAutomaton,
    w: Vec<f64>,
    eta: f64,
    cap: f64,
    rounds: usize,
}

impl Cdch {
    pub fn new(ca: &ContextAutomaton, cfg: &LearnerConfig) -> Result<Self> {
        let ca = ca.equalized()?;
        let w = uniform_flow(ca.machine());
        Ok(Cdch {
            ca,
            w,
            eta: cfg.learning_rate,
            cap: cfg.gain_cap,
            rounds: 0,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    /// The current point written as a mixture of context paths.
    pub fn decomposition(&self) -> Result<Vec<(Path, f64)>> {
        flow_decompose(self.ca.machine(), &self.w)
    }
}

impl Learner for Cdch {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Cdch
    }

    fn context(&self) -> Option<&ContextAutomaton> {
        Some(&self.ca)
    }

    fn predict(&mut self, rng: &mut dyn RngCore) -> Result<Prediction> {
        let parts = self.decomposition()?;
        let u: f64 = rng.random();
        let k = pick_by_weight(parts.iter().map(|p| p.1), u);
        let chosen = parts.get(k).map_or_else(|| Path(Vec::new()), |p| p.0.clone());
        let probability = parts.iter().filter(|p| p.0 == chosen).map(|p| p.1).sum();
        Ok(Prediction {
            path: self.ca.representative_path(&chosen)?,
            context_path: Some(chosen),
            probability,
        })
    }

    fn update(&mut self, _played: &Prediction, feedback: Feedback<'_>) -> Result<()> {
        check_feedback(Algorithm::Cdch, &feedback)?;
        let Feedback::Full(gains) = feedback else { unreachable!() };
        if gains.len() != self.w.len() {
            return Err(Error::Config(format!("expected {} transition gains, got {}", self.w.len(), gains.len())));
        }
        for &g in gains {
            check_cap(g, self.cap)?;
        }
        let w_hat: Vec<f64> = self
            .w
            .iter()
            .zip(gains)
            .map(|(&w, &g)| w * (-self.eta * (self.cap - g)).exp())
            .collect();
        self.w = re_project(self.ca.machine(), &w_hat)?;
        self.rounds += 1;
        Ok(())
    }

    fn play_probabilities(&self, paths: &[Path]) -> Result<Vec<f64>> {
        let mut by_path: HashMap<Path, f64> = HashMap::new();
        for (p, c) in self.decomposition()? {
            *by_path.entry(self.ca.representative_path(&p)?).or_default() += c;
        }
        Ok(paths.iter().map(|p| by_path.get(p).copied().unwrap_or(0.0)).collect())
    }

    fn snapshot(&self) -> String {
        write_snapshot(Algorithm::Cdch, self.rounds, &[format_weights(&self.w)])
    }

    fn restore(&mut self, snapshot: &str) -> Result<()> {
        let (rounds, body) = read_snapshot(Algorithm::Cdch, snapshot)?;
        self.w = parse_weights(body.first(), self.w.len())?;
        self.rounds = rounds;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::Automaton;
    use crate::contextual::PatternSet;
    use crate::learners::flow::polytope_violation;
    use crate::rng::stream;

    fn ensemble(r: usize, l: usize) -> Automaton {
        let names: Vec<String> = (0..l).flat_map(|i| (0..r).map(move |j| format!("h{j}_{i}"))).collect();
        let edges: Vec<(usize, usize, &str)> = (0..l * r).map(|k| (k / r, k / r + 1, names[k].as_str())).collect();
        Automaton::from_edges(0, &[l], &edges).unwrap()
    }

    fn cfg(eta: f64, cap: f64) -> LearnerConfig {
        LearnerConfig {
            algorithm: Algorithm::Cdch,
            learning_rate: eta,
            mixing_rate: 0.0,
            exploration_bonus: 0.0,
            gain_cap: cap,
            path_gain_cap: f64::NAN,
            horizon: 10,
            seed: 0,
            confidence: 0.1,
        }
    }

    fn learner(r: usize, l: usize, eta: f64) -> Cdch {
        let ps = PatternSet::all_ngrams(&["a", "b"], 2).unwrap();
        let ca = ContextAutomaton::build(&ensemble(r, l), &ps).unwrap();
        Cdch::new(&ca, &cfg(eta, 5.0)).unwrap()
    }

    #[test]
    fn starts_uniform_on_ensemble() {
        let c = learner(2, 4, 0.1);
        assert!(c.weights().iter().all(|&w| (w - 0.25).abs() < 1e-15));
        let c = learner(3, 4, 0.1);
        assert!(c.weights().iter().all(|&w| (w - 1.0 / 9.0).abs() < 1e-15));
    }

    #[test]
    fn equal_gains_and_zero_rate_leave_state_alone() {
        let mut c = learner(2, 4, 0.3);
        let before = c.weights().to_vec();
        let p = c.predict(&mut stream(1, "t", 0)).unwrap();
        c.update(&p, Feedback::Full(&vec![2.0; before.len()])).unwrap();
        for (a, b) in c.weights().iter().zip(&before) {
            assert!((a - b).abs() < 1e-8);
        }
        let mut z = learner(2, 4, 0.0);
        let gains: Vec<f64> = (0..before.len()).map(|i| (i % 5) as f64).collect();
        z.update(&p, Feedback::Full(&gains)).unwrap();
        assert_eq!(z.weights(), &before[..]);
    }

    #[test]
    fn stays_in_polytope_and_learns() {
        let mut c = learner(2, 4, 0.5);
        let m = c.ca.machine().num_transitions();
        let mut rng = stream(3, "t", 0);
        // transition 0 always pays
        let gains: Vec<f64> = (0..m).map(|i| if i == 0 { 5.0 } else { 0.0 }).collect();
        for _ in 0..200 {
            let p = c.predict(&mut rng).unwrap();
            c.update(&p, Feedback::Full(&gains)).unwrap();
            assert!(polytope_violation(c.ca.machine(), c.weights()) < 1e-8);
        }
        assert!(c.weights()[0] > 0.99);
    }

    #[test]
    fn rejects_wrong_feedback_and_large_gains() {
        let mut c = learner(2, 3, 0.1);
        let p = c.predict(&mut stream(1, "t", 0)).unwrap();
        assert!(matches!(c.update(&p, Feedback::Bandit(1.0)), Err(Error::RegimeMismatch { .. })));
        let m = c.weights().len();
        assert!(matches!(c.update(&p, Feedback::Full(&vec![6.0; m])), Err(Error::GainExceedsCap { .. })));
    }

    #[test]
    fn snapshot_round_trip() {
        let mut c = learner(2, 4, 0.4);
        let mut rng = stream(5, "t", 0);
        let m = c.weights().len();
        for t in 0..5 {
            let p = c.predict(&mut rng).unwrap();
            let g: Vec<f64> = (0..m).map(|i| ((i + t) % 3) as f64).collect();
            c.update(&p, Feedback::Full(&g)).unwrap();
        }
        let s = c.snapshot();
        let mut fresh = learner(2, 4, 0.4);
        fresh.restore(&s).unwrap();
        assert_eq!(fresh.weights(), c.weights());
        assert_eq!(fresh.snapshot(), s);
        assert!(matches!(fresh.restore("junk"), Err(Error::Snapshot(_))));
    }

    #[test]
    fn play_probabilities_sum_to_one() {
        let c = learner(2, 3, 0.1);
        let paths = c.ca.source().enumerate_paths(100).unwrap();
        let p = c.play_probabilities(&paths).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
