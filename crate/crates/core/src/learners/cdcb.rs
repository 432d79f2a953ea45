use nalgebra::DVector;
use rand::{Rng, RngCore};

use super::cooccurrence::{pair_probabilities, pseudo_inverse, CooccurrenceModel};
use super::distribution::EdgeDistribution;
use super::{
    check_cap, check_feedback, format_weights, parse_weights, read_snapshot, write_snapshot, Algorithm, Feedback,
    Learner, LearnerConfig, Prediction,
};
use crate::automata::Path;
use crate::contextual::ContextAutomaton;
use crate::error::{Error, Result};

/// Bandit learner estimating all transition gains from one scalar through
/// the pseudo-inverse of the path co-occurrence matrix.
#[derive(Debug, Clone)]
pub struct Cdcb {
    ca: ContextAutomaton,
    dist: EdgeDistribution,
    mu: EdgeDistribution,
    uniform_model: CooccurrenceModel,
    eta: f64,
    gamma: f64,
    cap: f64,
    rounds: usize,
}

impl Cdcb {
    pub fn new(ca: &ContextAutomaton, cfg: &LearnerConfig) -> Result<Self> {
        let m = ca.machine();
        Ok(Cdcb {
            ca: ca.clone(),
            dist: EdgeDistribution::uniform(m)?,
            mu: EdgeDistribution::uniform(m)?,
            uniform_model: CooccurrenceModel::uniform(m)?,
            eta: cfg.learning_rate,
            gamma: cfg.mixing_rate,
            cap: cfg.path_gain_cap,
            rounds: 0,
        })
    }

    pub fn distribution(&self) -> &EdgeDistribution {
        &self.dist
    }

    /// Co-occurrence model of the exploration distribution.
    pub fn uniform_model(&self) -> &CooccurrenceModel {
        &self.uniform_model
    }

    pub fn mixture_probability(&self, p: &Path) -> f64 {
        (1.0 - self.gamma) * self.dist.path_probability(p) + self.gamma * self.mu.path_probability(p)
    }

    /// Second moment of the transition indicators under the current mixture.
    pub fn mixture_moment(&self) -> Result<nalgebra::DMatrix<f64>> {
        let own = pair_probabilities(self.dist.machine())?;
        Ok(own * (1.0 - self.gamma) + &self.uniform_model.matrix * self.gamma)
    }

    /// Estimated gain of every transition after `played` earned `gain`.
    pub fn surrogate(&self, played: &Path, gain: f64) -> Result<Vec<f64>> {
        let m = self.ca.machine().num_transitions();
        let (pinv, _, _) = pseudo_inverse(&self.mixture_moment()?);
        let v = DVector::from_vec(played.indicator(m));
        Ok((pinv * v * gain).iter().copied().collect())
    }
}

impl Learner for Cdcb {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Cdcb
    }

    fn context(&self) -> Option<&ContextAutomaton> {
        Some(&self.ca)
    }

    fn predict(&mut self, rng: &mut dyn RngCore) -> Result<Prediction> {
        let u: f64 = rng.random();
        let chosen = if u < self.gamma { self.mu.sample(rng)? } else { self.dist.sample(rng)? };
        Ok(Prediction {
            path: self.ca.representative_path(&chosen)?,
            probability: self.mixture_probability(&chosen),
            context_path: Some(chosen),
        })
    }

    fn update(&mut self, played: &Prediction, feedback: Feedback<'_>) -> Result<()> {
        check_feedback(Algorithm::Cdcb, &feedback)?;
        let Feedback::Bandit(gain) = feedback else { unreachable!() };
        if self.cap.is_finite() {
            check_cap(gain, self.cap)?;
        }
        self.rounds += 1;
        if gain == 0.0 {
            return Ok(());
        }
        let path = played.context_path.as_ref().ok_or(Error::NotAccepting)?;
        let g = self.surrogate(path, gain)?;
        let factor: Vec<f64> = g.iter().map(|&x| (self.eta * x).exp()).collect();
        self.dist = self.dist.reweighted(&factor)?;
        Ok(())
    }

    fn play_probabilities(&self, paths: &[Path]) -> Result<Vec<f64>> {
        paths
            .iter()
            .map(|p| {
                let q = self.ca.map_path(p)?;
                let canonical = self.ca.representative_path(&q)?;
                Ok(if &canonical == p { self.mixture_probability(&q) } else { 0.0 })
            })
            .collect()
    }

    fn snapshot(&self) -> String {
        write_snapshot(Algorithm::Cdcb, self.rounds, &[format_weights(&self.dist.weights())])
    }

    fn restore(&mut self, snapshot: &str) -> Result<()> {
        let (rounds, body) = read_snapshot(Algorithm::Cdcb, snapshot)?;
        let w = parse_weights(body.first(), self.dist.weights().len())?;
        self.dist = self.dist.with_stochastic_weights(&w)?;
        self.rounds = rounds;
        Ok(())
    }
}
