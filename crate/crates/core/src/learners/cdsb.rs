use rand::{Rng, RngCore};

use super::covering::{covering_paths, Covering};
use super::distribution::EdgeDistribution;
use super::{
    check_cap, check_feedback, format_weights, parse_weights, read_snapshot, write_snapshot, Algorithm, Feedback,
    Learner, LearnerConfig, Prediction,
};
use crate::automata::Path;
use crate::contextual::ContextAutomaton;
use crate::error::{Error, Result};

/// Semi-bandit learner: exponential weights on transitions fed with
/// importance-weighted gains, exploring along a set of covering paths.
#[derive(Debug, Clone)]
pub struct Cdsb {
    ca: ContextAutomaton,
    dist: EdgeDistribution,
    cover: Covering,
    cover_freq: Vec<f64>,
    eta: f64,
    beta: f64,
    gamma: f64,
    cap: f64,
    rounds: usize,
}

impl Cdsb {
    pub fn new(ca: &ContextAutomaton, cfg: &LearnerConfig) -> Result<Self> {
        let m = ca.machine();
        let cover = covering_paths(m);
        let cover_freq = cover.edge_frequencies(m.num_transitions());
        Ok(Cdsb {
            ca: ca.clone(),
            dist: EdgeDistribution::uniform(m)?,
            cover,
            cover_freq,
            eta: cfg.learning_rate,
            beta: cfg.exploration_bonus,
            gamma: cfg.mixing_rate,
            cap: cfg.gain_cap,
            rounds: 0,
        })
    }

    pub fn covering(&self) -> &Covering {
        &self.cover
    }

    pub fn distribution(&self) -> &EdgeDistribution {
        &self.dist
    }

    /// Probability of drawing context path `p` from the exploration mixture.
    pub fn mixture_probability(&self, p: &Path) -> f64 {
        let c = self.cover.paths.len().max(1) as f64;
        let hits = self.cover.paths.iter().filter(|q| *q == p).count() as f64;
        (1.0 - self.gamma) * self.dist.path_probability(p) + self.gamma * hits / c
    }

    /// Probability that the mixture uses each transition.
    pub fn mixture_flow(&self) -> Result<Vec<f64>> {
        let f = self.dist.edge_flow()?;
        Ok(f.iter()
            .zip(&self.cover_freq)
            .map(|(p, c)| (1.0 - self.gamma) * p + self.gamma * c)
            .collect())
    }

    /// Importance-weighted gains of all transitions after playing `played`
    /// and seeing `gains` along it.
    pub fn surrogate(&self, played: &Path, gains: &[f64]) -> Result<Vec<f64>> {
        let q = self.mixture_flow()?;
        let mut g = vec![self.beta; q.len()];
        for (&e, &x) in played.0.iter().zip(gains) {
            g[e] += x;
        }
        g.iter()
            .zip(&q)
            .enumerate()
            .map(|(e, (&g, &q))| if q > 0.0 { Ok(g / q) } else { Err(Error::ZeroFlow(e)) })
            .collect()
    }
}

impl Learner for Cdsb {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Cdsb
    }

    fn context(&self) -> Option<&ContextAutomaton> {
        Some(&self.ca)
    }

    fn predict(&mut self, rng: &mut dyn RngCore) -> Result<Prediction> {
        let u: f64 = rng.random();
        let chosen = if u < self.gamma && !self.cover.paths.is_empty() {
            self.cover.paths[rng.random_range(0..self.cover.paths.len())].clone()
        } else {
            self.dist.sample(rng)?
        };
        Ok(Prediction {
            path: self.ca.representative_path(&chosen)?,
            probability: self.mixture_probability(&chosen),
            context_path: Some(chosen),
        })
    }

    fn update(&mut self, played: &Prediction, feedback: Feedback<'_>) -> Result<()> {
        check_feedback(Algorithm::Cdsb, &feedback)?;
        let Feedback::Semi(gains) = feedback else { unreachable!() };
        let path = played.context_path.as_ref().ok_or(Error::NotAccepting)?;
        if gains.len() != path.len() {
            return Err(Error::Config(format!("expected {} gains along the path, got {}", path.len(), gains.len())));
        }
        for &g in gains {
            check_cap(g, self.cap)?;
        }
        let g = self.surrogate(path, gains)?;
        let factor: Vec<f64> = g.iter().map(|&x| (self.eta * x).exp()).collect();
        self.dist = self.dist.reweighted(&factor)?;
        self.rounds += 1;
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
        write_snapshot(Algorithm::Cdsb, self.rounds, &[format_weights(&self.dist.weights())])
    }

    fn restore(&mut self, snapshot: &str) -> Result<()> {
        let (rounds, body) = read_snapshot(Algorithm::Cdsb, snapshot)?;
        let w = parse_weights(body.first(), self.dist.weights().len())?;
        self.dist = self.dist.with_stochastic_weights(&w)?;
        self.rounds = rounds;
        Ok(())
    }
}
