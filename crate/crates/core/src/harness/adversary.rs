use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ensemble::EnsembleSpec;
use crate::automata::Path;
use crate::error::{Error, Result};
use crate::rng::{stream, StreamRng};

/// Probability that a target position is replaced by a uniform symbol.
pub const TARGET_NOISE: f64 = 0.1;

/// Probability that the hidden path follows the favored expert at a position.
pub const FAVORED_PROB: f64 = 0.6;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdversaryModel {
    /// Fixed per-transition symbol distributions and a fixed favored path.
    #[default]
    Iid,
    /// Like `Iid`, but the favored path and every symbol distribution rotate
    /// halfway through the horizon.
    Drifting,
    /// Targets follow experts the learner has played least so far.
    Adaptive,
}

impl fmt::Display for AdversaryModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdversaryModel::Iid => "iid",
            AdversaryModel::Drifting => "drifting",
            AdversaryModel::Adaptive => "adaptive",
        })
    }
}

impl FromStr for AdversaryModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iid" => Ok(AdversaryModel::Iid),
            "drifting" => Ok(AdversaryModel::Drifting),
            "adaptive" => Ok(AdversaryModel::Adaptive),
            _ => Err(Error::Config(format!("unknown adversary `{s}`"))),
        }
    }
}

/// One round's hidden data: the symbol every expert transition outputs, and
/// the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundData {
    pub out: Vec<String>,
    pub y: Vec<String>,
}

/// Generates outputs and targets. Everything random comes from streams of
/// the run seed, so a run replays exactly.
#[derive(Debug, Clone)]
pub struct Adversary {
    model: AdversaryModel,
    experts: usize,
    positions: usize,
    alphabet: Vec<String>,
    horizon: usize,
    /// Cumulative symbol distribution of each expert transition.
    emit: Vec<Vec<f64>>,
    favored: Vec<usize>,
    /// How often the learner played each expert at each position.
    counts: Vec<Vec<usize>>,
    absorbed: usize,
    rng: StreamRng,
}

fn random_cdf(rng: &mut StreamRng, k: usize) -> Vec<f64> {
    // normalized exponentials: a uniform draw from the simplex
    let w: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = w.iter().sum();
    let mut acc = 0.0;
    w.iter()
        .map(|x| {
            acc += x / total;
            acc
        })
        .collect()
}

fn draw(cdf: &[f64], u: f64) -> usize {
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

impl Adversary {
    pub fn new(spec: &EnsembleSpec) -> Self {
        let mut setup = stream(spec.seed, "adversary-setup", 0);
        let (r, l, s) = (spec.experts, spec.substructures, spec.alphabet.len());
        let emit = (0..r * l).map(|_| random_cdf(&mut setup, s)).collect();
        let favored = (0..l).map(|_| setup.random_range(0..r)).collect();
        Adversary {
            model: spec.adversary,
            experts: r,
            positions: l,
            alphabet: spec.alphabet.clone(),
            horizon: spec.horizon,
            emit,
            favored,
            counts: vec![vec![0; r]; l],
            absorbed: 0,
            rng: stream(spec.seed, "adversary", 0),
        }
    }

    pub fn model(&self) -> AdversaryModel {
        self.model
    }

    fn drifted(&self, t: usize) -> bool {
        self.model == AdversaryModel::Drifting && 2 * t > self.horizon
    }

    /// Folds in plays not seen yet. `played` holds the learner's earlier
    /// expert paths, the only thing an adaptive adversary may look at.
    fn absorb(&mut self, played: &[Path]) {
        let r = self.experts;
        for p in played.iter().skip(self.absorbed) {
            for &e in &p.0 {
                self.counts[e / r][e % r] += 1;
            }
        }
        self.absorbed = self.absorbed.max(played.len());
    }

    /// Expert each position's hidden choice leans towards.
    fn leaning(&self, t: usize) -> Vec<usize> {
        let r = self.experts;
        match self.model {
            AdversaryModel::Adaptive if self.absorbed > 0 && r > 1 => self
                .counts
                .iter()
                .map(|c| (0..r).min_by_key(|&j| (c[j], j)).unwrap())
                .collect(),
            _ if self.drifted(t) => self.favored.iter().map(|&j| (j + 1) % r).collect(),
            _ => self.favored.clone(),
        }
    }

    /// Round `t` (1-based) given the learner's earlier plays.
    pub fn step(&mut self, t: usize, played: &[Path]) -> RoundData {
        let (r, s) = (self.experts, self.alphabet.len());
        let shift = usize::from(self.drifted(t));
        let out_idx: Vec<usize> = self
            .emit
            .iter()
            .map(|cdf| (draw(cdf, self.rng.random()) + shift) % s)
            .collect();
        self.absorb(played);
        let lean = self.leaning(t);
        let y = (0..self.positions)
            .map(|i| {
                let j = if self.rng.random::<f64>() < FAVORED_PROB { lean[i] } else { self.rng.random_range(0..r) };
                let mut sym = out_idx[i * r + j];
                if self.rng.random::<f64>() < TARGET_NOISE {
                    sym = self.rng.random_range(0..s);
                }
                self.alphabet[sym].clone()
            })
            .collect();
        RoundData {
            out: out_idx.into_iter().map(|k| self.alphabet[k].clone()).collect(),
            y,
        }
    }
}
