use rand::Rng;

use crate::automata::{Automaton, Path, WeightedAutomaton};
use crate::error::{Error, Result};

/// Stochastic weights on the transitions of an automaton; the probability
/// of a path is the product of its weights (times the stopping weight of
/// its last state).
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeDistribution {
    machine: WeightedAutomaton,
}

impl EdgeDistribution {
    /// Uniform over accepting paths.
    pub fn uniform(a: &Automaton) -> Result<Self> {
        Self::from_weights(a, &vec![1.0; a.num_transitions()])
    }

    /// Normalizes arbitrary positive weights by weight pushing.
    pub fn from_weights(a: &Automaton, w: &[f64]) -> Result<Self> {
        Self::push(WeightedAutomaton::from_automaton_weighted(a, w)?)
    }

    fn push(raw: WeightedAutomaton) -> Result<Self> {
        let pushed = raw.weight_push()?;
        if pushed.arcs().len() != raw.arcs().len() {
            // a transition lost all its mass; indices would no longer line up
            return Err(Error::ZeroTotalMass);
        }
        Ok(EdgeDistribution { machine: pushed })
    }

    /// Installs already normalized weights verbatim.
    pub fn with_stochastic_weights(&self, w: &[f64]) -> Result<Self> {
        let machine = self.machine.with_weights(w)?;
        if !machine.is_stochastic() {
            return Err(Error::NotStochastic);
        }
        Ok(EdgeDistribution { machine })
    }

    /// Multiplies each transition weight by `factor[i]` and renormalizes.
    pub fn reweighted(&self, factor: &[f64]) -> Result<Self> {
        let w: Vec<f64> = self.machine.weights().iter().zip(factor).map(|(a, b)| a * b).collect();
        Self::push(self.machine.with_weights(&w)?)
    }

    pub fn machine(&self) -> &WeightedAutomaton {
        &self.machine
    }

    pub fn weights(&self) -> Vec<f64> {
        self.machine.weights()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Path> {
        self.machine.sample_path(rng)
    }

    pub fn path_probability(&self, p: &Path) -> f64 {
        let arcs = self.machine.arcs();
        let mut q = self.machine.initial();
        let mut prob = 1.0;
        for &i in &p.0 {
            prob *= arcs[i].weight;
            q = arcs[i].dst;
        }
        prob * self.machine.final_weight(q).unwrap_or(0.0)
    }

    /// Probability that a sampled path uses each transition.
    pub fn edge_flow(&self) -> Result<Vec<f64>> {
        self.machine.edge_flow()
    }
}
