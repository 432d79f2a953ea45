use serde::{Deserialize, Serialize};

use super::adversary::AdversaryModel;
use crate::automata::{Automaton, Path};
use crate::contextual::{ContextAutomaton, PatternSet};
use crate::error::{Error, Result};
use crate::learners::{covering_paths, CooccurrenceModel, InstanceSizes};

/// Most expert paths the harness will enumerate for exact expected gains.
pub const MAX_ENUMERATED_PATHS: usize = 1 << 16;

/// An ensemble prediction problem: `experts` predictors each emit one symbol
/// per position of a length-`substructures` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub experts: usize,
    pub substructures: usize,
    /// Length of the contiguous patterns the gain counts.
    pub order: usize,
    pub alphabet: Vec<String>,
    #[serde(default)]
    pub adversary: AdversaryModel,
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.experts == 0 {
            return bad("experts must be at least 1".into());
        }
        if self.substructures == 0 {
            return bad("substructures must be at least 1".into());
        }
        if self.order == 0 || self.order > self.substructures {
            return bad(format!("order must lie in 1..={}", self.substructures));
        }
        if self.alphabet.is_empty() {
            return bad("alphabet is empty".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.alphabet {
            if s.is_empty() || s.chars().any(char::is_whitespace) || !seen.insert(s) {
                return bad(format!("bad or repeated alphabet symbol `{s}`"));
            }
        }
        Ok(())
    }
}

/// Name of the transition of expert `j` at position `i` (both 1-based).
pub fn expert_name(j: usize, i: usize) -> String {
    format!("h{j}_{i}")
}

/// Chain of `substructures + 1` states with one transition per expert
/// between consecutive states. Transition `(i - 1) r + (j - 1)` belongs to
/// expert `j` at position `i`.
pub fn build_ensemble_automaton(spec: &EnsembleSpec) -> Result<Automaton> {
    let (r, l) = (spec.experts, spec.substructures);
    if r == 0 || l == 0 {
        return Err(Error::Config("ensemble needs at least one expert and one position".into()));
    }
    let names: Vec<String> = (1..=l).flat_map(|i| (1..=r).map(move |j| expert_name(j, i))).collect();
    let edges: Vec<(usize, usize, &str)> = names.iter().enumerate().map(|(k, n)| (k / r, k / r + 1, n.as_str())).collect();
    Automaton::from_edges(0, &[l], &edges)
}

/// Everything derived once per experiment.
#[derive(Debug, Clone)]
pub struct Instance {
    pub spec: EnsembleSpec,
    pub automaton: Automaton,
    pub patterns: PatternSet,
    pub context: ContextAutomaton,
    /// Largest gain one context transition can carry.
    pub edge_gain_cap: f64,
    /// Largest gain one path can carry.
    pub path_gain_cap: f64,
    pub covering_paths: usize,
    pub lambda_min: f64,
    /// Every expert path, with its context path.
    pub paths: Vec<Path>,
    pub context_paths: Vec<Path>,
}

impl Instance {
    pub fn new(spec: &EnsembleSpec) -> Result<Self> {
        spec.validate()?;
        let automaton = build_ensemble_automaton(spec)?;
        let patterns = PatternSet::all_ngrams(&spec.alphabet, spec.order)?;
        let context = ContextAutomaton::build_direct(&automaton, &patterns)?;
        let k = context.machine().sizes().longest_path;
        // Each context transition emits one symbol, and a target of length l
        // holds any contiguous pattern at most l - n + 1 times.
        let edge_gain_cap = (spec.substructures - spec.order + 1) as f64;
        let paths = automaton.enumerate_paths(MAX_ENUMERATED_PATHS)?;
        let context_paths = paths.iter().map(|p| context.map_path(p)).collect::<Result<Vec<_>>>()?;
        Ok(Instance {
            spec: spec.clone(),
            edge_gain_cap,
            path_gain_cap: k as f64 * edge_gain_cap,
            covering_paths: covering_paths(context.machine()).paths.len(),
            lambda_min: CooccurrenceModel::uniform(context.machine())?.lambda_min,
            automaton,
            patterns,
            context,
            paths,
            context_paths,
        })
    }

    /// Sizes used for default tunings and bounds: K, M, N and |C| refer to
    /// the context automaton.
    pub fn sizes(&self) -> InstanceSizes {
        let s = self.context.machine().sizes();
        InstanceSizes {
            horizon: Some(self.spec.horizon),
            longest_path: Some(s.longest_path),
            transitions: Some(s.transitions),
            paths: Some(s.paths as f64),
            covering_paths: Some(self.covering_paths),
            lambda_min: Some(self.lambda_min),
            gain_cap: Some(self.edge_gain_cap),
            path_gain_cap: Some(self.path_gain_cap),
        }
    }

    /// Expert path as `name-name-...`.
    pub fn path_string(&self, p: &Path) -> String {
        p.0.iter().map(|&i| self.automaton.name(i)).collect::<Vec<_>>().join("-")
    }
}
