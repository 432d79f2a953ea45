use nalgebra::{DMatrix, DVector};

use crate::automata::{Automaton, Path};
use crate::contextual::{path_gain_oracle, PatternSet};
use crate::error::{Error, Result};

/// Residual above which a linear system counts as infeasible.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// An expert automaton with fixed outputs, a target, and the paths whose
/// gains are tested for an additive explanation.
#[derive(Debug, Clone)]
pub struct AdditivityInstance {
    pub automaton: Automaton,
    pub out: Vec<String>,
    pub y: Vec<String>,
    pub patterns: PatternSet,
    pub paths: Vec<Path>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdditivityReport {
    /// Gain of each tested path.
    pub gains: Vec<f64>,
    /// Least-squares residual of "path gain = sum of transition gains".
    pub residual: f64,
    pub feasible: bool,
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

/// Two translators over six positions. The first writes "He would like to
/// have tea", the second "She would love to drink chai"; the target is "He
/// would like to eat cake". The four tested paths switch the first and third
/// words between translators. Patterns are every 4-gram of the three
/// sentences.
pub fn translation_instance() -> AdditivityInstance {
    let top = words("He would like to have tea");
    let bottom = words("She would love to drink chai");
    let y = words("He would like to eat cake");
    let names: Vec<String> = (1..=6).flat_map(|i| [format!("h1_{i}"), format!("h2_{i}")]).collect();
    let edges: Vec<(usize, usize, &str)> = names.iter().enumerate().map(|(k, n)| (k / 2, k / 2 + 1, n.as_str())).collect();
    let automaton = Automaton::from_edges(0, &[6], &edges).expect("chain is valid");
    let out = (0..6).flat_map(|i| [top[i].clone(), bottom[i].clone()]).collect();
    let mut patterns: Vec<Vec<String>> = Vec::new();
    for w in [&top, &bottom, &y] {
        for g in w.windows(4) {
            if !patterns.contains(&g.to_vec()) {
                patterns.push(g.to_vec());
            }
        }
    }
    let pick = |first: usize, third: usize| {
        Path((0..6).map(|i| 2 * i + if i == 0 { first } else if i == 2 { third } else { 0 }).collect())
    };
    AdditivityInstance {
        automaton,
        out,
        y,
        patterns: PatternSet::contiguous(patterns).expect("patterns are non-empty"),
        paths: vec![pick(0, 0), pick(1, 0), pick(0, 1), pick(1, 1)],
    }
}

/// Gains of the tested paths and whether any transition gains reproduce
/// them all as sums.
pub fn verify_non_additivity(inst: &AdditivityInstance) -> Result<AdditivityReport> {
    let a = &inst.automaton;
    if inst.paths.iter().any(|p| !a.is_accepting(p)) {
        return Err(Error::NotAccepting);
    }
    let gains: Vec<f64> = inst
        .paths
        .iter()
        .map(|p| path_gain_oracle(a, p, &inst.out, &inst.y, &inst.patterns))
        .collect();
    let m = a.num_transitions();
    let rows = DMatrix::from_fn(inst.paths.len(), m, |r, c| if inst.paths[r].0.contains(&c) { 1.0 } else { 0.0 });
    let b = DVector::from_vec(gains.clone());
    let svd = rows.clone().svd(true, true);
    let x = svd.solve(&b, 1e-12).map_err(|e| Error::Config(e.to_string()))?;
    let residual = (&rows * x - &b).norm();
    Ok(AdditivityReport {
        gains,
        residual,
        feasible: residual <= FEASIBILITY_TOL,
    })
}
