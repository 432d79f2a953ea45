use nalgebra::{DMatrix, SymmetricEigen};

use crate::automata::{Automaton, Direction, WeightedAutomaton};
use crate::error::Result;

/// Relative eigenvalue threshold below which the spectrum counts as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Second moment of the transition-indicator vector of a random path,
/// with its pseudo-inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceModel {
    pub matrix: DMatrix<f64>,
    pub pinv: DMatrix<f64>,
    /// Smallest eigenvalue counted as non-zero.
    pub lambda_min: f64,
    pub rank: usize,
}

impl CooccurrenceModel {
    /// Under the uniform distribution over accepting paths.
    pub fn uniform(a: &Automaton) -> Result<Self> {
        Ok(CooccurrenceModel::from_matrix(pair_probabilities(&WeightedAutomaton::from_automaton(a))?))
    }

    pub fn from_matrix(matrix: DMatrix<f64>) -> Self {
        let (pinv, lambda_min, rank) = pseudo_inverse(&matrix);
        CooccurrenceModel {
            matrix,
            pinv,
            lambda_min,
            rank,
        }
    }
}

/// Moore-Penrose inverse of a symmetric matrix through its eigenvectors;
/// also returns the smallest retained eigenvalue and the rank.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> (DMatrix<f64>, f64, usize) {
    let n = m.nrows();
    if n == 0 {
        return (DMatrix::zeros(0, 0), 0.0, 0);
    }
    let eig = SymmetricEigen::new(m.clone());
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let cut = RANK_TOL * top;
    let mut pinv = DMatrix::zeros(n, n);
    let mut lambda_min = f64::INFINITY;
    let mut rank = 0;
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l > cut {
            let u = eig.eigenvectors.column(k);
            pinv += (u * u.transpose()) / l;
            lambda_min = lambda_min.min(l);
            rank += 1;
        }
    }
    (pinv, if rank == 0 { 0.0 } else { lambda_min }, rank)
}

/// `[e][f]` = probability that a path drawn with probability proportional
/// to its weight uses both arcs `e` and `f`.
///
/// Two arcs share a path only if one can reach the other, so each entry is
/// a forward weight, the two arc weights, the total weight of the segment
/// between them and a backward weight.
pub fn pair_probabilities(w: &WeightedAutomaton) -> Result<DMatrix<f64>> {
    let fwd = w.shortest_distance(Direction::Forward)?;
    let bwd = w.shortest_distance(Direction::Backward)?;
    let z = bwd[w.initial()];
    let n = w.num_states();
    let arcs = w.arcs();
    let m = arcs.len();
    let mut out = DMatrix::zeros(m, m);
    if z <= 0.0 {
        return Ok(out);
    }
    // reach[u][v]: total weight of paths from u to v
    let topo = topo(w);
    let mut reach = vec![vec![0.0; n]; n];
    for u in 0..n {
        reach[u][u] = 1.0;
        for &q in &topo {
            let r = reach[u][q];
            if r == 0.0 {
                continue;
            }
            for &i in w.outgoing(q) {
                reach[u][arcs[i].dst] += r * arcs[i].weight;
            }
        }
    }
    for e in 0..m {
        let a = &arcs[e];
        let lead = fwd[a.src] * a.weight;
        out[(e, e)] = lead * bwd[a.dst] / z;
        for f in 0..m {
            let b = &arcs[f];
            let r = reach[a.dst][b.src];
            if f != e && r > 0.0 {
                let v = lead * r * b.weight * bwd[b.dst] / z;
                out[(e, f)] = v;
                out[(f, e)] = v;
            }
        }
    }
    Ok(out)
}

fn topo(w: &WeightedAutomaton) -> Vec<usize> {
    let n = w.num_states();
    let mut indeg = vec![0usize; n];
    for a in w.arcs() {
        indeg[a.dst] += 1;
    }
    let mut order: Vec<usize> = (0..n).filter(|&q| indeg[q] == 0).collect();
    let mut k = 0;
    while k < order.len() {
        let q = order[k];
        k += 1;
        for &i in w.outgoing(q) {
            let d = w.arcs()[i].dst;
            indeg[d] -= 1;
            if indeg[d] == 0 {
                order.push(d);
            }
        }
    }
    order
}
