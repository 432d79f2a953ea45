//! Points of the unit-flow polytope of an acyclic automaton: unit outflow
//! at the initial state, conservation at every other non-final state.

use crate::automata::{Automaton, Path};
use crate::error::{Error, Result};

pub const PROJECTION_TOL: f64 = 1e-9;
pub const MAX_SWEEPS: usize = 100_000;
/// Largest violation accepted by [`flow_decompose`].
pub const MEMBERSHIP_TOL: f64 = 1e-8;

fn incoming(m: &Automaton) -> Vec<Vec<usize>> {
    let mut inc = vec![Vec::new(); m.num_states()];
    for (i, t) in m.transitions().iter().enumerate() {
        inc[t.dst].push(i);
    }
    inc
}

fn conserving_states(m: &Automaton) -> impl Iterator<Item = usize> + '_ {
    (0..m.num_states()).filter(move |&q| q != m.initial() && !m.is_final(q))
}

/// Largest violation of any polytope constraint, negativity included.
pub fn polytope_violation(m: &Automaton, w: &[f64]) -> f64 {
    let inc = incoming(m);
    let sum = |idx: &[usize]| idx.iter().map(|&i| w[i]).sum::<f64>();
    let mut v = (sum(m.outgoing(m.initial())) - 1.0).abs();
    for q in conserving_states(m) {
        v = v.max((sum(&inc[q]) - sum(m.outgoing(q))).abs());
    }
    w.iter().fold(v, |v, &x| v.max(-x))
}

/// Flow obtained by splitting the mass reaching each state evenly among
/// its outgoing transitions (and stopping, at final states that continue).
pub fn uniform_flow(m: &Automaton) -> Vec<f64> {
    let mut mass = vec![0.0; m.num_states()];
    mass[m.initial()] = 1.0;
    let mut w = vec![0.0; m.num_transitions()];
    for &q in m.topo_order() {
        let out = m.outgoing(q);
        if out.is_empty() {
            continue;
        }
        let share = mass[q] / (out.len() + usize::from(m.is_final(q))) as f64;
        for &i in out {
            w[i] = share;
            mass[m.transition(i).dst] += share;
        }
    }
    w
}

/// Relative-entropy projection of a positive vector onto the polytope,
/// by cyclic exact projections onto one constraint at a time.
pub fn re_project(m: &Automaton, w_hat: &[f64]) -> Result<Vec<f64>> {
    let mut w = w_hat.to_vec();
    let inc = incoming(m);
    let inner: Vec<usize> = conserving_states(m).collect();
    let init_out = m.outgoing(m.initial());
    for _ in 0..MAX_SWEEPS {
        if polytope_violation(m, &w) < PROJECTION_TOL {
            return Ok(w);
        }
        let s: f64 = init_out.iter().map(|&i| w[i]).sum();
        if s > 0.0 {
            for &i in init_out {
                w[i] /= s;
            }
        }
        for &q in &inner {
            let fin: f64 = inc[q].iter().map(|&i| w[i]).sum();
            let fout: f64 = m.outgoing(q).iter().map(|&i| w[i]).sum();
            if fin <= 0.0 || fout <= 0.0 {
                continue;
            }
            let r = (fout / fin).sqrt();
            for &i in &inc[q] {
                w[i] *= r;
            }
            for &i in m.outgoing(q) {
                w[i] /= r;
            }
        }
    }
    let violation = polytope_violation(m, &w);
    if violation < PROJECTION_TOL {
        Ok(w)
    } else {
        Err(Error::NoConvergence {
            sweeps: MAX_SWEEPS,
            violation,
        })
    }
}

/// Writes a polytope point as a convex combination of accepting paths.
///
/// Each step follows the heaviest remaining transition out of every state
/// and removes the smallest weight found along the way, so at least one
/// transition drops to zero per component.
pub fn flow_decompose(m: &Automaton, w: &[f64]) -> Result<Vec<(Path, f64)>> {
    let violation = polytope_violation(m, w);
    if violation > MEMBERSHIP_TOL {
        return Err(Error::NotInPolytope(violation));
    }
    const ZERO: f64 = 1e-12;
    let mut r: Vec<f64> = w.iter().map(|&x| x.max(0.0)).collect();
    let mut parts = Vec::new();
    let init_out = m.outgoing(m.initial()).to_vec();
    let mut guard = 0;
    while init_out.iter().map(|&i| r[i]).sum::<f64>() > ZERO && guard <= 2 * m.num_transitions() {
        guard += 1;
        let mut q = m.initial();
        let mut path = Vec::new();
        let mut stuck = false;
        while !(m.is_final(q) && (m.outgoing(q).is_empty() || path_ends_here(m, &r, q))) {
            let best = m
                .outgoing(q)
                .iter()
                .copied()
                .filter(|&i| r[i] > ZERO)
                .fold(None, |b: Option<usize>, i| match b {
                    Some(j) if r[j] >= r[i] => Some(j),
                    _ => Some(i),
                });
            match best {
                Some(i) => {
                    path.push(i);
                    q = m.transition(i).dst;
                }
                None => {
                    stuck = true;
                    break;
                }
            }
        }
        if stuck {
            // numerical residue only: drop the transition that led here
            match path.last() {
                Some(&i) => r[i] = 0.0,
                None => break,
            }
            continue;
        }
        if path.is_empty() {
            break;
        }
        let (arg, c) = path
            .iter()
            .map(|&i| (i, r[i]))
            .fold((path[0], f64::INFINITY), |b, x| if x.1 < b.1 { x } else { b });
        for &i in &path {
            r[i] -= c;
        }
        r[arg] = 0.0;
        parts.push((Path(path), c));
    }
    Ok(parts)
}

/// At a final state that also continues, stop once the outflow left there
/// is smaller than the inflow left (the difference is the mass ending here).
fn path_ends_here(m: &Automaton, r: &[f64], q: usize) -> bool {
    let out: f64 = m.outgoing(q).iter().map(|&i| r[i]).sum();
    let inflow: f64 = m
        .transitions()
        .iter()
        .enumerate()
        .filter(|(_, t)| t.dst == q)
        .map(|(i, _)| r[i])
        .sum();
    q != m.initial() && inflow > out + 1e-12 || out <= 1e-12
}
