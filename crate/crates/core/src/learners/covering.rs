use crate::automata::{Automaton, Path};

/// Accepting paths that together use every transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Covering {
    pub paths: Vec<Path>,
    /// Every transition lies on exactly one path.
    pub partition: bool,
}

impl Covering {
    /// Fraction of the paths using each transition.
    pub fn edge_frequencies(&self, num_transitions: usize) -> Vec<f64> {
        let mut f = vec![0.0; num_transitions];
        if self.paths.is_empty() {
            return f;
        }
        let share = 1.0 / self.paths.len() as f64;
        for p in &self.paths {
            for &i in &p.0 {
                f[i] += share;
            }
        }
        f
    }
}

/// Covering paths of an acyclic automaton.
///
/// First tries to peel off paths made of unused transitions only, always
/// taking the lowest-numbered unused one; on degree-balanced machines
/// this partitions the transitions. Otherwise falls back to repeatedly
/// adding the path through the most uncovered transitions.
pub fn covering_paths(a: &Automaton) -> Covering {
    if let Some(paths) = peel(a) {
        return Covering { paths, partition: true };
    }
    Covering {
        paths: greedy_cover(a),
        partition: false,
    }
}

fn peel(a: &Automaton) -> Option<Vec<Path>> {
    let mut used = vec![false; a.num_transitions()];
    let mut left = a.num_transitions();
    let mut paths = Vec::new();
    while left > 0 {
        let mut q = a.initial();
        let mut p = Vec::new();
        loop {
            let next = a.outgoing(q).iter().copied().filter(|&i| !used[i]).min();
            match next {
                Some(i) => {
                    used[i] = true;
                    left -= 1;
                    p.push(i);
                    q = a.transition(i).dst;
                }
                None if a.is_final(q) && !p.is_empty() => break,
                None => return None,
            }
        }
        paths.push(Path(p));
    }
    Some(paths)
}

fn greedy_cover(a: &Automaton) -> Vec<Path> {
    let mut covered = vec![false; a.num_transitions()];
    let mut paths = Vec::new();
    while covered.iter().any(|c| !c) {
        // best[q]: most uncovered transitions on a path from q to acceptance
        let mut best: Vec<Option<(usize, Option<usize>)>> = vec![None; a.num_states()];
        for &q in a.topo_order().iter().rev() {
            let mut b = a.is_final(q).then_some((0, None));
            for &i in a.outgoing(q) {
                if let Some((s, _)) = best[a.transition(i).dst] {
                    let s = s + usize::from(!covered[i]);
                    if b.is_none_or(|(bs, _)| s > bs) {
                        b = Some((s, Some(i)));
                    }
                }
            }
            best[q] = b;
        }
        let Some((gain, _)) = best[a.initial()] else {
            break;
        };
        if gain == 0 {
            // remaining transitions are not on any accepting path
            break;
        }
        let mut p = Vec::new();
        let mut q = a.initial();
        while let Some((_, Some(i))) = best[q] {
            covered[i] = true;
            p.push(i);
            q = a.transition(i).dst;
        }
        paths.push(Path(p));
    }
    paths
}
