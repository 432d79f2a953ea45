//! Index-level graph routines shared by every machine type.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

/// Kahn's algorithm; ready states are released smallest id first so the
/// order is a deterministic function of the numbering. `None` on a cycle.
pub(crate) fn topo_order(num_states: usize, edges: &[(usize, usize)]) -> Option<Vec<usize>> {
    let mut indeg = vec![0usize; num_states];
    let mut succ = vec![Vec::new(); num_states];
    for &(s, d) in edges {
        indeg[d] += 1;
        succ[s].push(d);
    }
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..num_states).filter(|&q| indeg[q] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(num_states);
    while let Some(Reverse(q)) = ready.pop() {
        order.push(q);
        for &d in &succ[q] {
            indeg[d] -= 1;
            if indeg[d] == 0 {
                ready.push(Reverse(d));
            }
        }
    }
    (order.len() == num_states).then_some(order)
}

fn reach(num_states: usize, starts: &[usize], adj: &[Vec<usize>]) -> Vec<bool> {
    let mut seen = vec![false; num_states];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for &s in starts {
        if !seen[s] {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(q) = queue.pop_front() {
        for &n in &adj[q] {
            if !seen[n] {
                seen[n] = true;
                queue.push_back(n);
            }
        }
    }
    seen
}

/// States that are both reachable from `initial` and can reach a final state.
pub(crate) fn live_states(
    num_states: usize,
    initial: usize,
    finals: &[usize],
    edges: &[(usize, usize)],
) -> Vec<bool> {
    let mut fwd = vec![Vec::new(); num_states];
    let mut bwd = vec![Vec::new(); num_states];
    for &(s, d) in edges {
        fwd[s].push(d);
        bwd[d].push(s);
    }
    let acc = reach(num_states, &[initial], &fwd);
    let coacc = reach(num_states, finals, &bwd);
    acc.iter().zip(&coacc).map(|(a, c)| *a && *c).collect()
}

/// Result of trimming and renumbering a machine.
pub(crate) struct Relabel {
    /// Old state id to new state id, `None` for trimmed states.
    pub state_map: Vec<Option<usize>>,
    pub num_states: usize,
    /// Surviving edge indices, in their new canonical order.
    pub edge_order: Vec<usize>,
}

/// Drops dead states and renumbers the rest in topological order (breadth
/// first order for cyclic machines). Edges are ordered by new source state,
/// keeping their relative order otherwise. When nothing is live, a lone
/// initial state survives so the result is a valid empty machine.
pub(crate) fn canonical_relabel(
    num_states: usize,
    initial: usize,
    finals: &[usize],
    edges: &[(usize, usize)],
) -> Relabel {
    let live = live_states(num_states, initial, finals, edges);
    if !live[initial] {
        let mut state_map = vec![None; num_states];
        state_map[initial] = Some(0);
        return Relabel {
            state_map,
            num_states: 1,
            edge_order: Vec::new(),
        };
    }
    let kept: Vec<usize> = (0..edges.len())
        .filter(|&i| live[edges[i].0] && live[edges[i].1])
        .collect();
    let old_ids: Vec<usize> = (0..num_states).filter(|&q| live[q]).collect();
    let mut compact = vec![usize::MAX; num_states];
    for (i, &q) in old_ids.iter().enumerate() {
        compact[q] = i;
    }
    let sub_edges: Vec<(usize, usize)> = kept
        .iter()
        .map(|&i| (compact[edges[i].0], compact[edges[i].1]))
        .collect();
    let order = topo_order(old_ids.len(), &sub_edges).unwrap_or_else(|| {
        let mut adj = vec![Vec::new(); old_ids.len()];
        for &(s, d) in &sub_edges {
            adj[s].push(d);
        }
        let mut order = Vec::new();
        let mut seen = vec![false; old_ids.len()];
        let mut queue = VecDeque::from([compact[initial]]);
        seen[compact[initial]] = true;
        while let Some(q) = queue.pop_front() {
            order.push(q);
            for &n in &adj[q] {
                if !seen[n] {
                    seen[n] = true;
                    queue.push_back(n);
                }
            }
        }
        order
    });
    let mut state_map = vec![None; num_states];
    for (new, &c) in order.iter().enumerate() {
        state_map[old_ids[c]] = Some(new);
    }
    let mut edge_order = kept;
    edge_order.sort_by_key(|&i| state_map[edges[i].0]);
    Relabel {
        state_map,
        num_states: order.len(),
        edge_order,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topo_detects_cycles() {
        assert!(topo_order(2, &[(0, 1), (1, 0)]).is_none());
        assert_eq!(topo_order(3, &[(2, 1), (0, 2)]), Some(vec![0, 2, 1]));
    }

    #[test]
    fn relabel_trims_dead_branches() {
        // 0 -> 1 -> 3 (final), 0 -> 2 (dead end)
        let r = canonical_relabel(4, 0, &[3], &[(0, 1), (0, 2), (1, 3)]);
        assert_eq!(r.num_states, 3);
        assert_eq!(r.state_map[2], None);
        assert_eq!(r.edge_order, vec![0, 2]);
    }

    #[test]
    fn relabel_of_empty_language_keeps_initial() {
        let r = canonical_relabel(2, 0, &[], &[(0, 1)]);
        assert_eq!(r.num_states, 1);
        assert!(r.edge_order.is_empty());
    }
}
