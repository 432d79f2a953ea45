use std::collections::HashSet;

use super::automaton::{Automaton, Transition};
use super::graph;
use crate::error::Result;

/// Output of [`equalize_path_lengths`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equalized {
    pub machine: Automaton,
    /// For each transition of `machine`, the index of the transition of the
    /// input it copies, or `None` for padding.
    pub origin: Vec<Option<usize>>,
    pub added_states: usize,
}

impl Equalized {
    pub fn is_padding(&self, i: usize) -> bool {
        self.origin[i].is_none()
    }
}

/// Pads short paths so that every accepting path has the length of the
/// longest one.
///
/// States are levelled by their longest distance from the initial state.
/// Each state owns one chain of padding states; an arc that would skip `s`
/// levels leaves from the `s`-th state of its source's chain, and a final
/// state below the last level is linked through its chain to an existing
/// last-level final. Padding transitions are named `{marker}{n}`.
pub fn equalize_path_lengths(a: &Automaton, marker: &str) -> Result<Equalized> {
    let edges: Vec<(usize, usize)> = a.transitions().iter().map(|t| (t.src, t.dst)).collect();
    let finals: Vec<usize> = a.finals().collect();
    let live = graph::live_states(a.num_states(), a.initial(), &finals, &edges);
    let base = if live.iter().all(|&l| l) { a.clone() } else { a.trimmed() };
    let Some(k) = base.longest_path() else {
        return Ok(Equalized {
            origin: (0..base.num_transitions()).map(Some).collect(),
            machine: base,
            added_states: 0,
        });
    };

    let n = base.num_states();
    let mut depth = vec![0usize; n];
    for &q in base.topo_order() {
        for &i in base.outgoing(q) {
            let t = base.transition(i);
            depth[t.dst] = depth[t.dst].max(depth[q] + 1);
        }
    }
    let anchor = base.finals().filter(|&f| depth[f] == k).min().expect("a deepest final exists");
    let short_final = |q: usize| base.is_final(q) && depth[q] < k;
    let chain_len: Vec<usize> = (0..n)
        .map(|u| {
            let gaps = base
                .outgoing(u)
                .iter()
                .map(|&i| depth[base.transition(i).dst] - depth[u] - 1);
            let exit = short_final(u).then(|| k - depth[u] - 1);
            gaps.chain(exit).max().unwrap_or(0)
        })
        .collect();
    let mut chain_base = vec![0usize; n];
    let mut next = n;
    for u in 0..n {
        chain_base[u] = next;
        next += chain_len[u];
    }
    let node = |u: usize, j: usize| if j == 0 { u } else { chain_base[u] + j - 1 };

    let used: HashSet<&str> = base.transitions().iter().map(|t| t.name.as_str()).collect();
    let mut counter = 0usize;
    let mut fresh = || loop {
        let name = format!("{marker}{counter}");
        counter += 1;
        if !used.contains(name.as_str()) {
            return name;
        }
    };

    let mut items: Vec<(Transition, Option<usize>)> = Vec::new();
    for (i, t) in base.transitions().iter().enumerate() {
        let gap = depth[t.dst] - depth[t.src] - 1;
        items.push((Transition::new(node(t.src, gap), t.dst, t.name.clone()), Some(i)));
    }
    for u in 0..n {
        for j in 0..chain_len[u] {
            items.push((Transition::new(node(u, j), node(u, j + 1), fresh()), None));
        }
        if short_final(u) {
            items.push((Transition::new(node(u, k - depth[u] - 1), anchor, fresh()), None));
        }
    }
    items.sort_by_key(|(t, _)| t.src != base.initial());
    let origin_in_base: Vec<Option<usize>> = items.iter().map(|(_, o)| *o).collect();
    let transitions: Vec<Transition> = items.into_iter().map(|(t, _)| t).collect();
    let new_finals: Vec<usize> = base.finals().filter(|&f| depth[f] == k).collect();
    let machine = Automaton::new(next, base.initial(), new_finals, transitions)?;
    let origin = origin_in_base
        .into_iter()
        .map(|o| o.and_then(|i| a.index_of(base.name(i))))
        .collect();
    Ok(Equalized {
        machine,
        origin,
        added_states: next - n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_length_machine_is_unchanged() {
        let a = Automaton::from_edges(0, &[3], &[(0, 1, "a"), (0, 2, "b"), (1, 3, "c"), (2, 3, "d")]).unwrap();
        let e = equalize_path_lengths(&a, "pad").unwrap();
        assert_eq!(e.machine, a);
        assert_eq!(e.added_states, 0);
    }

    #[test]
    fn short_path_gets_two_padding_transitions() {
        // lengths 1 (x) and 3 (a b c)
        let a = Automaton::from_edges(0, &[1, 4], &[(0, 1, "x"), (0, 2, "a"), (2, 3, "b"), (3, 4, "c")]).unwrap();
        let e = equalize_path_lengths(&a, "pad").unwrap();
        let m = &e.machine;
        let paths = m.enumerate_paths(10).unwrap();
        assert_eq!(paths.len(), 2);
        assert!(paths.iter().all(|p| p.len() == 3));
        let padded = paths.iter().find(|p| p.names(m)[0] == "x").unwrap();
        let pads = padded.0.iter().filter(|&&i| e.is_padding(i)).count();
        assert_eq!(pads, 2);
        assert_eq!(e.added_states, 1);
    }

    #[test]
    fn skipping_arc_leaves_from_padding_chain() {
        // 0 -a-> 1 -b-> 2 and a shortcut 0 -s-> 2
        let a = Automaton::from_edges(0, &[2], &[(0, 1, "a"), (1, 2, "b"), (0, 2, "s")]).unwrap();
        let e = equalize_path_lengths(&a, "p").unwrap();
        let names: Vec<Vec<&str>> = e
            .machine
            .enumerate_paths(10)
            .unwrap()
            .iter()
            .map(|p| p.names(&e.machine))
            .collect();
        assert_eq!(names, vec![vec!["a", "b"], vec!["p0", "s"]]);
        assert_eq!(e.origin.iter().filter(|o| o.is_none()).count(), 1);
    }
}
