use std::collections::{BTreeSet, HashSet};

use super::automaton::{Automaton, StateId, Transition};
use super::graph;
use crate::error::{Error, Result};

/// Arc of an automaton that may carry the empty label (`None`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpsArc {
    pub src: StateId,
    pub dst: StateId,
    pub label: Option<String>,
}

/// Automaton whose labels are symbols or epsilon; labels need not be unique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpsAutomaton {
    pub num_states: usize,
    pub initial: StateId,
    pub finals: Vec<bool>,
    pub arcs: Vec<EpsArc>,
}

impl EpsAutomaton {
    pub fn new(num_states: usize, initial: StateId, finals: Vec<StateId>, arcs: Vec<EpsArc>) -> Result<Self> {
        let bad = |q: usize| (q >= num_states).then_some(Error::StateOutOfRange { state: q, num_states });
        if let Some(e) = std::iter::once(initial)
            .chain(finals.iter().copied())
            .chain(arcs.iter().flat_map(|a| [a.src, a.dst]))
            .find_map(bad)
        {
            return Err(e);
        }
        let mut flags = vec![false; num_states];
        for f in finals {
            flags[f] = true;
        }
        Ok(EpsAutomaton {
            num_states,
            initial,
            finals: flags,
            arcs,
        })
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.arcs.iter().map(|a| (a.src, a.dst)).collect()
    }

    /// Every accepted string, epsilons dropped. Requires an acyclic machine.
    pub fn strings(&self) -> BTreeSet<Vec<String>> {
        let mut out = BTreeSet::new();
        let mut by_src = vec![Vec::new(); self.num_states];
        for a in &self.arcs {
            by_src[a.src].push(a);
        }
        let mut stack = vec![(self.initial, Vec::<String>::new())];
        while let Some((q, s)) = stack.pop() {
            if self.finals[q] {
                out.insert(s.clone());
            }
            for a in &by_src[q] {
                let mut t = s.clone();
                if let Some(l) = &a.label {
                    t.push(l.clone());
                }
                stack.push((a.dst, t));
            }
        }
        out
    }
}

/// An automaton with fresh unique transition names plus a (possibly
/// repeated) symbol attached to each transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledAutomaton {
    pub machine: Automaton,
    pub labels: Vec<String>,
}

impl LabeledAutomaton {
    /// Symbol string of a path.
    pub fn label_string(&self, p: &super::Path) -> Vec<String> {
        p.0.iter().map(|&i| self.labels[i].clone()).collect()
    }

    pub fn strings(&self) -> BTreeSet<Vec<String>> {
        let arcs = self
            .machine
            .transitions()
            .iter()
            .zip(&self.labels)
            .map(|(t, l)| EpsArc {
                src: t.src,
                dst: t.dst,
                label: Some(l.clone()),
            })
            .collect();
        EpsAutomaton::new(
            self.machine.num_states(),
            self.machine.initial(),
            self.machine.finals().collect(),
            arcs,
        )
        .expect("valid shell")
        .strings()
    }
}

/// Builds a labeled automaton from raw parts: trims, renumbers canonically
/// and names transition `i` as `t{i}`.
pub(crate) fn finish_labeled(
    num_states: usize,
    initial: StateId,
    finals: &[StateId],
    arcs: &[(StateId, StateId, String)],
) -> LabeledAutomaton {
    let edges: Vec<(usize, usize)> = arcs.iter().map(|a| (a.0, a.1)).collect();
    let r = graph::canonical_relabel(num_states, initial, finals, &edges);
    let mut transitions = Vec::with_capacity(r.edge_order.len());
    let mut labels = Vec::with_capacity(r.edge_order.len());
    for (k, &i) in r.edge_order.iter().enumerate() {
        let (s, d, l) = &arcs[i];
        transitions.push(Transition::new(r.state_map[*s].unwrap(), r.state_map[*d].unwrap(), format!("t{k}")));
        labels.push(l.clone());
    }
    let finals: Vec<usize> = finals.iter().filter_map(|&q| r.state_map[q]).collect();
    LabeledAutomaton {
        machine: Automaton::new(r.num_states, 0, finals, transitions).expect("canonical machine is valid"),
        labels,
    }
}

/// Removes epsilon arcs: every state inherits the labeled arcs and finality
/// of its epsilon closure. Duplicate `(src, dst, label)` arcs are merged.
pub fn epsilon_remove(a: &EpsAutomaton) -> Result<LabeledAutomaton> {
    let edges = a.edges();
    graph::topo_order(a.num_states, &edges).ok_or(Error::Cyclic)?;
    let mut eps_succ = vec![Vec::new(); a.num_states];
    let mut labeled = vec![Vec::new(); a.num_states];
    for arc in &a.arcs {
        match &arc.label {
            None => eps_succ[arc.src].push(arc.dst),
            Some(l) => labeled[arc.src].push((arc.dst, l.clone())),
        }
    }
    let mut arcs = Vec::new();
    let mut finals = Vec::new();
    for q in 0..a.num_states {
        let mut closure = vec![q];
        let mut seen = HashSet::from([q]);
        let mut k = 0;
        while k < closure.len() {
            for &n in &eps_succ[closure[k]] {
                if seen.insert(n) {
                    closure.push(n);
                }
            }
            k += 1;
        }
        closure.sort_unstable();
        if closure.iter().any(|&p| a.finals[p]) {
            finals.push(q);
        }
        let mut emitted = HashSet::new();
        for &p in &closure {
            for (d, l) in &labeled[p] {
                if emitted.insert((*d, l.clone())) {
                    arcs.push((q, *d, l.clone()));
                }
            }
        }
    }
    Ok(finish_labeled(a.num_states, a.initial, &finals, &arcs))
}
