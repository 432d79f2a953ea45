use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use super::automaton::{check_token, infer_shell, parse_state, Automaton, StateId, EPS_TOKEN, RHO_TOKEN};
use super::epsilon::{EpsArc, EpsAutomaton};
use super::graph;
use crate::error::{parse_err, Error, Result};

/// Transition label: a literal symbol, the empty string, or the default
/// label matching any symbol without a literal sibling.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Eps,
    Rho,
    Sym(String),
}

impl Label {
    pub fn sym(s: impl Into<String>) -> Self {
        Label::Sym(s.into())
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Label::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub(crate) fn parse_token(tok: &str) -> Result<Self> {
        Ok(match tok {
            EPS_TOKEN => Label::Eps,
            RHO_TOKEN => Label::Rho,
            s => {
                check_token(s)?;
                Label::Sym(s.to_string())
            }
        })
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Eps => f.write_str(EPS_TOKEN),
            Label::Rho => f.write_str(RHO_TOKEN),
            Label::Sym(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arc {
    pub src: StateId,
    pub dst: StateId,
    pub input: Label,
    pub output: Label,
}

impl Arc {
    pub fn new(src: StateId, dst: StateId, input: Label, output: Label) -> Self {
        Arc {
            src,
            dst,
            input,
            output,
        }
    }
}

/// Deterministic transducer. Unlike [`Automaton`] it may contain cycles, as
/// long as no cycle consists solely of epsilon-input arcs.
#[derive(Debug, Clone)]
pub struct Transducer {
    num_states: usize,
    initial: StateId,
    finals: Vec<bool>,
    arcs: Vec<Arc>,
    out: Vec<Vec<usize>>,
    lookup: HashMap<(StateId, Label), usize>,
}

impl PartialEq for Transducer {
    fn eq(&self, other: &Self) -> bool {
        self.num_states == other.num_states
            && self.initial == other.initial
            && self.finals == other.finals
            && self.arcs == other.arcs
    }
}

impl Transducer {
    pub fn new(
        num_states: usize,
        initial: StateId,
        finals: impl IntoIterator<Item = StateId>,
        mut arcs: Vec<Arc>,
    ) -> Result<Self> {
        let check = |q: usize| {
            if q < num_states {
                Ok(())
            } else {
                Err(Error::StateOutOfRange {
                    state: q,
                    num_states,
                })
            }
        };
        check(initial)?;
        let mut final_flags = vec![false; num_states];
        for f in finals {
            check(f)?;
            final_flags[f] = true;
        }
        arcs.sort_by_key(|a| a.src != initial);
        let mut out = vec![Vec::new(); num_states];
        let mut lookup = HashMap::new();
        for (i, a) in arcs.iter().enumerate() {
            check(a.src)?;
            check(a.dst)?;
            if a.output == Label::Rho {
                return Err(Error::RhoOutput);
            }
            for l in [&a.input, &a.output] {
                if let Label::Sym(s) = l {
                    check_token(s)?;
                }
            }
            if lookup.insert((a.src, a.input.clone()), i).is_some() {
                return Err(Error::NonDeterministic {
                    state: a.src,
                    input: a.input.to_string(),
                });
            }
            out[a.src].push(i);
        }
        let eps_edges: Vec<(usize, usize)> = arcs
            .iter()
            .filter(|a| a.input == Label::Eps)
            .map(|a| (a.src, a.dst))
            .collect();
        if graph::topo_order(num_states, &eps_edges).is_none() {
            return Err(Error::Cyclic);
        }
        Ok(Transducer {
            num_states,
            initial,
            finals: final_flags,
            arcs,
            out,
            lookup,
        })
    }

    /// One-state transducer copying every symbol of `alphabet`.
    pub fn identity<S: AsRef<str>>(alphabet: &[S]) -> Result<Self> {
        let arcs = alphabet
            .iter()
            .map(|s| Arc::new(0, 0, Label::sym(s.as_ref()), Label::sym(s.as_ref())))
            .collect();
        Transducer::new(1, 0, [0], arcs)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn is_final(&self, q: StateId) -> bool {
        self.finals[q]
    }

    pub fn finals(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.num_states).filter(|&q| self.finals[q])
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn outgoing(&self, q: StateId) -> &[usize] {
        &self.out[q]
    }

    fn arc_for(&self, q: StateId, input: &Label) -> Option<usize> {
        self.lookup.get(&(q, input.clone())).copied()
    }

    /// The arc consuming `symbol` at `q`, falling back to the rho arc.
    fn consuming(&self, q: StateId, symbol: &str) -> Option<usize> {
        self.arc_for(q, &Label::sym(symbol)).or_else(|| self.arc_for(q, &Label::Rho))
    }

    /// Every output string the transducer associates with `input`.
    pub fn transduce<S: AsRef<str>>(&self, input: &[S]) -> BTreeSet<Vec<String>> {
        let mut results = BTreeSet::new();
        let mut stack: Vec<(StateId, usize, Vec<String>)> = vec![(self.initial, 0, Vec::new())];
        while let Some((q, pos, outp)) = stack.pop() {
            if pos == input.len() && self.finals[q] {
                results.insert(outp.clone());
            }
            let push = |stack: &mut Vec<_>, i: usize, next_pos: usize| {
                let a: &Arc = &self.arcs[i];
                let mut o = outp.clone();
                if let Label::Sym(s) = &a.output {
                    o.push(s.clone());
                }
                stack.push((a.dst, next_pos, o));
            };
            if let Some(i) = self.arc_for(q, &Label::Eps) {
                push(&mut stack, i, pos);
            }
            if pos < input.len() {
                if let Some(i) = self.consuming(q, input[pos].as_ref()) {
                    push(&mut stack, i, pos + 1);
                }
            }
        }
        results
    }

    fn relabeled(num_states: usize, initial: StateId, finals: &[usize], arcs: Vec<Arc>) -> Transducer {
        let edges: Vec<(usize, usize)> = arcs.iter().map(|a| (a.src, a.dst)).collect();
        let r = graph::canonical_relabel(num_states, initial, finals, &edges);
        let new_arcs = r
            .edge_order
            .iter()
            .map(|&i| {
                let a = &arcs[i];
                Arc::new(
                    r.state_map[a.src].unwrap(),
                    r.state_map[a.dst].unwrap(),
                    a.input.clone(),
                    a.output.clone(),
                )
            })
            .collect();
        let new_finals: Vec<usize> = finals.iter().filter_map(|&q| r.state_map[q]).collect();
        Transducer::new(r.num_states, 0, new_finals, new_arcs).expect("relabeling preserves validity")
    }
}

/// Composition of an acyclic automaton with a transducer: accepts `(x, y)`
/// iff `a` accepts `x` and `t` maps `x` to `y`. States are the live pairs,
/// renumbered in topological order.
pub fn compose(a: &Automaton, t: &Transducer) -> Transducer {
    let mut ids: HashMap<(StateId, StateId), usize> = HashMap::new();
    let mut pairs: Vec<(StateId, StateId)> = Vec::new();
    let mut queue = VecDeque::new();
    let mut arcs = Vec::new();
    let mut intern = |p: (StateId, StateId), pairs: &mut Vec<_>, queue: &mut VecDeque<usize>| {
        *ids.entry(p).or_insert_with(|| {
            pairs.push(p);
            queue.push_back(pairs.len() - 1);
            pairs.len() - 1
        })
    };
    let start = intern((a.initial(), t.initial), &mut pairs, &mut queue);
    while let Some(id) = queue.pop_front() {
        let (qa, qt) = pairs[id];
        for &ti in &t.out[qt] {
            let arc = &t.arcs[ti];
            match &arc.input {
                Label::Eps => {
                    let d = intern((qa, arc.dst), &mut pairs, &mut queue);
                    arcs.push(Arc::new(id, d, Label::Eps, arc.output.clone()));
                }
                Label::Sym(x) => {
                    if let Some(ai) = a.index_of(x) {
                        let tr = a.transition(ai);
                        if tr.src == qa {
                            let d = intern((tr.dst, arc.dst), &mut pairs, &mut queue);
                            arcs.push(Arc::new(id, d, Label::sym(x.as_str()), arc.output.clone()));
                        }
                    }
                }
                Label::Rho => {
                    for &ai in a.outgoing(qa) {
                        let tr = a.transition(ai);
                        if t.arc_for(qt, &Label::sym(tr.name.as_str())).is_none() {
                            let d = intern((tr.dst, arc.dst), &mut pairs, &mut queue);
                            arcs.push(Arc::new(id, d, Label::sym(tr.name.as_str()), arc.output.clone()));
                        }
                    }
                }
            }
        }
    }
    let finals: Vec<usize> = pairs
        .iter()
        .enumerate()
        .filter(|(_, &(qa, qt))| a.is_final(qa) && t.is_final(qt))
        .map(|(i, _)| i)
        .collect();
    Transducer::relabeled(pairs.len(), start, &finals, arcs)
}

/// Replaces each arc label by its output label.
pub fn project_output(t: &Transducer) -> EpsAutomaton {
    let arcs = t
        .arcs
        .iter()
        .map(|a| EpsArc {
            src: a.src,
            dst: a.dst,
            label: a.output.as_sym().map(str::to_string),
        })
        .collect();
    EpsAutomaton::new(t.num_states, t.initial, t.finals().collect::<Vec<_>>(), arcs)
        .expect("projection preserves the state shell")
}

impl fmt::Display for Transducer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.arcs {
            writeln!(f, "{}\t{}\t{}\t{}", a.src, a.dst, a.input, a.output)?;
        }
        for q in self.finals() {
            writeln!(f, "{q}")?;
        }
        Ok(())
    }
}

impl FromStr for Transducer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut arcs = Vec::new();
        let mut finals = Vec::new();
        for (n, raw) in s.lines().enumerate() {
            let line = n + 1;
            let fields: Vec<&str> = raw.split_whitespace().collect();
            let label = |tok: &str| Label::parse_token(tok).map_err(|e| parse_err(line, e.to_string()));
            match fields.as_slice() {
                [] => {}
                [q] => finals.push(parse_state(q, line)?),
                [src, dst, input, output] => arcs.push(Arc::new(
                    parse_state(src, line)?,
                    parse_state(dst, line)?,
                    label(input)?,
                    label(output)?,
                )),
                _ => return Err(parse_err(line, format!("expected 1 or 4 fields, found {}", fields.len()))),
            }
        }
        let ends: Vec<(usize, usize)> = arcs.iter().map(|a: &Arc| (a.src, a.dst)).collect();
        let (num_states, initial) = infer_shell(&ends, &finals);
        Transducer::new(num_states, initial, finals, arcs)
    }
}
