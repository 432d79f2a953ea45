use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use super::graph::{self, Relabel};
use crate::error::{parse_err, Error, Result};

pub type StateId = usize;

/// Paths beyond this count are refused by [`Automaton::enumerate_paths`]
/// unless a larger cap is passed explicitly.
pub const DEFAULT_PATH_CAP: usize = 1_000_000;

/// Label tokens with a fixed meaning in the text format.
pub const EPS_TOKEN: &str = "<eps>";
pub const RHO_TOKEN: &str = "<rho>";

pub(crate) fn check_token(s: &str) -> Result<()> {
    if s.is_empty() || s.chars().any(char::is_whitespace) || s == EPS_TOKEN || s == RHO_TOKEN {
        return Err(Error::InvalidToken(s.to_string()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transition {
    pub src: StateId,
    pub dst: StateId,
    pub name: String,
}

impl Transition {
    pub fn new(src: StateId, dst: StateId, name: impl Into<String>) -> Self {
        Transition {
            src,
            dst,
            name: name.into(),
        }
    }
}

/// A sequence of transition indices into some machine.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Path(pub Vec<usize>);

impl Path {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn names<'a>(&self, a: &'a Automaton) -> Vec<&'a str> {
        self.0.iter().map(|&i| a.transitions[i].name.as_str()).collect()
    }

    /// 0/1 incidence vector over the machine's transitions.
    pub fn indicator(&self, num_transitions: usize) -> Vec<f64> {
        let mut v = vec![0.0; num_transitions];
        for &i in &self.0 {
            v[i] = 1.0;
        }
        v
    }

    pub fn contains(&self, transition: usize) -> bool {
        self.0.contains(&transition)
    }
}

/// Derived sizes of an acyclic machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sizes {
    /// Q: number of states.
    pub states: usize,
    /// M: number of transitions.
    pub transitions: usize,
    /// K: length of the longest accepting path.
    pub longest_path: usize,
    /// N: number of accepting paths (saturating).
    pub paths: u128,
}

/// Acyclic automaton whose transitions carry unique names.
#[derive(Debug, Clone)]
pub struct Automaton {
    num_states: usize,
    initial: StateId,
    finals: Vec<bool>,
    transitions: Vec<Transition>,
    out: Vec<Vec<usize>>,
    topo: Vec<StateId>,
    by_name: HashMap<String, usize>,
}

impl PartialEq for Automaton {
    fn eq(&self, other: &Self) -> bool {
        self.num_states == other.num_states
            && self.initial == other.initial
            && self.finals == other.finals
            && self.transitions == other.transitions
    }
}

impl Eq for Automaton {}

impl Automaton {
    /// Validates and builds a machine. Transitions leaving the initial state
    /// are moved to the front (stable), which the text format relies on.
    pub fn new(
        num_states: usize,
        initial: StateId,
        finals: impl IntoIterator<Item = StateId>,
        mut transitions: Vec<Transition>,
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
        let mut by_name = HashMap::with_capacity(transitions.len());
        for t in &transitions {
            check(t.src)?;
            check(t.dst)?;
            check_token(&t.name)?;
        }
        transitions.sort_by_key(|t| t.src != initial);
        for (i, t) in transitions.iter().enumerate() {
            if by_name.insert(t.name.clone(), i).is_some() {
                return Err(Error::DuplicateName(t.name.clone()));
            }
        }
        let edges: Vec<(usize, usize)> = transitions.iter().map(|t| (t.src, t.dst)).collect();
        let topo = graph::topo_order(num_states, &edges).ok_or(Error::Cyclic)?;
        let mut out = vec![Vec::new(); num_states];
        for (i, t) in transitions.iter().enumerate() {
            out[t.src].push(i);
        }
        Ok(Automaton {
            num_states,
            initial,
            finals: final_flags,
            transitions,
            out,
            topo,
            by_name,
        })
    }

    /// Convenience constructor; the state count is inferred from the ids used.
    pub fn from_edges(initial: StateId, finals: &[StateId], edges: &[(StateId, StateId, &str)]) -> Result<Self> {
        let num_states = edges
            .iter()
            .flat_map(|&(s, d, _)| [s, d])
            .chain(finals.iter().copied())
            .chain([initial])
            .max()
            .map_or(1, |m| m + 1);
        let transitions = edges.iter().map(|&(s, d, n)| Transition::new(s, d, n)).collect();
        Automaton::new(num_states, initial, finals.iter().copied(), transitions)
    }

    /// A single path `names[0] names[1] ...` through fresh states.
    pub fn chain(names: &[&str]) -> Result<Self> {
        let edges: Vec<(usize, usize, &str)> = names.iter().enumerate().map(|(i, &n)| (i, i + 1, n)).collect();
        Automaton::from_edges(0, &[names.len()], &edges)
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

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn transition(&self, i: usize) -> &Transition {
        &self.transitions[i]
    }

    pub fn num_transitions(&self) -> usize {
        self.transitions.len()
    }

    pub fn outgoing(&self, q: StateId) -> &[usize] {
        &self.out[q]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn topo_order(&self) -> &[StateId] {
        &self.topo
    }

    pub fn name(&self, i: usize) -> &str {
        &self.transitions[i].name
    }

    /// True when `p` chains from the initial state to a final state.
    pub fn is_accepting(&self, p: &Path) -> bool {
        let mut q = self.initial;
        for &i in &p.0 {
            match self.transitions.get(i) {
                Some(t) if t.src == q => q = t.dst,
                _ => return false,
            }
        }
        self.finals[q]
    }

    /// Looks up a path by its transition names.
    pub fn path_from_names<S: AsRef<str>>(&self, names: &[S]) -> Option<Path> {
        names
            .iter()
            .map(|n| self.index_of(n.as_ref()))
            .collect::<Option<Vec<_>>>()
            .map(Path)
    }

    pub fn path_count(&self) -> u128 {
        let mut count = vec![0u128; self.num_states];
        for &q in self.topo.iter().rev() {
            let mut c = u128::from(self.finals[q]);
            for &i in &self.out[q] {
                c = c.saturating_add(count[self.transitions[i].dst]);
            }
            count[q] = c;
        }
        count[self.initial]
    }

    /// Length of the longest accepting path, `None` for an empty language.
    pub fn longest_path(&self) -> Option<usize> {
        let mut best: Vec<Option<usize>> = vec![None; self.num_states];
        for &q in self.topo.iter().rev() {
            let mut b = self.finals[q].then_some(0);
            for &i in &self.out[q] {
                if let Some(l) = best[self.transitions[i].dst] {
                    b = Some(b.map_or(l + 1, |x: usize| x.max(l + 1)));
                }
            }
            best[q] = b;
        }
        best[self.initial]
    }

    pub fn sizes(&self) -> Sizes {
        Sizes {
            states: self.num_states,
            transitions: self.transitions.len(),
            longest_path: self.longest_path().unwrap_or(0),
            paths: self.path_count(),
        }
    }

    pub fn has_accepting_path(&self) -> bool {
        self.longest_path().is_some()
    }

    /// Outgoing transitions of every state, sorted by name.
    fn sorted_out(&self) -> Vec<Vec<usize>> {
        self.out
            .iter()
            .map(|v| {
                let mut v = v.clone();
                v.sort_by(|&a, &b| self.transitions[a].name.cmp(&self.transitions[b].name));
                v
            })
            .collect()
    }

    /// All accepting paths in lexicographic order of their name sequences.
    pub fn enumerate_paths(&self, cap: usize) -> Result<Vec<Path>> {
        if self.path_count() > cap as u128 {
            return Err(Error::TooManyPaths { cap });
        }
        let sorted = self.sorted_out();
        let mut paths = Vec::new();
        let mut stack: Vec<(StateId, usize)> = vec![(self.initial, 0)];
        let mut current: Vec<usize> = Vec::new();
        if self.finals[self.initial] {
            paths.push(Path(Vec::new()));
        }
        while let Some(top) = stack.last_mut() {
            let q = top.0;
            if top.1 < sorted[q].len() {
                let i = sorted[q][top.1];
                top.1 += 1;
                let d = self.transitions[i].dst;
                current.push(i);
                if self.finals[d] {
                    paths.push(Path(current.clone()));
                }
                stack.push((d, 0));
            } else {
                stack.pop();
                current.pop();
            }
        }
        Ok(paths)
    }

    /// Accepting path with the largest summed gain; ties go to the
    /// lexicographically smallest name sequence.
    pub fn best_path(&self, gains: &[f64]) -> Result<Path> {
        // choice[q]: None = stop here, Some(i) = take transition i.
        let mut value: Vec<Option<f64>> = vec![None; self.num_states];
        let mut choice: Vec<Option<usize>> = vec![None; self.num_states];
        for &q in self.topo.iter().rev() {
            let mut best: Option<(f64, Option<usize>)> = self.finals[q].then_some((0.0, None));
            for &i in &self.out[q] {
                let Some(tail) = value[self.transitions[i].dst] else {
                    continue;
                };
                let v = gains[i] + tail;
                best = match best {
                    None => Some((v, Some(i))),
                    Some((bv, bc)) => {
                        let better = v > bv
                            || (v == bv
                                && match bc {
                                    None => false,
                                    Some(j) => self.transitions[i].name < self.transitions[j].name,
                                });
                        if better {
                            Some((v, Some(i)))
                        } else {
                            Some((bv, bc))
                        }
                    }
                };
            }
            if let Some((v, c)) = best {
                value[q] = Some(v);
                choice[q] = c;
            }
        }
        if value[self.initial].is_none() {
            return Err(Error::EmptyLanguage);
        }
        let mut path = Vec::new();
        let mut q = self.initial;
        while let Some(i) = choice[q] {
            path.push(i);
            q = self.transitions[i].dst;
        }
        Ok(Path(path))
    }

    pub(crate) fn relabeled(&self, r: &Relabel) -> Automaton {
        let transitions = r
            .edge_order
            .iter()
            .map(|&i| {
                let t = &self.transitions[i];
                Transition::new(r.state_map[t.src].unwrap(), r.state_map[t.dst].unwrap(), t.name.clone())
            })
            .collect();
        let finals: Vec<usize> = self.finals().filter_map(|q| r.state_map[q]).collect();
        Automaton::new(r.num_states, 0, finals, transitions).expect("relabeling preserves validity")
    }

    pub(crate) fn relabel_plan(&self) -> Relabel {
        let edges: Vec<(usize, usize)> = self.transitions.iter().map(|t| (t.src, t.dst)).collect();
        let finals: Vec<usize> = self.finals().collect();
        graph::canonical_relabel(self.num_states, self.initial, &finals, &edges)
    }

    /// Removes states that are unreachable or cannot reach a final state and
    /// renumbers the rest in topological order.
    pub fn trimmed(&self) -> Automaton {
        self.relabeled(&self.relabel_plan())
    }
}

impl fmt::Display for Automaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.transitions {
            writeln!(f, "{}\t{}\t{}", t.src, t.dst, t.name)?;
        }
        for q in self.finals() {
            writeln!(f, "{q}")?;
        }
        Ok(())
    }
}

pub(crate) fn parse_state(tok: &str, line: usize) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| parse_err(line, format!("`{tok}` is not a state id")))
}

/// Shared skeleton of the line-oriented formats: returns the state count and
/// initial state implied by the parsed records.
pub(crate) fn infer_shell(arc_ends: &[(usize, usize)], finals: &[usize]) -> (usize, usize) {
    let num_states = arc_ends
        .iter()
        .flat_map(|&(s, d)| [s, d])
        .chain(finals.iter().copied())
        .max()
        .map_or(1, |m| m + 1);
    let initial = arc_ends.first().map(|&(s, _)| s).or(finals.first().copied()).unwrap_or(0);
    (num_states, initial)
}

impl FromStr for Automaton {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut transitions = Vec::new();
        let mut finals = Vec::new();
        for (n, raw) in s.lines().enumerate() {
            let line = n + 1;
            let fields: Vec<&str> = raw.split_whitespace().collect();
            match fields.as_slice() {
                [] => {}
                [q] => finals.push(parse_state(q, line)?),
                [src, dst, name] => {
                    check_token(name).map_err(|e| parse_err(line, e.to_string()))?;
                    transitions.push(Transition::new(parse_state(src, line)?, parse_state(dst, line)?, *name));
                }
                _ => return Err(parse_err(line, format!("expected 1 or 3 fields, found {}", fields.len()))),
            }
        }
        let ends: Vec<(usize, usize)> = transitions.iter().map(|t: &Transition| (t.src, t.dst)).collect();
        let (num_states, initial) = infer_shell(&ends, &finals);
        Automaton::new(num_states, initial, finals, transitions)
    }
}
