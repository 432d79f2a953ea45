use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::automaton::{infer_shell, parse_state, Automaton, Path, StateId};
use super::graph;
use super::transducer::Label;
use crate::error::{parse_err, Error, Result};

/// Tolerance of the stochastic flag.
pub const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedArc {
    pub src: StateId,
    pub dst: StateId,
    pub label: Label,
    pub weight: f64,
}

impl WeightedArc {
    pub fn new(src: StateId, dst: StateId, label: Label, weight: f64) -> Self {
        WeightedArc {
            src,
            dst,
            label,
            weight,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Total weight of paths from the initial state into each state.
    Forward,
    /// Total weight of paths from each state to acceptance, final weights included.
    Backward,
}

/// Weighted automaton over the reals. Cycles are allowed (the update
/// machines of the bandit learner loop on a sink), but every quantitative
/// operation below requires acyclicity.
#[derive(Debug, Clone)]
pub struct WeightedAutomaton {
    num_states: usize,
    initial: StateId,
    finals: Vec<Option<f64>>,
    arcs: Vec<WeightedArc>,
    out: Vec<Vec<usize>>,
    stochastic: bool,
}

impl PartialEq for WeightedAutomaton {
    fn eq(&self, other: &Self) -> bool {
        self.num_states == other.num_states
            && self.initial == other.initial
            && self.finals == other.finals
            && self.arcs == other.arcs
    }
}

pub(crate) fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

impl WeightedAutomaton {
    pub fn new(
        num_states: usize,
        initial: StateId,
        finals: impl IntoIterator<Item = (StateId, f64)>,
        mut arcs: Vec<WeightedArc>,
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
        let weight_ok = |w: f64| {
            if w.is_finite() && w >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidWeight(w))
            }
        };
        check(initial)?;
        let mut final_weights = vec![None; num_states];
        for (q, w) in finals {
            check(q)?;
            weight_ok(w)?;
            final_weights[q] = Some(w);
        }
        arcs.sort_by_key(|a| a.src != initial);
        let mut out = vec![Vec::new(); num_states];
        for (i, a) in arcs.iter().enumerate() {
            check(a.src)?;
            check(a.dst)?;
            weight_ok(a.weight)?;
            if let Label::Sym(s) = &a.label {
                super::automaton::check_token(s)?;
            }
            out[a.src].push(i);
        }
        let mut w = WeightedAutomaton {
            num_states,
            initial,
            finals: final_weights,
            arcs,
            out,
            stochastic: false,
        };
        w.stochastic = w.check_stochastic(STOCHASTIC_TOL);
        Ok(w)
    }

    /// Weight-one copy of an automaton; labels are the transition names and
    /// arc `i` corresponds to transition `i`.
    pub fn from_automaton(a: &Automaton) -> Self {
        Self::from_automaton_weighted(a, &vec![1.0; a.num_transitions()]).expect("unit weights are valid")
    }

    pub fn from_automaton_weighted(a: &Automaton, weights: &[f64]) -> Result<Self> {
        let arcs = a
            .transitions()
            .iter()
            .zip(weights)
            .map(|(t, &w)| WeightedArc::new(t.src, t.dst, Label::sym(t.name.as_str()), w))
            .collect();
        WeightedAutomaton::new(a.num_states(), a.initial(), a.finals().map(|q| (q, 1.0)), arcs)
    }

    /// Same shell with new arc weights.
    pub fn with_weights(&self, weights: &[f64]) -> Result<Self> {
        let arcs = self
            .arcs
            .iter()
            .zip(weights)
            .map(|(a, &w)| WeightedArc::new(a.src, a.dst, a.label.clone(), w))
            .collect();
        let finals: Vec<(usize, f64)> = self.final_weights().collect();
        WeightedAutomaton::new(self.num_states, self.initial, finals, arcs)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn arcs(&self) -> &[WeightedArc] {
        &self.arcs
    }

    pub fn weights(&self) -> Vec<f64> {
        self.arcs.iter().map(|a| a.weight).collect()
    }

    pub fn outgoing(&self, q: StateId) -> &[usize] {
        &self.out[q]
    }

    pub fn final_weight(&self, q: StateId) -> Option<f64> {
        self.finals[q]
    }

    pub fn final_weights(&self) -> impl Iterator<Item = (StateId, f64)> + '_ {
        self.finals.iter().enumerate().filter_map(|(q, w)| w.map(|w| (q, w)))
    }

    /// States plus arcs.
    pub fn size(&self) -> usize {
        self.num_states + self.arcs.len()
    }

    pub fn is_stochastic(&self) -> bool {
        self.stochastic
    }

    fn check_stochastic(&self, tol: f64) -> bool {
        (0..self.num_states).all(|q| {
            let s: f64 = self.out[q].iter().map(|&i| self.arcs[i].weight).sum::<f64>() + self.finals[q].unwrap_or(0.0);
            (s - 1.0).abs() <= tol
        })
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.arcs.iter().map(|a| (a.src, a.dst)).collect()
    }

    fn topo(&self) -> Result<Vec<StateId>> {
        graph::topo_order(self.num_states, &self.edges()).ok_or(Error::Cyclic)
    }

    /// Deterministic: at most one arc per (state, label), epsilon-free.
    pub fn is_deterministic(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.arcs
            .iter()
            .all(|a| a.label != Label::Eps && seen.insert((a.src, a.label.clone())))
    }

    /// Sums of path weights, computed in one topological sweep.
    pub fn shortest_distance(&self, direction: Direction) -> Result<Vec<f64>> {
        let topo = self.topo()?;
        let mut d = vec![0.0; self.num_states];
        match direction {
            Direction::Backward => {
                for &q in topo.iter().rev() {
                    let mut s = self.finals[q].unwrap_or(0.0);
                    for &i in &self.out[q] {
                        let a = &self.arcs[i];
                        s += a.weight * d[a.dst];
                    }
                    d[q] = s;
                }
            }
            Direction::Forward => {
                d[self.initial] = 1.0;
                for &q in &topo {
                    for &i in &self.out[q] {
                        let a = &self.arcs[i];
                        d[a.dst] += d[q] * a.weight;
                    }
                }
            }
        }
        Ok(d)
    }

    /// Reweights so that outgoing weights plus final weight sum to one at
    /// every state while normalized path weights stay the same. States
    /// carrying no mass are dropped; otherwise the shell is unchanged.
    pub fn weight_push(&self) -> Result<WeightedAutomaton> {
        let d = self.shortest_distance(Direction::Backward)?;
        if d[self.initial] <= 0.0 {
            return Err(Error::ZeroTotalMass);
        }
        let mut new_id = vec![None; self.num_states];
        let mut n = 0;
        for q in 0..self.num_states {
            if d[q] > 0.0 {
                new_id[q] = Some(n);
                n += 1;
            }
        }
        let arcs = self
            .arcs
            .iter()
            .filter_map(|a| {
                let (s, t) = (new_id[a.src]?, new_id[a.dst]?);
                Some(WeightedArc::new(s, t, a.label.clone(), a.weight * d[a.dst] / d[a.src]))
            })
            .collect();
        let finals: Vec<(usize, f64)> = self
            .final_weights()
            .filter_map(|(q, w)| Some((new_id[q]?, w / d[q])))
            .collect();
        WeightedAutomaton::new(n, new_id[self.initial].unwrap(), finals, arcs)
    }

    /// Draws an accepting path: at each state an outgoing arc or stopping
    /// (if final) is chosen with probability equal to its weight.
    pub fn sample_path<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Path> {
        if !self.stochastic {
            return Err(Error::NotStochastic);
        }
        let mut q = self.initial;
        let mut path = Vec::new();
        loop {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick: Option<Option<usize>> = None;
            let mut last_positive: Option<Option<usize>> = None;
            for &i in &self.out[q] {
                let w = self.arcs[i].weight;
                if w > 0.0 {
                    last_positive = Some(Some(i));
                }
                acc += w;
                if u < acc {
                    pick = Some(Some(i));
                    break;
                }
            }
            if pick.is_none() {
                if let Some(wf) = self.finals[q] {
                    if wf > 0.0 {
                        last_positive = Some(None);
                    }
                    if u < acc + wf {
                        pick = Some(None);
                    }
                }
            }
            match pick.or(last_positive) {
                Some(Some(i)) => {
                    path.push(i);
                    q = self.arcs[i].dst;
                }
                Some(None) => return Ok(Path(path)),
                None => return Err(Error::ZeroTotalMass),
            }
        }
    }

    /// Probability that a path drawn from the normalized path distribution
    /// uses each arc. Works for any acyclic machine with positive mass.
    pub fn flows(&self) -> Result<Vec<f64>> {
        let fwd = self.shortest_distance(Direction::Forward)?;
        let bwd = self.shortest_distance(Direction::Backward)?;
        let z = bwd[self.initial];
        if z <= 0.0 {
            return Err(Error::ZeroTotalMass);
        }
        Ok(self
            .arcs
            .iter()
            .map(|a| fwd[a.src] * a.weight * bwd[a.dst] / z)
            .collect())
    }

    /// [`flows`](Self::flows) restricted to stochastic machines.
    pub fn edge_flow(&self) -> Result<Vec<f64>> {
        if !self.stochastic {
            return Err(Error::NotStochastic);
        }
        self.flows()
    }

    fn arc_for(&self, q: StateId, label: &Label) -> Option<usize> {
        self.out[q].iter().copied().find(|&i| &self.arcs[i].label == label)
    }

    /// Weight of the (unique) path reading `labels`, zero if rejected.
    pub fn path_weight<S: AsRef<str>>(&self, labels: &[S]) -> f64 {
        let mut q = self.initial;
        let mut w = 1.0;
        for s in labels {
            let l = Label::sym(s.as_ref());
            match self.arc_for(q, &l).or_else(|| self.arc_for(q, &Label::Rho)) {
                Some(i) => {
                    w *= self.arcs[i].weight;
                    q = self.arcs[i].dst;
                }
                None => return 0.0,
            }
        }
        self.finals[q].map_or(0.0, |f| w * f)
    }

    /// Labels along a path.
    pub fn labels_of(&self, p: &Path) -> Vec<String> {
        p.0.iter().map(|&i| self.arcs[i].label.to_string()).collect()
    }

    /// Every accepting path with its weight (acyclic machines only).
    pub fn paths(&self, cap: usize) -> Result<Vec<(Path, f64)>> {
        self.topo()?;
        let mut out = Vec::new();
        let mut stack = vec![(self.initial, Vec::<usize>::new(), 1.0)];
        while let Some((q, p, w)) = stack.pop() {
            if let Some(f) = self.finals[q] {
                out.push((Path(p.clone()), w * f));
                if out.len() > cap {
                    return Err(Error::TooManyPaths { cap });
                }
            }
            for &i in self.out[q].iter().rev() {
                let mut np = p.clone();
                np.push(i);
                stack.push((self.arcs[i].dst, np, w * self.arcs[i].weight));
            }
        }
        Ok(out)
    }
}

/// Product of two deterministic machines: `(w1 ∘ w2)(x) = w1(x) · w2(x)`.
/// A label without a literal partner matches the partner state's rho arc;
/// two rho arcs match each other. The result is trimmed and renumbered.
pub fn intersect(w1: &WeightedAutomaton, w2: &WeightedAutomaton) -> Result<WeightedAutomaton> {
    for w in [w1, w2] {
        if w.arcs.iter().any(|a| a.label == Label::Eps) {
            return Err(Error::EpsilonNotSupported);
        }
        if !w.is_deterministic() {
            let a = w
                .arcs
                .iter()
                .enumerate()
                .find(|(i, a)| w.arcs[..*i].iter().any(|b| b.src == a.src && b.label == a.label))
                .map(|(_, a)| a)
                .unwrap();
            return Err(Error::NonDeterministic {
                state: a.src,
                input: a.label.to_string(),
            });
        }
    }
    let mut ids: HashMap<(StateId, StateId), usize> = HashMap::new();
    let mut pairs: Vec<(StateId, StateId)> = Vec::new();
    let mut queue = VecDeque::new();
    let mut arcs: Vec<WeightedArc> = Vec::new();
    let mut intern = |p: (StateId, StateId), pairs: &mut Vec<_>, queue: &mut VecDeque<usize>| {
        *ids.entry(p).or_insert_with(|| {
            pairs.push(p);
            queue.push_back(pairs.len() - 1);
            pairs.len() - 1
        })
    };
    let start = intern((w1.initial, w2.initial), &mut pairs, &mut queue);
    while let Some(id) = queue.pop_front() {
        let (q1, q2) = pairs[id];
        let rho1 = w1.arc_for(q1, &Label::Rho);
        let rho2 = w2.arc_for(q2, &Label::Rho);
        for &i in &w1.out[q1] {
            let a = &w1.arcs[i];
            match &a.label {
                Label::Sym(_) => {
                    if let Some(j) = w2.arc_for(q2, &a.label).or(rho2) {
                        let b = &w2.arcs[j];
                        let d = intern((a.dst, b.dst), &mut pairs, &mut queue);
                        arcs.push(WeightedArc::new(id, d, a.label.clone(), a.weight * b.weight));
                    }
                }
                Label::Rho => {
                    if let Some(j) = rho2 {
                        let b = &w2.arcs[j];
                        let d = intern((a.dst, b.dst), &mut pairs, &mut queue);
                        arcs.push(WeightedArc::new(id, d, Label::Rho, a.weight * b.weight));
                    }
                }
                Label::Eps => unreachable!("checked above"),
            }
        }
        if let Some(i) = rho1 {
            for &j in &w2.out[q2] {
                let b = &w2.arcs[j];
                if matches!(b.label, Label::Sym(_)) && w1.arc_for(q1, &b.label).is_none() {
                    let a = &w1.arcs[i];
                    let d = intern((a.dst, b.dst), &mut pairs, &mut queue);
                    arcs.push(WeightedArc::new(id, d, b.label.clone(), a.weight * b.weight));
                }
            }
        }
    }
    let final_w: Vec<Option<f64>> = pairs
        .iter()
        .map(|&(q1, q2)| Some(w1.finals[q1]? * w2.finals[q2]?))
        .collect();
    let final_ids: Vec<usize> = (0..pairs.len()).filter(|&i| final_w[i].is_some()).collect();
    let edges: Vec<(usize, usize)> = arcs.iter().map(|a| (a.src, a.dst)).collect();
    let r = graph::canonical_relabel(pairs.len(), start, &final_ids, &edges);
    let new_arcs = r
        .edge_order
        .iter()
        .map(|&i| {
            let a = &arcs[i];
            WeightedArc::new(r.state_map[a.src].unwrap(), r.state_map[a.dst].unwrap(), a.label.clone(), a.weight)
        })
        .collect();
    let finals: Vec<(usize, f64)> = final_ids
        .iter()
        .filter_map(|&q| Some((r.state_map[q]?, final_w[q]?)))
        .collect();
    WeightedAutomaton::new(r.num_states, 0, finals, new_arcs)
}

impl fmt::Display for WeightedAutomaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.arcs {
            writeln!(f, "{}\t{}\t{}\t{}", a.src, a.dst, a.label, fmt_f64(a.weight))?;
        }
        for (q, w) in self.final_weights() {
            writeln!(f, "{q}\t{}", fmt_f64(w))?;
        }
        Ok(())
    }
}

impl FromStr for WeightedAutomaton {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut arcs = Vec::new();
        let mut finals = Vec::new();
        for (n, raw) in s.lines().enumerate() {
            let line = n + 1;
            let fields: Vec<&str> = raw.split_whitespace().collect();
            let weight = |tok: &str| {
                tok.parse::<f64>()
                    .map_err(|_| parse_err(line, format!("`{tok}` is not a weight")))
            };
            let label = |tok: &str| Label::parse_token(tok).map_err(|e| parse_err(line, e.to_string()));
            match fields.as_slice() {
                [] => {}
                [q] => finals.push((parse_state(q, line)?, 1.0)),
                [q, w] => finals.push((parse_state(q, line)?, weight(w)?)),
                [src, dst, l] => arcs.push(WeightedArc::new(parse_state(src, line)?, parse_state(dst, line)?, label(l)?, 1.0)),
                [src, dst, l, w] => arcs.push(WeightedArc::new(
                    parse_state(src, line)?,
                    parse_state(dst, line)?,
                    label(l)?,
                    weight(w)?,
                )),
                _ => return Err(parse_err(line, format!("expected 1 to 4 fields, found {}", fields.len()))),
            }
        }
        let ends: Vec<(usize, usize)> = arcs.iter().map(|a: &WeightedArc| (a.src, a.dst)).collect();
        let final_ids: Vec<usize> = finals.iter().map(|f| f.0).collect();
        let (num_states, initial) = infer_shell(&ends, &final_ids);
        WeightedAutomaton::new(num_states, initial, finals, arcs)
    }
}
