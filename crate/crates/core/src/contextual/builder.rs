use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use super::patterns::PatternSet;
use super::rules::{extend_history, rule_transducer, truncate_history, RuleSet};
use super::symbol::ContextSymbol;
use crate::automata::{
    compose, epsilon_remove, equalize_path_lengths, project_output, Automaton, LabeledAutomaton, Path, Sizes,
};
use crate::error::{Error, Result};

/// Token used for padding transitions in label strings and text output.
pub const PAD_TOKEN: &str = "<pad>";

/// What a transition of the context automaton carries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EdgeLabel {
    Context(ContextSymbol),
    /// Zero-gain transition added by path-length equalization.
    Padding,
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeLabel::Context(s) => s.fmt(f),
            EdgeLabel::Padding => f.write_str(PAD_TOKEN),
        }
    }
}

/// Automaton over context symbols whose paths correspond one to one with
/// the paths of the expert automaton (up to merging of paths that emit
/// nothing), and on which count-based gains become additive.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextAutomaton {
    machine: Automaton,
    labels: Vec<EdgeLabel>,
    /// Expert transitions named by each label; empty for padding.
    sources: Vec<Vec<usize>>,
    source: Automaton,
    rules: RuleSet,
}

impl ContextAutomaton {
    /// Composes the expert automaton with its rule transducer, keeps the
    /// output side and removes epsilons.
    pub fn build(a: &Automaton, ps: &PatternSet) -> Result<Self> {
        let rules = RuleSet::build(a, ps);
        let t = rule_transducer(a, &rules);
        let projected = project_output(&compose(a, &t));
        let labeled = epsilon_remove(&projected)?;
        ContextAutomaton::from_labeled(labeled, a, rules)
    }

    /// Same machine built without the transducer: states are pairs of an
    /// expert state and the recent history of expert transitions, and
    /// steps that emit nothing are followed on the fly.
    pub fn build_direct(a: &Automaton, ps: &PatternSet) -> Result<Self> {
        let rules = RuleSet::build(a, ps);
        let labeled = DirectBuilder::new(a, &rules).run();
        ContextAutomaton::from_labeled(labeled, a, rules)
    }

    fn from_labeled(labeled: LabeledAutomaton, a: &Automaton, rules: RuleSet) -> Result<Self> {
        let mut labels = Vec::with_capacity(labeled.labels.len());
        let mut sources = Vec::with_capacity(labeled.labels.len());
        for l in &labeled.labels {
            let sym: ContextSymbol = l.parse()?;
            sources.push(sym.names.iter().map(|n| a.index_of(n).expect("symbols name expert transitions")).collect());
            labels.push(EdgeLabel::Context(sym));
        }
        Ok(ContextAutomaton {
            machine: labeled.machine,
            labels,
            sources,
            source: a.clone(),
            rules,
        })
    }

    pub fn machine(&self) -> &Automaton {
        &self.machine
    }

    pub fn source(&self) -> &Automaton {
        &self.source
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    pub fn labels(&self) -> &[EdgeLabel] {
        &self.labels
    }

    pub fn label(&self, edge: usize) -> &EdgeLabel {
        &self.labels[edge]
    }

    /// Expert transitions whose outputs make up the symbol of `edge`.
    pub fn edge_sources(&self, edge: usize) -> &[usize] {
        &self.sources[edge]
    }

    pub fn is_padding(&self, edge: usize) -> bool {
        self.labels[edge] == EdgeLabel::Padding
    }

    pub fn sizes(&self) -> Sizes {
        self.machine.sizes()
    }

    /// Labels along a path, padding rendered as [`PAD_TOKEN`].
    pub fn label_string(&self, p: &Path) -> Vec<String> {
        p.0.iter().map(|&i| self.labels[i].to_string()).collect()
    }

    /// Context symbols along a path, padding skipped.
    pub fn output_symbols(&self, p: &Path) -> Vec<ContextSymbol> {
        p.0.iter()
            .filter_map(|&i| match &self.labels[i] {
                EdgeLabel::Context(s) => Some(s.clone()),
                EdgeLabel::Padding => None,
            })
            .collect()
    }

    /// Label strings of all accepting paths.
    pub fn strings(&self, cap: usize) -> Result<BTreeSet<Vec<String>>> {
        Ok(self
            .machine
            .enumerate_paths(cap)?
            .iter()
            .map(|p| self.label_string(p))
            .collect())
    }

    /// The path whose symbols are those emitted along `pi`.
    pub fn map_path(&self, pi: &Path) -> Result<Path> {
        if !self.source.is_accepting(pi) {
            return Err(Error::NotAccepting);
        }
        let emitted = self.rules.path_output(&pi.0);
        let m = &self.machine;
        let mut q = m.initial();
        let mut out = Vec::with_capacity(emitted.len());
        let pad_from = |q: usize| m.outgoing(q).iter().copied().find(|&i| self.is_padding(i));
        for sym in &emitted {
            loop {
                let direct = m
                    .outgoing(q)
                    .iter()
                    .copied()
                    .find(|&i| matches!(&self.labels[i], EdgeLabel::Context(s) if s == sym));
                if let Some(i) = direct {
                    out.push(i);
                    q = m.transition(i).dst;
                    break;
                }
                let i = pad_from(q).ok_or(Error::NotAccepting)?;
                out.push(i);
                q = m.transition(i).dst;
            }
        }
        while !m.is_final(q) {
            let i = pad_from(q).ok_or(Error::NotAccepting)?;
            out.push(i);
            q = m.transition(i).dst;
        }
        Ok(Path(out))
    }

    /// The lexicographically smallest expert path mapped to `pi_prime`.
    pub fn representative_path(&self, pi_prime: &Path) -> Result<Path> {
        if !self.machine.is_accepting(pi_prime) {
            return Err(Error::NotAccepting);
        }
        let used: HashSet<usize> = pi_prime.0.iter().flat_map(|&i| self.sources[i].iter().copied()).collect();
        let candidate = if used.is_empty() {
            self.first_silent_path()
        } else {
            self.chain_through(&used)
        };
        match candidate {
            Some(p) if self.map_path(&p).ok().as_ref() == Some(pi_prime) => Ok(p),
            _ => Err(Error::NotAccepting),
        }
    }

    /// Follows the only transition in `used` out of each state.
    fn chain_through(&self, used: &HashSet<usize>) -> Option<Path> {
        let a = &self.source;
        let mut q = a.initial();
        let mut out = Vec::new();
        while out.len() < used.len() {
            let i = a.outgoing(q).iter().copied().find(|i| used.contains(i))?;
            out.push(i);
            q = a.transition(i).dst;
        }
        a.is_final(q).then_some(Path(out))
    }

    /// First accepting path, in name order, along which no rule fires.
    fn first_silent_path(&self) -> Option<Path> {
        let a = &self.source;
        let sorted = |q: usize| {
            let mut v = a.outgoing(q).to_vec();
            v.sort_by(|&x, &y| a.name(x).cmp(a.name(y)));
            v
        };
        let mut path = Vec::new();
        let mut stack = vec![(a.initial(), sorted(a.initial()), 0usize)];
        if a.is_final(a.initial()) {
            return Some(Path(Vec::new()));
        }
        while let Some(top) = stack.last_mut() {
            if top.2 == top.1.len() {
                stack.pop();
                path.pop();
                continue;
            }
            let e = top.1[top.2];
            top.2 += 1;
            path.push(e);
            if !self.rules.path_output(&path).is_empty() {
                path.pop();
                continue;
            }
            let d = a.transition(e).dst;
            if a.is_final(d) {
                return Some(Path(path));
            }
            stack.push((d, sorted(d), 0));
        }
        None
    }

    /// Pads the machine so that all accepting paths have the same length.
    pub fn equalized(&self) -> Result<ContextAutomaton> {
        let used: HashSet<&str> = self.machine.transitions().iter().map(|t| t.name.as_str()).collect();
        let marker = (0..).map(|k| format!("pad{k}_")).find(|m| !used.iter().any(|n| n.starts_with(m.as_str())));
        let eq = equalize_path_lengths(&self.machine, &marker.expect("some marker is free"))?;
        let labels = eq
            .origin
            .iter()
            .map(|o| o.map_or(EdgeLabel::Padding, |i| self.labels[i].clone()))
            .collect();
        let sources = eq.origin.iter().map(|o| o.map_or_else(Vec::new, |i| self.sources[i].clone())).collect();
        Ok(ContextAutomaton {
            machine: eq.machine,
            labels,
            sources,
            source: self.source.clone(),
            rules: self.rules.clone(),
        })
    }
}

/// Transitions as `src dst name label`, then final states.
impl fmt::Display for ContextAutomaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (t, l) in self.machine.transitions().iter().zip(&self.labels) {
            writeln!(f, "{}\t{}\t{}\t{}", t.src, t.dst, t.name, l)?;
        }
        for q in self.machine.finals() {
            writeln!(f, "{q}")?;
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum Node {
    Main(usize, Vec<usize>),
    /// Inside a multi-symbol step: history before the step, the expert
    /// transition read, and the index of the next symbol to emit.
    Aux(Vec<usize>, usize, usize),
}

struct DirectBuilder<'a> {
    a: &'a Automaton,
    rules: &'a RuleSet,
    keep: usize,
    ids: HashMap<Node, usize>,
    nodes: Vec<Node>,
}

impl<'a> DirectBuilder<'a> {
    fn new(a: &'a Automaton, rules: &'a RuleSet) -> Self {
        DirectBuilder {
            a,
            rules,
            keep: rules.history_len(),
            ids: HashMap::new(),
            nodes: Vec::new(),
        }
    }

    fn intern(&mut self, n: Node) -> usize {
        if let Some(&i) = self.ids.get(&n) {
            return i;
        }
        self.nodes.push(n.clone());
        self.ids.insert(n, self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    /// Target node and symbol of emission `i` of the step `h` then `e`.
    fn emit(&mut self, h: &[usize], e: usize, i: usize, ems: &[ContextSymbol]) -> (usize, String) {
        let node = if i + 1 == ems.len() {
            let full = extend_history(self.a, h, e);
            Node::Main(self.a.transition(e).dst, truncate_history(&full, self.keep))
        } else {
            Node::Aux(h.to_vec(), e, i + 1)
        };
        (self.intern(node), ems[i].to_string())
    }

    fn run(mut self) -> LabeledAutomaton {
        let start = self.intern(Node::Main(self.a.initial(), Vec::new()));
        let mut arcs: Vec<(usize, usize, String)> = Vec::new();
        let mut finals = Vec::new();
        let mut k = 0;
        while k < self.nodes.len() {
            let src = k;
            k += 1;
            let mut seen = HashSet::new();
            match self.nodes[src].clone() {
                Node::Aux(h, e, i) => {
                    let ems = self.rules.emissions(&extend_history(self.a, &h, e));
                    let (dst, l) = self.emit(&h, e, i, &ems);
                    arcs.push((src, dst, l));
                }
                Node::Main(qa, h) => {
                    let mut stack = vec![(qa, h)];
                    let mut visited = HashSet::new();
                    while let Some((q, h)) = stack.pop() {
                        if !visited.insert((q, h.clone())) {
                            continue;
                        }
                        if self.a.is_final(q) && finals.last() != Some(&src) {
                            finals.push(src);
                        }
                        for &e in self.a.outgoing(q) {
                            let full = extend_history(self.a, &h, e);
                            let ems = self.rules.emissions(&full);
                            if ems.is_empty() {
                                stack.push((self.a.transition(e).dst, truncate_history(&full, self.keep)));
                                continue;
                            }
                            let (dst, l) = self.emit(&h, e, 0, &ems);
                            if seen.insert((dst, l.clone())) {
                                arcs.push((src, dst, l));
                            }
                        }
                    }
                }
            }
        }
        crate::automata::finish_labeled(self.nodes.len(), start, &finals, &arcs)
    }
}
