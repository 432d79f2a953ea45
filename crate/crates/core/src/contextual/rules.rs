use std::collections::{BTreeSet, HashMap, VecDeque};

use super::patterns::PatternSet;
use super::symbol::ContextSymbol;
use crate::automata::{Arc, Automaton, Label, Transducer};

/// Rewrite rule with empty contexts: the path segment `window` (indices of
/// expert transitions) produces `output`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub window: Vec<usize>,
    pub output: ContextSymbol,
}

/// All `k`-subsets of `0..n`, in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Every path segment of `a` with exactly `len` transitions.
fn segments(a: &Automaton, len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for q in 0..a.num_states() {
        let mut stack: Vec<Vec<usize>> = a.outgoing(q).iter().rev().map(|&i| vec![i]).collect();
        while let Some(seg) = stack.pop() {
            if seg.len() == len {
                out.push(seg);
                continue;
            }
            let last = a.transition(*seg.last().unwrap()).dst;
            for &i in a.outgoing(last).iter().rev() {
                let mut s = seg.clone();
                s.push(i);
                stack.push(s);
            }
        }
    }
    out
}

/// One rule per (path segment, anchored subsequence) pair: for each pattern
/// length `r` and total gap `k` within the cap, every segment of `r + k`
/// transitions yields the subsequences of length `r` that keep both ends.
pub fn generate_rules(a: &Automaton, ps: &PatternSet) -> Vec<Rule> {
    let longest = a.longest_path().unwrap_or(0);
    let mut rules = Vec::new();
    for r in ps.lengths() {
        let Some(limit) = ps.gap_limit(r, longest) else {
            continue;
        };
        let limit = if r == 1 { 0 } else { limit };
        for k in 0..=limit {
            let w = r + k;
            let picks: Vec<Vec<usize>> = if r == 1 {
                vec![vec![0]]
            } else {
                combinations(w - 2, r - 2)
                    .into_iter()
                    .map(|inner| {
                        let mut idx = vec![0];
                        idx.extend(inner.into_iter().map(|i| i + 1));
                        idx.push(w - 1);
                        idx
                    })
                    .collect()
            };
            for seg in segments(a, w) {
                for idx in &picks {
                    let names = idx.iter().map(|&i| a.name(seg[i]).to_string());
                    rules.push(Rule {
                        window: seg.clone(),
                        output: ContextSymbol::new(names, k),
                    });
                }
            }
        }
    }
    rules
}

/// Rules indexed by window, with the emission logic shared by the rule
/// transducer, the direct builder and path mapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSet {
    by_window: HashMap<Vec<usize>, Vec<ContextSymbol>>,
    max_window: usize,
    num_rules: usize,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>) -> Self {
        let num_rules = rules.len();
        let mut by_window: HashMap<Vec<usize>, Vec<ContextSymbol>> = HashMap::new();
        let mut max_window = 0;
        for r in rules {
            max_window = max_window.max(r.window.len());
            by_window.entry(r.window).or_default().push(r.output);
        }
        RuleSet {
            by_window,
            max_window,
            num_rules,
        }
    }

    pub fn build(a: &Automaton, ps: &PatternSet) -> Self {
        RuleSet::new(generate_rules(a, ps))
    }

    pub fn len(&self) -> usize {
        self.num_rules
    }

    pub fn is_empty(&self) -> bool {
        self.num_rules == 0
    }

    /// Longest window any rule looks at.
    pub fn max_window(&self) -> usize {
        self.max_window
    }

    /// Number of trailing transitions worth remembering between steps.
    pub fn history_len(&self) -> usize {
        self.max_window.saturating_sub(1)
    }

    /// Symbols produced by the step that ends `history` (a path segment
    /// whose last element was just read), in emission order.
    pub fn emissions(&self, history: &[usize]) -> Vec<ContextSymbol> {
        let mut out = Vec::new();
        for w in 1..=history.len().min(self.max_window) {
            if let Some(v) = self.by_window.get(&history[history.len() - w..]) {
                out.extend(v.iter().cloned());
            }
        }
        out.sort_by(ContextSymbol::emission_cmp);
        out
    }

    /// Emission sequence of a whole path of the expert automaton.
    pub fn path_output(&self, path: &[usize]) -> Vec<ContextSymbol> {
        let mut out = Vec::new();
        for end in 1..=path.len() {
            let start = end.saturating_sub(self.max_window);
            out.extend(self.emissions(&path[start..end]));
        }
        out
    }

    /// Distinct symbols over all rules.
    pub fn symbols(&self) -> BTreeSet<String> {
        self.by_window.values().flatten().map(ToString::to_string).collect()
    }
}

/// History after reading `e` in state `h`: `h e` if `e` continues the
/// segment `h`, otherwise just `e`.
pub(crate) fn extend_history(a: &Automaton, h: &[usize], e: usize) -> Vec<usize> {
    let continues = h.last().is_none_or(|&l| a.transition(l).dst == a.transition(e).src);
    let mut full = if continues { h.to_vec() } else { Vec::new() };
    full.push(e);
    full
}

pub(crate) fn truncate_history(full: &[usize], keep: usize) -> Vec<usize> {
    full[full.len().saturating_sub(keep)..].to_vec()
}

/// Transducer over expert-transition names that outputs, after each name,
/// the symbols of every rule whose window ends there.
///
/// Its states are the path segments of length below the longest window,
/// read as "what was recently seen"; all of them are final. A step that
/// emits several symbols passes through non-final auxiliary states linked
/// by epsilon-input arcs.
pub fn build_rule_transducer(a: &Automaton, ps: &PatternSet) -> Transducer {
    rule_transducer(a, &RuleSet::build(a, ps))
}

pub(crate) fn rule_transducer(a: &Automaton, rules: &RuleSet) -> Transducer {
    let keep = rules.history_len();
    let mut ids: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut histories: Vec<Vec<usize>> = Vec::new();
    let mut main_states = Vec::new();
    let mut queue = VecDeque::new();
    let mut num_states = 0usize;
    let mut arcs = Vec::new();
    ids.insert(Vec::new(), 0);
    histories.push(Vec::new());
    main_states.push(0);
    queue.push_back(0usize);
    num_states += 1;
    while let Some(hid) = queue.pop_front() {
        let src = main_states[hid];
        let h = histories[hid].clone();
        for e in 0..a.num_transitions() {
            let full = extend_history(a, &h, e);
            let next = truncate_history(&full, keep);
            let next_id = *ids.entry(next.clone()).or_insert_with(|| {
                histories.push(next);
                main_states.push(num_states);
                num_states += 1;
                queue.push_back(histories.len() - 1);
                histories.len() - 1
            });
            let dst = main_states[next_id];
            let ems = rules.emissions(&full);
            let input = Label::sym(a.name(e));
            if ems.is_empty() {
                arcs.push(Arc::new(src, dst, input, Label::Eps));
                continue;
            }
            let mut from = src;
            for (i, s) in ems.iter().enumerate() {
                let to = if i + 1 == ems.len() {
                    dst
                } else {
                    num_states += 1;
                    num_states - 1
                };
                let inp = if i == 0 { input.clone() } else { Label::Eps };
                arcs.push(Arc::new(from, to, inp, Label::sym(s.to_string())));
                from = to;
            }
        }
    }
    Transducer::new(num_states, 0, main_states, arcs).expect("rule transducer is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path5() -> Automaton {
        Automaton::chain(&["e1", "e2", "e3", "e4", "e5"]).unwrap()
    }

    fn trigram_gappy() -> PatternSet {
        PatternSet::new(vec![vec!["a".into(), "b".into(), "c".into()]], 0.5, None).unwrap()
    }

    fn ensemble(r: usize, l: usize) -> Automaton {
        let names: Vec<String> = (1..=l).flat_map(|i| (1..=r).map(move |j| format!("h{j}_{i}"))).collect();
        let edges: Vec<(usize, usize, &str)> = (1..=l)
            .flat_map(|i| (0..r).map(move |j| (i, j)))
            .map(|(i, j)| (i - 1, i, names[(i - 1) * r + j].as_str()))
            .collect();
        Automaton::from_edges(0, &[l], &edges).unwrap()
    }

    #[test]
    fn combinations_small() {
        assert_eq!(combinations(3, 1), vec![vec![0], vec![1], vec![2]]);
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(2, 0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn ensemble_rule_count() {
        for (r, l, n) in [(2, 4, 2), (3, 5, 2), (2, 6, 3)] {
            let a = ensemble(r, l);
            let ps = PatternSet::all_ngrams(&["x", "y"], n).unwrap();
            assert_eq!(generate_rules(&a, &ps).len(), (l - n + 1) * r.pow(n as u32));
        }
    }

    #[test]
    fn gappy_trigrams_on_five_transitions() {
        let rules = generate_rules(&path5(), &trigram_gappy());
        let mut got: Vec<String> = rules.iter().map(|r| r.output.to_string()).collect();
        got.sort();
        let mut want = vec![
            "#e1+e2+e3@0",
            "#e2+e3+e4@0",
            "#e3+e4+e5@0",
            "#e1+e2+e4@1",
            "#e1+e3+e4@1",
            "#e2+e3+e5@1",
            "#e2+e4+e5@1",
            "#e1+e2+e5@2",
            "#e1+e4+e5@2",
            "#e1+e3+e5@2",
        ];
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn long_patterns_produce_no_rules() {
        let ps = PatternSet::all_ngrams(&["x"], 6).unwrap();
        assert!(generate_rules(&path5(), &ps).is_empty());
    }

    #[test]
    fn transducer_emits_in_canonical_order() {
        let a = path5();
        let t = build_rule_transducer(&a, &trigram_gappy());
        let out = t.transduce(&["e1", "e2", "e3", "e4", "e5"]);
        let want: Vec<String> = [
            "#e1+e2+e3@0",
            "#e2+e3+e4@0",
            "#e1+e2+e4@1",
            "#e1+e3+e4@1",
            "#e3+e4+e5@0",
            "#e2+e3+e5@1",
            "#e2+e4+e5@1",
            "#e1+e2+e5@2",
            "#e1+e3+e5@2",
            "#e1+e4+e5@2",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        assert_eq!(out, BTreeSet::from([want]));
        assert_eq!(t.transduce::<&str>(&[]), BTreeSet::from([vec![]]));
    }

    #[test]
    fn bigram_transducer_shape() {
        let a = Automaton::chain(&["e1", "e3"]).unwrap();
        let ps = PatternSet::all_ngrams(&["x", "y"], 2).unwrap();
        let t = build_rule_transducer(&a, &ps);
        assert_eq!(t.num_states(), 3);
        assert_eq!(t.arcs().len(), 6);
        assert_eq!(t.transduce(&["e1", "e3"]), BTreeSet::from([vec!["#e1+e3@0".to_string()]]));
        assert_eq!(t.transduce(&["e3", "e1"]), BTreeSet::from([vec![]]));
    }

    #[test]
    fn gap_encoding_collapses_position_variants() {
        // Within the window e1..e5, trigram symbols with total gap 2 can
        // place their two skipped transitions in C(3, 2) = 3 ways; the gap
        // count annotation distinguishes none of them.
        let rules = generate_rules(&path5(), &trigram_gappy());
        let full_window: Vec<&Rule> = rules.iter().filter(|r| r.window.len() == 5).collect();
        let masks = full_window.len();
        let annotations: BTreeSet<usize> = full_window.iter().map(|r| r.output.gap).collect();
        assert_eq!(masks, 3);
        assert_eq!(masks / annotations.len(), 3);
    }
}
