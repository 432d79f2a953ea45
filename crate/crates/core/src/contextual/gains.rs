use super::builder::{ContextAutomaton, EdgeLabel};
use super::patterns::{GainVector, PatternSet};
use crate::automata::{Automaton, Path};

/// Gain of one context-automaton transition given the outputs of the expert
/// transitions it names (`None` when not revealed) and the pattern counts
/// of the target.
pub fn edge_gain<S: AsRef<str>>(
    ca: &ContextAutomaton,
    edge: usize,
    out: &[Option<S>],
    target_counts: &GainVector,
    ps: &PatternSet,
) -> f64 {
    let EdgeLabel::Context(sym) = ca.label(edge) else {
        return 0.0;
    };
    let seq: Option<Vec<&str>> = ca.edge_sources(edge).iter().map(|&i| out[i].as_ref().map(AsRef::as_ref)).collect();
    match seq.and_then(|s| ps.index_of(&s)) {
        Some(i) => ps.gap_weight(sym.gap) * target_counts.0[i],
        None => 0.0,
    }
}

/// Gains of all transitions for one round, given every expert output.
pub fn assign_edge_gains<S: AsRef<str>, T: AsRef<str>>(
    ca: &ContextAutomaton,
    out: &[S],
    y: &[T],
    ps: &PatternSet,
) -> Vec<f64> {
    let counts = ps.theta(y);
    let out: Vec<Option<&str>> = out.iter().map(|s| Some(s.as_ref())).collect();
    (0..ca.machine().num_transitions())
        .map(|e| edge_gain(ca, e, &out, &counts, ps))
        .collect()
}

/// Count-based gain of an expert path computed straight from the output
/// sequence, without the context automaton.
pub fn path_gain_oracle<S: AsRef<str>, T: AsRef<str>>(
    a: &Automaton,
    pi: &Path,
    out: &[S],
    y: &[T],
    ps: &PatternSet,
) -> f64 {
    debug_assert!(pi.0.iter().all(|&i| i < a.num_transitions()));
    let predicted: Vec<&str> = pi.0.iter().map(|&i| out[i].as_ref()).collect();
    ps.theta(&predicted).dot(&ps.theta(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ensemble(r: usize, l: usize) -> Automaton {
        let names: Vec<String> = (1..=l).flat_map(|i| (1..=r).map(move |j| format!("h{j}_{i}"))).collect();
        let edges: Vec<(usize, usize, &str)> = (0..l)
            .flat_map(|i| (0..r).map(move |j| (i, j)))
            .map(|(i, j)| (i, i + 1, names[i * r + j].as_str()))
            .collect();
        Automaton::from_edges(0, &[l], &edges).unwrap()
    }

    fn words(s: &str) -> Vec<&str> {
        s.split(' ').collect()
    }

    #[test]
    fn four_gram_translation_example() {
        // two translators; top outputs "He would like to have tea",
        // bottom "She would love to drink chai"
        let a = ensemble(2, 6);
        let top = words("He would like to have tea");
        let bottom = words("She would love to drink chai");
        let out: Vec<&str> = (0..6).flat_map(|i| [top[i], bottom[i]]).collect();
        let y = words("He would like to eat cake");
        let vocab: Vec<&str> = top.iter().chain(&bottom).chain(&y).copied().collect();
        let mut patterns: Vec<Vec<String>> = Vec::new();
        for w in [&top, &bottom, &y] {
            for g in w.windows(4) {
                let g: Vec<String> = g.iter().map(|s| s.to_string()).collect();
                if !patterns.contains(&g) {
                    patterns.push(g);
                }
            }
        }
        assert!(vocab.len() > 4);
        let ps = PatternSet::contiguous(patterns).unwrap();
        let pick = |choice: [usize; 6]| {
            a.path_from_names(&(0..6).map(|i| format!("h{}_{}", choice[i] + 1, i + 1)).collect::<Vec<_>>())
                .unwrap()
        };
        let pi1 = pick([0; 6]);
        let pi2 = pick([1, 0, 0, 0, 0, 0]);
        let pi3 = pick([0, 0, 1, 0, 0, 0]);
        let pi4 = pick([1, 0, 1, 0, 0, 0]);
        assert_eq!(path_gain_oracle(&a, &pi1, &out, &y, &ps), 1.0);
        for p in [&pi2, &pi3, &pi4] {
            assert_eq!(path_gain_oracle(&a, p, &out, &y, &ps), 0.0);
        }
        let ca = ContextAutomaton::build(&a, &ps).unwrap();
        let g = assign_edge_gains(&ca, &out, &y, &ps);
        for p in [&pi1, &pi2, &pi3, &pi4] {
            let mapped = ca.map_path(p).unwrap();
            let additive: f64 = mapped.0.iter().map(|&e| g[e]).sum();
            assert_eq!(additive, path_gain_oracle(&a, p, &out, &y, &ps));
        }
    }

    #[test]
    fn absent_pattern_gains_nothing() {
        let a = ensemble(2, 3);
        let ps = PatternSet::all_ngrams(&["a", "b"], 2).unwrap();
        let ca = ContextAutomaton::build(&a, &ps).unwrap();
        let out = ["a", "b", "a", "a", "b", "b"];
        let y = ["a", "a", "a"];
        let counts = ps.theta(&y);
        let g = assign_edge_gains(&ca, &out, &y, &ps);
        for (e, &v) in g.iter().enumerate() {
            let seq: Vec<&str> = ca.edge_sources(e).iter().map(|&i| out[i]).collect();
            let i = ps.index_of(&seq).unwrap();
            assert_eq!(v, counts.0[i]);
            if seq != ["a", "a"] {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn disjoint_alphabets_give_zero() {
        let a = ensemble(2, 3);
        let ps = PatternSet::all_ngrams(&["a", "b", "x"], 2).unwrap();
        let out = ["a", "b", "a", "a", "b", "b"];
        for p in a.enumerate_paths(100).unwrap() {
            assert_eq!(path_gain_oracle(&a, &p, &out, &["x", "x"], &ps), 0.0);
        }
    }

    #[test]
    fn unrevealed_outputs_and_padding_gain_nothing() {
        let a = Automaton::from_edges(0, &[1, 3], &[(0, 1, "s"), (0, 2, "a"), (2, 3, "b")]).unwrap();
        let ps = PatternSet::all_ngrams(&["u", "v"], 1).unwrap();
        let ca = ContextAutomaton::build(&a, &ps).unwrap().equalized().unwrap();
        let counts = ps.theta(&["u", "u"]);
        let hidden: Vec<Option<&str>> = vec![None; 3];
        let shown: Vec<Option<&str>> = vec![Some("u"); 3];
        for e in 0..ca.machine().num_transitions() {
            assert_eq!(edge_gain(&ca, e, &hidden, &counts, &ps), 0.0);
            let expect = if ca.is_padding(e) { 0.0 } else { 2.0 };
            assert_eq!(edge_gain(&ca, e, &shown, &counts, &ps), expect);
        }
    }

    fn random_dag() -> impl Strategy<Value = Automaton> {
        (2usize..=8)
            .prop_flat_map(|n| {
                let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
                (Just(n), proptest::sample::subsequence(pairs.clone(), 1..=pairs.len().min(12)), 1usize..n)
            })
            .prop_filter_map("needs an accepting path", |(n, pairs, extra_final)| {
                let names: Vec<String> = (0..pairs.len()).map(|i| format!("e{i}")).collect();
                let edges: Vec<(usize, usize, &str)> =
                    pairs.iter().zip(&names).map(|(&(s, d), nm)| (s, d, nm.as_str())).collect();
                let a = Automaton::from_edges(0, &[n - 1, extra_final], &edges).ok()?;
                a.has_accepting_path().then_some(a)
            })
    }

    fn pattern_set(n: usize, discount: f64) -> PatternSet {
        let ps = PatternSet::all_ngrams(&["a", "b", "c"], n).unwrap();
        if n == 1 || discount == 0.0 {
            ps
        } else {
            ps.with_gaps(discount, None).unwrap()
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn gains_are_additive(
            a in random_dag(),
            n in 1usize..=3,
            discount in prop::sample::select(vec![0.0, 0.5, 1.0]),
            out_seed in prop::collection::vec(0usize..3, 12),
            y in prop::collection::vec(prop::sample::select(vec!["a", "b", "c"]), 0..=8),
        ) {
            let ps = pattern_set(n, discount);
            let out: Vec<&str> = (0..a.num_transitions()).map(|i| ["a", "b", "c"][out_seed[i % 12]]).collect();
            let ca = ContextAutomaton::build(&a, &ps).unwrap();
            let g = assign_edge_gains(&ca, &out, &y, &ps);
            for p in a.enumerate_paths(10_000).unwrap() {
                let mapped = ca.map_path(&p).unwrap();
                let additive: f64 = mapped.0.iter().map(|&e| g[e]).sum();
                let oracle = path_gain_oracle(&a, &p, &out, &y, &ps);
                prop_assert!((additive - oracle).abs() <= 1e-9, "{additive} vs {oracle}");
            }
        }

        #[test]
        fn builders_accept_same_strings(a in random_dag(), n in 1usize..=3, gappy in any::<bool>()) {
            let ps = pattern_set(n, if gappy { 0.5 } else { 0.0 });
            let p = ContextAutomaton::build(&a, &ps).unwrap();
            let d = ContextAutomaton::build_direct(&a, &ps).unwrap();
            prop_assert_eq!(p.strings(100_000).unwrap(), d.strings(100_000).unwrap());
        }

        #[test]
        fn paths_map_one_to_one(a in random_dag(), n in 1usize..=3) {
            let ps = pattern_set(n, 0.5);
            let ca = ContextAutomaton::build(&a, &ps).unwrap();
            let paths = a.enumerate_paths(10_000).unwrap();
            let mapped: Vec<Path> = paths.iter().map(|p| ca.map_path(p).unwrap()).collect();
            for (i, p) in paths.iter().enumerate() {
                for (j, q) in paths.iter().enumerate().skip(i + 1) {
                    if mapped[i] == mapped[j] {
                        prop_assert!(mapped[i].is_empty(), "{:?} and {:?} collide", p, q);
                    }
                }
                let back = ca.representative_path(&mapped[i]).unwrap();
                prop_assert_eq!(ca.map_path(&back).unwrap(), mapped[i].clone());
            }
            for q in ca.machine().enumerate_paths(10_000).unwrap() {
                let p = ca.representative_path(&q).unwrap();
                prop_assert_eq!(ca.map_path(&p).unwrap(), q);
            }
        }
    }
}
