use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::automata::check_token;
use crate::error::{parse_err, Error, Result};

/// Dense vector of (discounted) pattern occurrence counts.
#[derive(Debug, Clone, PartialEq)]
pub struct GainVector(pub Vec<f64>);

impl GainVector {
    pub fn dot(&self, other: &GainVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }
}

/// Patterns over the output alphabet together with the gap policy used to
/// count their occurrences.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternSet {
    patterns: Vec<Vec<String>>,
    discount: f64,
    max_gap: Option<usize>,
    index: HashMap<Vec<String>, usize>,
}

impl PatternSet {
    /// `max_gap = None` allows gaps of any length.
    pub fn new(patterns: Vec<Vec<String>>, discount: f64, max_gap: Option<usize>) -> Result<Self> {
        if patterns.is_empty() {
            return Err(Error::InvalidPatterns("no patterns given".into()));
        }
        if !(0.0..=1.0).contains(&discount) {
            return Err(Error::InvalidPatterns(format!("discount {discount} outside [0, 1]")));
        }
        let mut index = HashMap::with_capacity(patterns.len());
        for (i, p) in patterns.iter().enumerate() {
            if p.is_empty() {
                return Err(Error::InvalidPatterns("empty pattern".into()));
            }
            for s in p {
                check_token(s)?;
            }
            if index.insert(p.clone(), i).is_some() {
                return Err(Error::InvalidPatterns(format!("duplicate pattern `{}`", p.join(" "))));
            }
        }
        Ok(PatternSet {
            patterns,
            discount,
            max_gap,
            index,
        })
    }

    /// Plain contiguous occurrence counting.
    pub fn contiguous(patterns: Vec<Vec<String>>) -> Result<Self> {
        PatternSet::new(patterns, 1.0, Some(0))
    }

    /// Every sequence of length `n` over `alphabet`, counted contiguously.
    pub fn all_ngrams<S: AsRef<str>>(alphabet: &[S], n: usize) -> Result<Self> {
        let mut patterns: Vec<Vec<String>> = vec![Vec::new()];
        for _ in 0..n {
            patterns = patterns
                .into_iter()
                .flat_map(|p| {
                    alphabet.iter().map(move |s| {
                        let mut q = p.clone();
                        q.push(s.as_ref().to_string());
                        q
                    })
                })
                .collect();
        }
        PatternSet::contiguous(patterns)
    }

    /// Same patterns under another gap policy.
    pub fn with_gaps(&self, discount: f64, max_gap: Option<usize>) -> Result<Self> {
        PatternSet::new(self.patterns.clone(), discount, max_gap)
    }

    pub fn patterns(&self) -> &[Vec<String>] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn max_gap(&self) -> Option<usize> {
        self.max_gap
    }

    pub fn lengths(&self) -> BTreeSet<usize> {
        self.patterns.iter().map(Vec::len).collect()
    }

    pub fn index_of<S: AsRef<str>>(&self, seq: &[S]) -> Option<usize> {
        let key: Vec<String> = seq.iter().map(|s| s.as_ref().to_string()).collect();
        self.index.get(&key).copied()
    }

    /// Largest total gap allowed for a pattern of length `r` inside paths of
    /// length at most `longest`.
    pub fn gap_limit(&self, r: usize, longest: usize) -> Option<usize> {
        let room = longest.checked_sub(r)?;
        Some(self.max_gap.map_or(room, |g| g.min(room)))
    }

    /// Weight of an occurrence with total gap `k`.
    pub fn gap_weight(&self, k: usize) -> f64 {
        self.discount.powi(k as i32)
    }

    pub fn theta<S: AsRef<str>>(&self, y: &[S]) -> GainVector {
        theta_counts(y, self)
    }
}

/// Occurrence vector of `y`: component `i` sums `γ^gap` over every
/// occurrence of pattern `i` as a subsequence of `y` whose first and last
/// symbols are matched by the pattern's ends, with total gap at most the
/// cap.
pub fn theta_counts<S: AsRef<str>>(y: &[S], ps: &PatternSet) -> GainVector {
    let y: Vec<&str> = y.iter().map(AsRef::as_ref).collect();
    let mut counts = vec![0.0; ps.len()];
    if ps.max_gap == Some(0) {
        for r in ps.lengths() {
            for w in y.windows(r) {
                if let Some(i) = ps.index_of(w) {
                    counts[i] += 1.0;
                }
            }
        }
        return GainVector(counts);
    }
    let cap = ps.max_gap.unwrap_or(usize::MAX);
    for (i, p) in ps.patterns.iter().enumerate() {
        counts[i] = anchored_occurrences(&y, p, cap, ps.discount);
    }
    GainVector(counts)
}

/// For every start `s` matching the first symbol, scans ends `e` left to
/// right while maintaining the number of embeddings of the pattern's
/// interior into `y[s+1..e]`.
fn anchored_occurrences(y: &[&str], p: &[String], cap: usize, discount: f64) -> f64 {
    let n = p.len();
    let mut total = 0.0;
    for s in 0..y.len() {
        if y[s] != p[0] {
            continue;
        }
        if n == 1 {
            total += 1.0;
            continue;
        }
        let interior = &p[1..n - 1];
        // emb[j] = embeddings of interior[..j] into the scanned range
        let mut emb = vec![0.0f64; interior.len() + 1];
        emb[0] = 1.0;
        for e in s + 1..y.len() {
            if e + 1 >= s + n {
                let gap = e + 1 - s - n;
                if gap > cap {
                    break;
                }
                if y[e] == p[n - 1] {
                    total += emb[interior.len()] * discount.powi(gap as i32);
                }
            }
            for j in (1..=interior.len()).rev() {
                if y[e] == interior[j - 1] {
                    emb[j] += emb[j - 1];
                }
            }
        }
    }
    total
}

impl fmt::Display for PatternSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "discount={}", self.discount)?;
        match self.max_gap {
            Some(g) => writeln!(f, "max_gap={g}")?,
            None => writeln!(f, "max_gap=inf")?,
        }
        for p in &self.patterns {
            writeln!(f, "{}", p.join(" "))?;
        }
        Ok(())
    }
}

/// Pattern files: optional `discount=<float>` and `max_gap=<int|inf>`
/// header lines, then one space-separated pattern per line. Without a
/// header, counting is contiguous.
impl FromStr for PatternSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut discount = 1.0;
        let mut max_gap = Some(0);
        let mut patterns = Vec::new();
        for (n, raw) in s.lines().enumerate() {
            let line = n + 1;
            let text = raw.trim();
            if text.is_empty() {
                continue;
            }
            if let Some((key, value)) = text.split_once('=') {
                match key.trim() {
                    "discount" => {
                        discount = value
                            .trim()
                            .parse()
                            .map_err(|_| parse_err(line, format!("bad discount `{}`", value.trim())))?
                    }
                    "max_gap" => {
                        max_gap = match value.trim() {
                            "inf" => None,
                            v => Some(v.parse().map_err(|_| parse_err(line, format!("bad max_gap `{v}`")))?),
                        }
                    }
                    k => return Err(parse_err(line, format!("unknown header `{k}`"))),
                }
                continue;
            }
            patterns.push(text.split_whitespace().map(str::to_string).collect());
        }
        PatternSet::new(patterns, discount, max_gap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(s: &str) -> Vec<String> {
        s.chars().map(|c| c.to_string()).collect()
    }

    /// Exhaustive scan over all index subsets.
    fn brute(y: &[String], p: &[String], cap: Option<usize>, gamma: f64) -> f64 {
        let n = p.len();
        let mut total = 0.0;
        let m = y.len();
        if n > m {
            return 0.0;
        }
        let mut idx: Vec<usize> = (0..n).collect();
        loop {
            if idx.iter().zip(p).all(|(&i, s)| &y[i] == s) {
                let gap = idx[n - 1] - idx[0] + 1 - n;
                if cap.is_none_or(|c| gap <= c) {
                    total += gamma.powi(gap as i32);
                }
            }
            let mut k = n;
            loop {
                if k == 0 {
                    return total;
                }
                k -= 1;
                if idx[k] < m - n + k {
                    idx[k] += 1;
                    for j in k + 1..n {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    #[test]
    fn discounted_count_of_aab() {
        let ps = PatternSet::new(vec![seq("aab")], 0.5, None).unwrap();
        assert_eq!(ps.theta(&seq("babbaabaa")).0, vec![1.25]);
    }

    #[test]
    fn empty_target_counts_nothing() {
        let ps = PatternSet::new(vec![seq("ab"), seq("a")], 0.5, None).unwrap();
        assert_eq!(ps.theta::<String>(&[]).0, vec![0.0, 0.0]);
    }

    #[test]
    fn ab_in_aabb() {
        let ps = PatternSet::new(vec![seq("ab")], 0.5, None).unwrap();
        let y = seq("aabb");
        // spans: (1,2) gap 0, (1,3) gap 1, (0,2) gap 1, (0,3) gap 2
        let expected = 1.0 + 0.5 + 0.5 + 0.25;
        assert_eq!(ps.theta(&y).0, vec![expected]);
        assert_eq!(brute(&y, &seq("ab"), None, 0.5), expected);
    }

    #[test]
    fn zero_discount_is_contiguous_counting() {
        let gappy = PatternSet::new(vec![seq("ab"), seq("aab")], 0.0, None).unwrap();
        let plain = PatternSet::contiguous(vec![seq("ab"), seq("aab")]).unwrap();
        let y = seq("aababbab");
        assert_eq!(gappy.theta(&y), plain.theta(&y));
    }

    #[test]
    fn matches_brute_force_on_many_strings() {
        let pats = [seq("a"), seq("ab"), seq("aba"), seq("bb"), seq("abca")];
        let ys = ["", "a", "abcabca", "aabbaabb", "cbacbacba", "abababab"];
        for gamma in [0.0, 0.3, 1.0] {
            for cap in [Some(0), Some(1), Some(3), None] {
                let ps = PatternSet::new(pats.to_vec(), gamma, cap).unwrap();
                for y in ys {
                    let y = seq(y);
                    let got = ps.theta(&y);
                    for (i, p) in pats.iter().enumerate() {
                        let want = brute(&y, p, cap, gamma);
                        assert!((got.0[i] - want).abs() < 1e-12, "{p:?} in {y:?}: {} vs {want}", got.0[i]);
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_sets() {
        assert!(PatternSet::contiguous(vec![]).is_err());
        assert!(PatternSet::contiguous(vec![seq("ab"), seq("ab")]).is_err());
        assert!(PatternSet::new(vec![seq("ab")], 1.5, None).is_err());
    }

    #[test]
    fn file_round_trip() {
        let ps = PatternSet::new(vec![seq("ab"), vec!["He".into(), "would".into()]], 0.25, None).unwrap();
        let back: PatternSet = ps.to_string().parse().unwrap();
        assert_eq!(back, ps);
        let plain: PatternSet = "a b\nb a\n".parse().unwrap();
        assert_eq!(plain.max_gap(), Some(0));
        assert!("discount=0.5\n".parse::<PatternSet>().is_err());
        assert!(matches!("max_gap=x\na\n".parse::<PatternSet>(), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn all_ngrams_enumerates_products() {
        let ps = PatternSet::all_ngrams(&["a", "b", "c"], 2).unwrap();
        assert_eq!(ps.len(), 9);
        assert_eq!(ps.index_of(&["c", "a"]), Some(6));
    }
}
