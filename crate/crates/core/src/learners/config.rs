use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What the learner sees after each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Every expert output and the target.
    Full,
    /// Outputs along the played path, hence the gains of its transitions.
    Semi,
    /// The scalar gain of the played path.
    Bandit,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Full => "full",
            Regime::Semi => "semi",
            Regime::Bandit => "bandit",
        })
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Regime::Full),
            "semi" => Ok(Regime::Semi),
            "bandit" => Ok(Regime::Bandit),
            _ => Err(Error::Config(format!("unknown regime `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    /// Component hedge over the unit-flow polytope of the context automaton.
    #[serde(rename = "cdch")]
    Cdch,
    /// Edge-level importance weighting with covering-path exploration.
    #[serde(rename = "cdsb")]
    Cdsb,
    /// Linear bandit surrogate through the co-occurrence pseudo-inverse.
    #[serde(rename = "cdcb")]
    Cdcb,
    /// Path-level exponential weights kept as a weighted automaton.
    #[serde(rename = "exp3-ag")]
    Exp3Ag,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Cdch, Algorithm::Cdsb, Algorithm::Cdcb, Algorithm::Exp3Ag];

    pub fn regime(self) -> Regime {
        match self {
            Algorithm::Cdch => Regime::Full,
            Algorithm::Cdsb => Regime::Semi,
            Algorithm::Cdcb | Algorithm::Exp3Ag => Regime::Bandit,
        }
    }

    pub fn check_regime(self, regime: Regime) -> Result<()> {
        if self.regime() == regime {
            Ok(())
        } else {
            Err(Error::RegimeMismatch {
                algorithm: self.to_string(),
                regime: regime.to_string(),
            })
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Cdch => "cdch",
            Algorithm::Cdsb => "cdsb",
            Algorithm::Cdcb => "cdcb",
            Algorithm::Exp3Ag => "exp3-ag",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.to_string() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}`")))
    }
}

/// Fully resolved learner parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub algorithm: Algorithm,
    pub learning_rate: f64,
    /// Probability of drawing from the exploration distribution.
    pub mixing_rate: f64,
    pub exploration_bonus: f64,
    /// Upper bound on any single transition gain of the context automaton.
    pub gain_cap: f64,
    /// Upper bound on any path gain.
    pub path_gain_cap: f64,
    pub horizon: usize,
    pub seed: u64,
    /// Failure probability used for the semi-bandit tuning and bound.
    pub confidence: f64,
}

/// User-supplied overrides; anything left out is derived.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub learning_rate: Option<f64>,
    pub mixing_rate: Option<f64>,
    pub exploration_bonus: Option<f64>,
    pub gain_cap: Option<f64>,
    pub path_gain_cap: Option<f64>,
    pub confidence: Option<f64>,
}

/// Sizes the default tunings depend on. `longest_path`, `transitions` and
/// `paths` refer to the machine the algorithm runs on.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InstanceSizes {
    pub horizon: Option<usize>,
    pub longest_path: Option<usize>,
    pub transitions: Option<usize>,
    pub paths: Option<f64>,
    pub covering_paths: Option<usize>,
    pub lambda_min: Option<f64>,
    pub gain_cap: Option<f64>,
    pub path_gain_cap: Option<f64>,
}

fn need<T: Copy>(v: Option<T>, name: &'static str) -> Result<T> {
    v.ok_or(Error::MissingSize(name))
}

pub const DEFAULT_CONFIDENCE: f64 = 0.1;

/// Fills every parameter not given in `partial`.
///
/// * cdch: `eta = sqrt(2 ln(KM) / T) / (B K)`.
/// * cdsb: with gains scaled to `[0, 1]`, `eta' = sqrt(ln N / (4 T K^2 |C|))`,
///   `beta' = sqrt(K ln(M / delta) / (T M))` and `gamma = min(1/2, 2 eta' K |C|)`;
///   then `eta = eta' / B` and `beta = B beta'` on the raw scale.
/// * cdcb: with `X = 2K / (M lambda_min) + 1`, `eta = sqrt(ln N / (T M X)) / B`
///   and `gamma = min(1, eta B K / lambda_min)`.
/// * exp3-ag: `eta = sqrt(2 ln N / (T N)) / U`, no mixing.
pub fn default_tuning(
    algorithm: Algorithm,
    partial: &PartialConfig,
    sizes: &InstanceSizes,
    seed: u64,
) -> Result<LearnerConfig> {
    let t = need(sizes.horizon, "horizon")?.max(1) as f64;
    let b = match partial.gain_cap.or(sizes.gain_cap) {
        Some(b) => b,
        None if algorithm == Algorithm::Exp3Ag => f64::NAN,
        None => return Err(Error::MissingSize("gain_cap")),
    };
    let u = partial
        .path_gain_cap
        .or(sizes.path_gain_cap)
        .or_else(|| sizes.longest_path.map(|k| k as f64 * b))
        .filter(|u| !u.is_nan());
    let u = match u {
        Some(u) => u,
        None if algorithm == Algorithm::Exp3Ag => return Err(Error::MissingSize("path_gain_cap")),
        None => f64::NAN,
    };
    let delta = partial.confidence.unwrap_or(DEFAULT_CONFIDENCE);
    let (mut eta, mut gamma, mut beta) = (0.0, 0.0, 0.0);
    match algorithm {
        Algorithm::Cdch => {
            if partial.learning_rate.is_none() {
                let k = need(sizes.longest_path, "longest_path")?.max(1) as f64;
                let m = need(sizes.transitions, "transitions")?.max(1) as f64;
                eta = (2.0 * (k * m).ln().max(f64::MIN_POSITIVE) / t).sqrt() / (b * k);
            }
        }
        Algorithm::Cdsb => {
            let k = need(sizes.longest_path, "longest_path")?.max(1) as f64;
            let m = need(sizes.transitions, "transitions")?.max(1) as f64;
            let n = need(sizes.paths, "paths")?;
            let c = need(sizes.covering_paths, "covering_paths")?.max(1) as f64;
            let eta_unit = (n.ln().max(f64::MIN_POSITIVE) / (4.0 * t * k * k * c)).sqrt();
            eta = eta_unit / b;
            beta = b * (k * (m / delta).ln() / (t * m)).sqrt();
            gamma = (2.0 * eta_unit * k * c).min(0.5);
        }
        Algorithm::Cdcb => {
            let k = need(sizes.longest_path, "longest_path")?.max(1) as f64;
            let m = need(sizes.transitions, "transitions")?.max(1) as f64;
            let n = need(sizes.paths, "paths")?;
            let lambda = need(sizes.lambda_min, "lambda_min")?;
            let x = 2.0 * k / (m * lambda) + 1.0;
            eta = (n.ln().max(f64::MIN_POSITIVE) / (t * m * x)).sqrt() / b;
            gamma = (eta * b * k / lambda).min(1.0);
        }
        Algorithm::Exp3Ag => {
            if partial.learning_rate.is_none() {
                let n = need(sizes.paths, "paths")?;
                eta = (2.0 * n.ln().max(f64::MIN_POSITIVE) / (t * n)).sqrt() / u;
            }
        }
    }
    let cfg = LearnerConfig {
        algorithm,
        learning_rate: partial.learning_rate.unwrap_or(eta),
        mixing_rate: partial.mixing_rate.unwrap_or(gamma),
        exploration_bonus: partial.exploration_bonus.unwrap_or(beta),
        gain_cap: b,
        path_gain_cap: u,
        horizon: t as usize,
        seed,
        confidence: delta,
    };
    cfg.validate()?;
    Ok(cfg)
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return bad("learning_rate must be finite and non-negative");
        }
        if !(0.0..=1.0).contains(&self.mixing_rate) {
            return bad("mixing_rate must lie in [0, 1]");
        }
        if !(self.exploration_bonus >= 0.0) {
            return bad("exploration_bonus must be non-negative");
        }
        if self.algorithm != Algorithm::Exp3Ag && !(self.gain_cap > 0.0) {
            return bad("gain_cap must be positive");
        }
        if self.algorithm == Algorithm::Exp3Ag && !(self.path_gain_cap > 0.0) {
            return bad("path_gain_cap must be positive");
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return bad("confidence must lie in (0, 1)");
        }
        Ok(())
    }

    /// `key = value` lines for run metadata.
    pub fn describe(&self) -> Vec<String> {
        vec![
            format!("algorithm = {}", self.algorithm),
            format!("learning_rate = {}", self.learning_rate),
            format!("mixing_rate = {}", self.mixing_rate),
            format!("exploration_bonus = {}", self.exploration_bonus),
            format!("gain_cap = {}", self.gain_cap),
            format!("path_gain_cap = {}", self.path_gain_cap),
            format!("horizon = {}", self.horizon),
            format!("seed = {}", self.seed),
            format!("confidence = {}", self.confidence),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sizes(t: usize) -> InstanceSizes {
        InstanceSizes {
            horizon: Some(t),
            longest_path: Some(5),
            transitions: Some(20),
            paths: Some(64.0),
            covering_paths: Some(4),
            lambda_min: Some(0.05),
            gain_cap: Some(5.0),
            path_gain_cap: None,
        }
    }

    #[test]
    fn rates_shrink_with_horizon() {
        for alg in Algorithm::ALL {
            let mut last = f64::INFINITY;
            for t in [10, 100, 1000, 10_000, 100_000] {
                let eta = default_tuning(alg, &PartialConfig::default(), &sizes(t), 0).unwrap().learning_rate;
                assert!(eta < last, "{alg}");
                last = eta;
            }
        }
    }

    #[test]
    fn doubling_gain_cap_halves_cdch_rate() {
        let p = PartialConfig::default();
        let mut s = sizes(1000);
        let a = default_tuning(Algorithm::Cdch, &p, &s, 0).unwrap().learning_rate;
        s.gain_cap = Some(10.0);
        let b = default_tuning(Algorithm::Cdch, &p, &s, 0).unwrap().learning_rate;
        assert!((a / b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn overrides_pass_through() {
        let p = PartialConfig {
            learning_rate: Some(0.3),
            mixing_rate: Some(0.2),
            exploration_bonus: Some(0.1),
            gain_cap: Some(7.0),
            path_gain_cap: Some(9.0),
            confidence: Some(0.01),
        };
        let c = default_tuning(Algorithm::Cdsb, &p, &sizes(50), 3).unwrap();
        assert_eq!(
            (c.learning_rate, c.mixing_rate, c.exploration_bonus, c.gain_cap, c.path_gain_cap, c.confidence),
            (0.3, 0.2, 0.1, 7.0, 9.0, 0.01)
        );
        assert_eq!(c.seed, 3);
    }

    #[test]
    fn missing_sizes_reported() {
        let mut s = sizes(10);
        s.lambda_min = None;
        let err = default_tuning(Algorithm::Cdcb, &PartialConfig::default(), &s, 0).unwrap_err();
        assert!(matches!(err, Error::MissingSize("lambda_min")));
        assert!(matches!(
            default_tuning(Algorithm::Cdch, &PartialConfig::default(), &InstanceSizes::default(), 0),
            Err(Error::MissingSize("horizon"))
        ));
    }

    #[test]
    fn regimes_and_names() {
        assert!(Algorithm::Cdch.check_regime(Regime::Full).is_ok());
        assert!(matches!(Algorithm::Cdch.check_regime(Regime::Bandit), Err(Error::RegimeMismatch { .. })));
        for a in Algorithm::ALL {
            assert_eq!(a.to_string().parse::<Algorithm>().unwrap(), a);
        }
        assert_eq!("semi".parse::<Regime>().unwrap(), Regime::Semi);
    }
}
