use serde::{Deserialize, Serialize};

use super::ensemble::EnsembleSpec;
use crate::error::{Error, Result};
use crate::learners::{Algorithm, PartialConfig, Regime};

/// Learner part of a run file. Parameters left out are derived from the
/// instance sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSection {
    pub algorithm: Algorithm,
    /// Defaults to the algorithm's own regime.
    pub regime: Option<Regime>,
    pub learning_rate: Option<f64>,
    pub mixing_rate: Option<f64>,
    pub exploration_bonus: Option<f64>,
    pub gain_cap: Option<f64>,
    pub path_gain_cap: Option<f64>,
    pub confidence: Option<f64>,
}

impl LearnerSection {
    pub fn overrides(&self) -> PartialConfig {
        PartialConfig {
            learning_rate: self.learning_rate,
            mixing_rate: self.mixing_rate,
            exploration_bonus: self.exploration_bonus,
            gain_cap: self.gain_cap,
            path_gain_cap: self.path_gain_cap,
            confidence: self.confidence,
        }
    }

    pub fn regime(&self) -> Regime {
        self.regime.unwrap_or_else(|| self.algorithm.regime())
    }
}

/// A whole run file:
///
/// ```toml
/// [ensemble]
/// experts = 2
/// substructures = 6
/// order = 2
/// alphabet = ["a", "b"]
/// adversary = "iid"
/// horizon = 1000
/// seed = 7
///
/// [learner]
/// algorithm = "cdch"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub ensemble: EnsembleSpec,
    pub learner: LearnerSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.ensemble.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configs serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[ensemble]
experts = 2
substructures = 4
order = 2
alphabet = ["a", "b"]
horizon = 1

[learner]
algorithm = "exp3-ag"
"#;

    #[test]
    fn parses_minimal_file() {
        let c = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.learner.algorithm, Algorithm::Exp3Ag);
        assert_eq!(c.learner.regime(), Regime::Bandit);
        assert_eq!(c.ensemble.seed, 0);
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = MINIMAL.replace("horizon = 1", "horizon = 1\ncolour = 3");
        let e = RunConfig::from_toml(&text).unwrap_err();
        assert!(e.to_string().contains("colour"), "{e}");
        let text = MINIMAL.replace("algorithm = \"exp3-ag\"", "algorithm = \"exp3-ag\"\nspeed = 1");
        assert!(RunConfig::from_toml(&text).is_err());
        let text = MINIMAL.replace("\"exp3-ag\"", "\"hedge\"");
        assert!(RunConfig::from_toml(&text).is_err());
    }
}
