use super::experiment::RegretTrace;
use crate::learners::{Algorithm, InstanceSizes};

/// Regret guarantee of `algorithm` after `t` rounds for an instance of the
/// given sizes (all measured on the context automaton):
///
/// * cdch: `sqrt(2 t B^2 K^2 ln(KM)) + B K ln(KM)`
/// * cdsb: `2 B sqrt(t K) (sqrt(4 K |C| ln N) + sqrt(M ln(M / delta)))`
/// * cdcb: `2 B sqrt((2K / (M lambda_min) + 1) t M ln N)`
/// * exp3-ag: `U sqrt(2 t N ln N)`
///
/// Missing sizes give NaN.
pub fn regret_bound(algorithm: Algorithm, sizes: &InstanceSizes, t: usize, delta: f64) -> f64 {
    let t = t as f64;
    let k = sizes.longest_path.map_or(f64::NAN, |k| k as f64);
    let m = sizes.transitions.map_or(f64::NAN, |m| m as f64);
    let n = sizes.paths.unwrap_or(f64::NAN);
    let b = sizes.gain_cap.unwrap_or(f64::NAN);
    match algorithm {
        Algorithm::Cdch => {
            let log = (k * m).ln();
            (2.0 * t * b * b * k * k * log).sqrt() + b * k * log
        }
        Algorithm::Cdsb => {
            let c = sizes.covering_paths.map_or(f64::NAN, |c| c as f64);
            2.0 * b * (t * k).sqrt() * ((4.0 * k * c * n.ln()).sqrt() + (m * (m / delta).ln()).sqrt())
        }
        Algorithm::Cdcb => {
            let lambda = sizes.lambda_min.unwrap_or(f64::NAN);
            2.0 * b * ((2.0 * k / (m * lambda) + 1.0) * t * m * n.ln()).sqrt()
        }
        Algorithm::Exp3Ag => {
            let u = sizes.path_gain_cap.unwrap_or(f64::NAN);
            u * (2.0 * t * n * n.ln()).sqrt()
        }
    }
}

/// Summary of a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub rounds: usize,
    pub learner_realized: f64,
    pub learner_expected: f64,
    /// Cumulative gain of the best fixed expert path.
    pub comparator: f64,
    /// Comparator minus the learner's expected cumulative gain.
    pub expected_regret: f64,
    /// Comparator minus the learner's realized cumulative gain.
    pub realized_regret: f64,
    /// Regret under the loss `-log(gain)`, `None` when some realized gain is
    /// zero and the quantity is unbounded.
    pub log_regret: Option<f64>,
    /// Smallest realized gain.
    pub alpha: f64,
    pub bound: f64,
}

impl Metrics {
    /// Whether `log_regret <= realized_regret / alpha` holds as computed.
    pub fn log_regret_within(&self) -> Option<bool> {
        let rl = self.log_regret?;
        (self.alpha > 0.0).then(|| rl <= self.realized_regret / self.alpha)
    }
}

pub fn compute_metrics(trace: &RegretTrace) -> Metrics {
    let rounds = trace.rows.len();
    let realized: Vec<f64> = trace.rows.iter().map(|r| r.realized).collect();
    let learner_realized: f64 = realized.iter().sum();
    let learner_expected: f64 = trace.rows.iter().map(|r| r.expected).sum();
    let comparator: f64 = trace.best_round_gains.iter().sum();
    let alpha = realized.iter().copied().fold(f64::INFINITY, f64::min);
    let log_regret = if realized.iter().any(|&g| g <= 0.0) {
        None
    } else {
        Some(
            realized
                .iter()
                .zip(&trace.best_round_gains)
                .map(|(&g, &best)| best.ln() - g.ln())
                .sum(),
        )
    };
    Metrics {
        rounds,
        learner_realized,
        learner_expected,
        comparator,
        expected_regret: comparator - learner_expected,
        realized_regret: comparator - learner_realized,
        log_regret,
        alpha: if rounds == 0 { 0.0 } else { alpha },
        bound: trace.rows.last().map_or(0.0, |r| r.bound),
    }
}
