//! Ensemble experiments: instance generation, adversaries, the
//! predict/reveal/update loop under each feedback regime, exact comparators,
//! regret metrics and bound values.

mod adversary;
mod config;
mod ensemble;
mod experiment;
mod metrics;
mod nonadditive;
mod output;

pub use adversary::{Adversary, AdversaryModel, RoundData, FAVORED_PROB, TARGET_NOISE};
pub use config::{LearnerSection, RunConfig};
pub use ensemble::{build_ensemble_automaton, expert_name, EnsembleSpec, Instance, MAX_ENUMERATED_PATHS};
pub use experiment::{
    best_fixed_path, reveal, run_default, run_experiment, run_learner, sweep, RegretTrace, Revealed, TraceRow,
    TrialRecord,
};
pub use metrics::{compute_metrics, regret_bound, Metrics};
pub use nonadditive::{translation_instance, verify_non_additivity, AdditivityInstance, AdditivityReport, FEASIBILITY_TOL};
pub use output::{meta_text, regret_svg, trace_csv, write_run, TRACE_HEADER};
