//! From an expert automaton and a pattern set to the context automaton on
//! which count-based gains are additive.
//!
//! Each expert transition sequence that could produce a pattern occurrence
//! is rewritten to a [`ContextSymbol`] naming the transitions involved.
//! The rewrite is compiled into a transducer, composed with the expert
//! automaton, and projected on its output side. A transition labeled with
//! a symbol gains the target's count of the pattern its outputs spell.

mod builder;
mod gains;
mod patterns;
mod rules;
mod symbol;

pub use builder::{ContextAutomaton, EdgeLabel, PAD_TOKEN};
pub use gains::{assign_edge_gains, edge_gain, path_gain_oracle};
pub use patterns::{theta_counts, GainVector, PatternSet};
pub use rules::{build_rule_transducer, generate_rules, Rule, RuleSet};
pub use symbol::ContextSymbol;
