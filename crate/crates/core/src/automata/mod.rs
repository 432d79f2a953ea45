//! Acyclic automata, transducers and weighted automata over the reals.
//!
//! Every machine keeps its transitions in a vector and refers to them by
//! index; a [`Path`] is a sequence of such indices. Operations producing new
//! machines trim dead states and renumber the survivors in topological order,
//! so their output is a deterministic function of their input.

mod automaton;
mod epsilon;
mod equalize;
mod graph;
mod transducer;
mod weighted;

pub use automaton::{Automaton, Path, Sizes, StateId, Transition, DEFAULT_PATH_CAP, EPS_TOKEN, RHO_TOKEN};
pub use epsilon::{epsilon_remove, EpsArc, EpsAutomaton, LabeledAutomaton};
pub use equalize::{equalize_path_lengths, Equalized};
pub use transducer::{compose, project_output, Arc, Label, Transducer};
pub use weighted::{intersect, Direction, WeightedArc, WeightedAutomaton, STOCHASTIC_TOL};

pub(crate) use automaton::check_token;
pub(crate) use epsilon::finish_labeled;
