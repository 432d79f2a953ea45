use thiserror::Error;

/// Everything that can go wrong inside the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("machine contains a cycle")]
    Cyclic,
    #[error("state {state} is out of range for a machine with {num_states} states")]
    StateOutOfRange { state: usize, num_states: usize },
    #[error("transition name `{0}` is used more than once")]
    DuplicateName(String),
    #[error("`{0}` is not a valid transition or symbol token")]
    InvalidToken(String),
    #[error("state {state} has more than one outgoing transition for input `{input}`")]
    NonDeterministic { state: usize, input: String },
    #[error("output label of a transducer transition cannot be <rho>")]
    RhoOutput,
    #[error("machine has no accepting path")]
    EmptyLanguage,
    #[error("weight {0} is negative or not finite")]
    InvalidWeight(f64),
    #[error("total path mass is zero")]
    ZeroTotalMass,
    #[error("weighted automaton is not marked stochastic")]
    NotStochastic,
    #[error("epsilon transitions are not supported by this operation")]
    EpsilonNotSupported,
    #[error("more than {cap} accepting paths")]
    TooManyPaths { cap: usize },
    #[error("path is not accepting")]
    NotAccepting,
    #[error("gain {gain} exceeds the configured cap {cap}")]
    GainExceedsCap { gain: f64, cap: f64 },
    #[error("projection did not converge after {sweeps} sweeps (violation {violation:e})")]
    NoConvergence { sweeps: usize, violation: f64 },
    #[error("weight vector is outside the unit-flow polytope (violation {0:e})")]
    NotInPolytope(f64),
    #[error("transition {0} has zero probability under the sampling mixture")]
    ZeroFlow(usize),
    #[error("instance size `{0}` is required to derive the default tuning")]
    MissingSize(&'static str),
    #[error("algorithm `{algorithm}` cannot run in the `{regime}` feedback regime")]
    RegimeMismatch { algorithm: String, regime: String },
    #[error("invalid pattern set: {0}")]
    InvalidPatterns(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}
