use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid net: {0}")]
    InvalidNet(String),
    #[error("unknown place `{0}`")]
    UnknownPlace(String),
    #[error("unknown transition `{0}`")]
    UnknownTransition(String),
    #[error("unknown role `{0}`")]
    UnknownRole(String),
    #[error("step {step} is not enabled at marking {marking}")]
    StepNotEnabled { step: String, marking: String },
    #[error("firing {step} at {marking} puts a second token on place `{place}`")]
    SafetyViolation {
        step: String,
        marking: String,
        place: String,
    },
    #[error("net is not extended free choice: pre-sets of `{0}` and `{1}` intersect but differ")]
    NotFreeChoice(String, String),
    #[error("state space exceeds the bound of {0} states")]
    StateSpaceExceeded(usize),
    #[error("not an elementary workflow net: {0}")]
    NotAWorkflowNet(String),
    #[error("initial marking {0} is final; the restart game would be empty")]
    InitialIsFinal(String),
    #[error("marking {0} is not a state of the game")]
    UnknownState(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error("malformed history: {0}")]
    MalformedHistory(String),
    #[error("strategy of player `{0}` is not stationary; only the simulator evaluates it")]
    NonStationaryStrategy(String),
    #[error("player `{0}` does not observe the full signal vector; use the heuristic deviation estimator")]
    UnsupportedDevice(String),
    #[error("average-reward policy iteration did not converge: {0}")]
    SolverNonconvergence(String),
    #[error("hypotheses of the soundness characterization violated: {}", .0.join("; "))]
    HypothesisViolated(Vec<String>),
    #[error("parse error at line {line}: {message}")]
    ParseError { line: u32, message: String },
    #[error("unsupported feature: {0}")]
    UnsupportedFeature(String),
    #[error("schema error: {0}")]
    SchemaError(String),
}
