use spinchain::chain::ChainError;
use spinchain::disorder::DisorderError;
use spinchain::dual::DualError;
use spinchain::pendulum::PendulumError;
use spinchain::propagator::PropagatorError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("override `{key}`: {reason}")]
    BadOverride { key: String, reason: String },
    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },
    #[error("{0}")]
    Invalid(String),
    #[error("replayed artifact differs: {0}")]
    ReplayMismatch(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Disorder(#[from] DisorderError),
    #[error(transparent)]
    Propagator(#[from] PropagatorError),
    #[error(transparent)]
    Dual(#[from] DualError),
    #[error(transparent)]
    Pendulum(#[from] PendulumError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// Stable machine-readable label, printed by the CLI on failure.
    pub fn class(&self) -> &'static str {
        match self {
            HarnessError::UnknownPreset(_) => "unknown_preset",
            HarnessError::BadOverride { .. } => "bad_override",
            HarnessError::Config { .. } => "bad_config",
            HarnessError::Invalid(_)
            | HarnessError::Chain(_)
            | HarnessError::Disorder(_)
            | HarnessError::Pendulum(_)
            | HarnessError::Dual(DualError::NotNormalized(_) | DualError::LengthMismatch { .. }) => {
                "invalid_parameter"
            }
            HarnessError::Propagator(PropagatorError::NumericalHealth { .. })
            | HarnessError::Dual(DualError::Propagator(PropagatorError::NumericalHealth { .. })) => "numerical_health",
            HarnessError::Propagator(_) | HarnessError::Dual(_) => "invalid_parameter",
            HarnessError::ReplayMismatch(_) => "replay_mismatch",
            HarnessError::Io(_) => "io",
            HarnessError::Csv(_) | HarnessError::Json(_) => "format",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class() {
            "unknown_preset" => 3,
            "bad_override" | "bad_config" => 4,
            "invalid_parameter" => 5,
            "numerical_health" => 6,
            "replay_mismatch" => 7,
            _ => 8,
        }
    }
}
