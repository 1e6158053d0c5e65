use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid gate: {0}")]
    InvalidGate(String),
    #[error("qubit {qubit} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("register size mismatch: {left} vs {right}")]
    RegisterMismatch { left: usize, right: usize },
    #[error("unsupported register size {n} (supported: {min}..={max})")]
    RegisterSize { n: usize, min: usize, max: usize },
    #[error("invalid chain configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid protocol parameters: {0}")]
    InvalidParams(String),
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),
    #[error("hold of duration {hold} is shorter than the Trotter step {dt}")]
    SubStepHold { hold: f64, dt: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
