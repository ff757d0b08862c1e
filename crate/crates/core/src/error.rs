use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mode grid must contain at least one mode")]
    EmptyGrid,
    #[error("momenta must be strictly increasing (violated at index {0})")]
    UnorderedMomenta(usize),
    #[error("momentum at index {0} is not finite")]
    NonFiniteMomentum(usize),
    #[error("max occupation must be positive")]
    ZeroTruncation,
    #[error("fermionic modes require max occupation 1, got {0}")]
    FermionTruncation(u8),
    #[error("mode {mode} out of range for a grid of {count} modes")]
    ModeOutOfRange { mode: usize, count: usize },
    #[error("occupation {occupation} exceeds truncation {max}")]
    OccupationOutOfRange { occupation: u8, max: u8 },
    #[error("operation requires {expected} statistics")]
    WrongStatistics { expected: &'static str },
    #[error("dispersion parameters must be positive and finite")]
    InvalidDispersion,

    #[error("amplitude vector has length {got}, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("amplitude vector has zero norm")]
    ZeroVector,
    #[error("register size mismatch: {0} vs {1} qubits")]
    SizeMismatch(usize, usize),
    #[error("qubit {qubit} out of range for a {count}-qubit register")]
    QubitOutOfRange { qubit: usize, count: usize },
    #[error("target qubits must be distinct")]
    DuplicateTargets,
    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),
    #[error("matrix dimension {got} does not match {expected} for the given targets")]
    MatrixDimension { got: usize, expected: usize },
    #[error("basis is not orthonormal (deviation {0:e})")]
    NotOrthonormal(f64),
    #[error("outcome has zero probability and cannot be projected onto")]
    ImpossibleOutcome,
    #[error("register needs at least {needed} qubits, has {count}")]
    TooFewQubits { needed: usize, count: usize },
    #[error("no Pauli-group element corrects the {0} branch")]
    NoCorrection(String),

    #[error("wave grid needs at least 16 points, got {0}")]
    TooFewPoints(usize),
    #[error("invalid spatial domain [{0}, {1}]")]
    InvalidDomain(f64, f64),
    #[error("mass must be positive and finite")]
    InvalidMass,
    #[error("potential has {got} values for a grid of {expected} points")]
    PotentialLength { got: usize, expected: usize },
    #[error("potential value at index {0} is not finite")]
    NonFinitePotential(usize),
    #[error("time step must be finite and nonzero, got {0}")]
    UnstableTimeStep(f64),
    #[error("non-finite amplitude after step {step} at grid index {index}")]
    NonFiniteAmplitude { step: usize, index: usize },
    #[error("zone partition is misaligned with the grid: {0}")]
    MisalignedPartition(String),
    #[error("wave function has vanishing weight; cannot sample a detection")]
    VanishingWeight,
    #[error("degenerate slit geometry: {0}")]
    DegenerateGeometry(String),
    #[error("{0} must be at least 1")]
    ZeroCount(&'static str),
}
