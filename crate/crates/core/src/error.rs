use core::fmt;

/// Errors surfaced by the library's fallible operations.
///
/// Structural misuse that cannot occur for well-formed inputs (e.g. mixing
/// dimensions inside a single computation) panics instead; everything that
/// depends on runtime data is reported here.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand dimensions are incompatible with the requested operation.
    DimensionMismatch { expected: usize, got: usize },
    /// A Hermitian matrix was required but `||A - A^dag||_max` exceeds `tol`.
    NotHermitian { defect: f64 },
    /// A unitary matrix was required but `||U^dag U - I||_max` exceeds `tol`.
    NotUnitary { defect: f64 },
    /// A projector was required but idempotence/Hermiticity fails.
    NotProjector { defect: f64 },
    /// A density matrix was required (positive, unit trace) but validation failed.
    NotDensity { detail: &'static str, defect: f64 },
    /// A normalized vector was required.
    NotNormalized { norm: f64 },
    /// Interval ordering `a <= b <= c` violated in a relative negation.
    IntervalViolation,
    /// Projector ordering `P_a <= P_b <= P_c` violated.
    OrderingViolation { min_eigenvalue: f64 },
    /// Inputs were required to commute but do not.
    NonCommuting { defect: f64 },
    /// Two Boolean elements live over different universes.
    UniverseMismatch,
    /// Every conditioning outcome has zero probability in the given state.
    ZeroProbability,
    /// The state is not invariant under the pinching by the given resolution.
    PinchingViolated { defect: f64 },
    /// The supplied instrument basis is not orthonormal and complete.
    IncompleteBasis { defect: f64 },
    /// An observation with zero amplitude was requested (impossible branch).
    ImpossibleObservation,
    /// A model parameter is outside its admissible range.
    ParamOutOfRange { name: &'static str, value: f64 },
    /// The truncation order cannot certify the requested accuracy.
    TruncationInsufficient { tail_bound: f64, requested: f64 },
    /// The integrator's trace drifted beyond its rejection threshold.
    TraceDrift { drift: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::NotHermitian { defect } => {
                write!(f, "matrix is not Hermitian (defect {defect:.3e})")
            }
            Error::NotUnitary { defect } => {
                write!(f, "matrix is not unitary (defect {defect:.3e})")
            }
            Error::NotProjector { defect } => {
                write!(f, "matrix is not a projector (defect {defect:.3e})")
            }
            Error::NotDensity { detail, defect } => {
                write!(f, "matrix is not a density: {detail} (defect {defect:.3e})")
            }
            Error::NotNormalized { norm } => {
                write!(f, "vector is not normalized (norm {norm:.12})")
            }
            Error::IntervalViolation => write!(f, "interval ordering a <= b <= c violated"),
            Error::OrderingViolation { min_eigenvalue } => {
                write!(f, "projector ordering violated (min eigenvalue {min_eigenvalue:.3e})")
            }
            Error::NonCommuting { defect } => {
                write!(f, "operands do not commute (defect {defect:.3e})")
            }
            Error::UniverseMismatch => write!(f, "Boolean elements over different universes"),
            Error::ZeroProbability => write!(f, "all conditioning outcomes have zero probability"),
            Error::PinchingViolated { defect } => {
                write!(f, "state is not pinching-invariant (defect {defect:.3e})")
            }
            Error::IncompleteBasis { defect } => {
                write!(f, "instrument basis is not orthonormal/complete (defect {defect:.3e})")
            }
            Error::ImpossibleObservation => write!(f, "observation has zero amplitude"),
            Error::ParamOutOfRange { name, value } => {
                write!(f, "parameter `{name}` out of range (value {value})")
            }
            Error::TruncationInsufficient { tail_bound, requested } => {
                write!(
                    f,
                    "truncation cannot certify accuracy: tail bound {tail_bound:.3e} > requested {requested:.3e}"
                )
            }
            Error::TraceDrift { drift } => {
                write!(f, "integrator trace drift {drift:.3e} beyond rejection threshold")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
