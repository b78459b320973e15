use alloc::string::String;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoreError {
    /// A constructor or operation received arguments violating its contract.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A model coefficient evaluated to NaN or infinity.
    #[error("model {what} returned a non-finite value at t = {t}")]
    NonFiniteOutput { what: &'static str, t: f64 },

    /// Euler instability: a particle state left the finite range.
    #[error("blow-up at step {step}: particle {particle} reached {value}")]
    BlowUp {
        step: usize,
        particle: usize,
        value: f64,
    },

    /// A transition row or weight vector drifted from total mass one by more
    /// than the renormalization threshold.
    #[error("probability mass drift {deviation:e} at step {step} exceeds tolerance")]
    MassDrift { step: usize, deviation: f64 },

    /// Adaptive quadrature did not reach its tolerance within the refinement budget.
    #[error("quadrature failed to converge at x = {x}")]
    QuadratureFailure { x: f64 },

    /// The exact transport oracle only accepts small instances.
    #[error("exact transport solver limited to {cap} atoms, got {atoms}")]
    InstanceTooLarge { atoms: usize, cap: usize },

    /// Planar geometry could not be built from the given atoms.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// The requested scheme is not available for this model.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = core::result::Result<T, CoreError>;

pub(crate) fn invalid(msg: impl Into<String>) -> CoreError {
    CoreError::InvalidInput(msg.into())
}
