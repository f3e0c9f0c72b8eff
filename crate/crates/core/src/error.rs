use thiserror::Error;

/// Errors raised by the solvers and the problem description layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("argument outside the domain of definition: {0}")]
    Domain(String),

    #[error("singular evaluation: {0}")]
    SingularEvaluation(String),

    #[error("derivative order {0} is not supported (maximum is 12)")]
    UnsupportedOrder(usize),

    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    #[error("quadrature did not reach the requested accuracy (achieved estimate {estimate:e}, error {error:e})")]
    Accuracy { estimate: f64, error: f64 },

    #[error("matrix is not positive definite: {0}")]
    IndefiniteMatrix(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("reference pairing {reference:e} is inconsistent with the discrete pairing (error squared {value:e})")]
    ReferenceInconsistency { value: f64, reference: f64 },

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
