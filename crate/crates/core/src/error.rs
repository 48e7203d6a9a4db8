use thiserror::Error;

/// Failures raised by the physical model, the security model and the optimizer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}` = {value}: must satisfy {constraint}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("domain error: {0}")]
    Domain(String),

    /// No event is ever accepted, so the error rate is undefined.
    #[error("no accepted events (p_exp = 0)")]
    NoSignal,

    #[error("invalid sweep grid: {0}")]
    InvalidGrid(String),

    #[error("invalid device: {0}")]
    InvalidDevice(String),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

pub(crate) fn ensure(
    ok: bool,
    name: &'static str,
    value: f64,
    constraint: &'static str,
) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            name,
            value,
            constraint,
        })
    }
}
