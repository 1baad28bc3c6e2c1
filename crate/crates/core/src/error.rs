use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    Param(String),
    #[error("pool size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("retry budget exhausted after {attempts} attempts ({discards} discarded at the node cap)")]
    RetryBudget { attempts: u64, discards: u64 },
    #[error("random walk exceeded {0} steps")]
    StepCap(u64),
    #[error("tree overflowed its node cap of {0}")]
    Overflow(usize),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed pool file: {0}")]
    PoolFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 1.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(Error::Param(format!("alpha must lie in (1, 2], got {alpha}")))
    }
}
