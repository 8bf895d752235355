use thiserror::Error;

use crate::padic::Prime;

/// Errors raised by the engine. All are input-validation failures; the
/// algebra itself is total on its documented domain.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("{value} is not in the shift set I_{p}")]
    InvalidShift { p: u64, value: String },
    #[error("wavelet index k={k} out of range 1..{p}")]
    InvalidWaveletIndex { p: u64, k: u64 },
    #[error("prime mismatch: {0} vs {1}")]
    PrimeMismatch(u64, u64),
    #[error("matrix U is not unitary (deviation {0:e})")]
    NotUnitary(f64),
    #[error("phase parameter is not unimodular (|z| = {0})")]
    NotUnimodular(f64),
    #[error("parameter shape mismatch: {0}")]
    Shape(String),
    #[error("vanishing denominator in Haar coefficient formula")]
    DivisionGuard,
    #[error("factor stored at p={0} beyond the finiteness parameter is not Omega")]
    FactorBeyondFiniteness(u64),
    #[error("real factor present on one side only")]
    RealPlaceMismatch,
    #[error("function is not Lizorkin at place {place}: {detail}")]
    NotLizorkin { place: String, detail: String },
    #[error("symbol undefined on ball B_{gamma}({center}) at p={p}")]
    SymbolDomain { p: u64, center: String, gamma: i64 },
    #[error("index violates the eigenfunction hypothesis: {0}")]
    HypothesisViolated(String),
    #[error("invalid index: {0}")]
    InvalidIndex(String),
    #[error("invalid pattern: {0}")]
    InvalidPattern(String),
}

impl Error {
    pub(crate) fn not_lizorkin_at(p: Prime, detail: impl Into<String>) -> Self {
        Error::NotLizorkin {
            place: p.get().to_string(),
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
