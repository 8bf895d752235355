//! Exact harmonic analysis on p-adic fields and the adele ring.

pub mod adelic;
pub mod error;
pub mod lizorkin;
pub mod local;
pub mod operators;
pub mod padic;
pub mod real;
pub mod sum;
pub mod wavelet;

pub use adelic::{
    adelic_character, adelic_inner, AdelePoint, AdelicDilation, AdelicFunction, AdelicIndex,
    AdelicShift, FactorKind, MraIndex, MraMember, Place, RealIndex,
};
pub use error::{Error, Result};
pub use lizorkin::{certify, decompose, lizorkin_check, Decomposition, LizorkinReport};
pub use local::{
    gram_deviation, gram_matrix, identity_deviation, CharBallTerm, LocalFunction, DEFAULT_TOL,
};
pub use operators::{
    apply_symbol, apply_symbol_sum, eigen_check, fractional_apply, verify_eigenrelation,
    EigenCheck, PlaceSymbol, Symbol, TablePiece,
};
pub use padic::{chi, Ball, BallRelation, PAdicScalar, Prime, ShiftIndex, UnitPhase, Valuation};
pub use real::{DyadicPiece, DyadicStepFunction};
pub use sum::AdelicSum;
pub use wavelet::LocalIndex;
