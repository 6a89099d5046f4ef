//! Compactness and nuclearity of embeddings between Morrey-type smoothness
//! spaces, with numerical certification on finite dyadic blocks.

pub mod classifier;
pub mod dyadic;
pub mod grammar;
pub mod morrey_seq;
pub mod nuclear_engine;
pub mod params;
pub mod region;
pub mod verify;

/// Numerical tolerances shared by the certification routines.
pub mod tolerance {
    /// Relative slack for comparing a certified bound with a formula.
    pub const CERTIFY: f64 = 1e-9;
    /// Relative gap under which a lower and upper bound count as equal.
    pub const COINCIDE: f64 = 1e-12;
    /// Entrywise bound on a nuclear reconstruction residual.
    pub const RESIDUAL: f64 = 1e-10;
}

pub use classifier::{classify, classify_any, Tri, Verdict};
pub use grammar::{parse_any, parse_space, print_space, AnySpec, ParseError};
pub use params::{ExtScalar, Family, ParamError, Rational, Scale, SeqSpec, SpaceSpec};
