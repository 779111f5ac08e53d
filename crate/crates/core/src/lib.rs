//! Fourier-analytic tools for the coin problem on Boolean functions.
//!
//! Truth tables over `{-1, 1}^n`, fast Walsh-Hadamard spectra and level
//! profiles, biased-coin expectations, finite closed function classes,
//! checkers for the inequalities linking small-bias advantage to level-1
//! Fourier mass, and randomized-rounding experiments.
//!
//! Index convention: bit `i - 1` of a point index set means `x_i = -1`, so
//! index 0 is the all-`+1` input and `chi_S(m) = (-1)^popcount(S & m)`.
//!
//! Core types are generic over the scalar; the aliases below fix the common
//! choices.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod classes;
pub mod coin;
pub mod error;
pub mod export;
pub mod families;
pub mod funcspec;
pub mod io;
pub mod keyed;
pub mod robp;
pub mod rounding;
pub mod scalar;
pub mod spectrum;
pub mod table;

pub use bounds::BoundReport;
pub use classes::{ClassStats, ClosureFlags, FunctionClass};
pub use coin::{AdvantageReport, BiasPoint, Method};
pub use error::{Error, ParseError, Result};
pub use funcspec::{ClassDescriptor, EpsGrid, FunctionSpec};
pub use robp::RobpProgram;
pub use scalar::{Real, Scalar};
pub use spectrum::{AnalyzedFunction, FourierSpectrum, LevelProfile};
pub use table::{Restriction, Sign, SignPattern, TableKind, TruthTable};

/// Exact rational scalar.
pub type Rational = num_rational::BigRational;

pub type ExactTable = TruthTable<Rational>;
pub type ExactSpectrum = FourierSpectrum<Rational>;
pub type ExactProfile = LevelProfile<Rational>;

pub type Table32 = TruthTable<f32>;
pub type Spectrum32 = FourierSpectrum<f32>;
