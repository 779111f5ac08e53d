//! Scalar abstraction shared by every table, spectrum and coin computation.
//!
//! Everything that is polynomial in the table values (transforms, biased
//! expectations, level aggregates, restriction mixtures) is generic over
//! [`Scalar`], so the same code runs in `f32`, `f64` or exact rational
//! arithmetic. Inequality checkers that need square roots and logarithms are
//! generic over [`Real`] instead.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FloatConst, FromPrimitive, Num, Signed, ToPrimitive};

/// Ring of values a truth table, spectrum or bias can live in.
pub trait Scalar:
    Num + Signed + Clone + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
    /// Absolute tolerance used when two routes that are exact in principle
    /// are compared (e.g. direct vs. spectral expectations).
    const AGREEMENT_TOL: f64;

    /// Absolute tolerance on bound-report margins.
    const REPORT_TOL: f64;

    fn from_int(v: i64) -> Self {
        Self::from_i64(v).expect("every scalar represents small integers")
    }

    /// Nearest representable value; exact for the rational type.
    fn from_f64_lossy(v: f64) -> Self;

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Appends a byte encoding that identifies the value exactly.
    fn write_canonical(&self, out: &mut Vec<u8>);

    /// `2^-k`.
    fn dyadic(k: usize) -> Self {
        Self::one() / Self::from_int(1i64 << k)
    }

    fn powu(&self, k: usize) -> Self {
        num_traits::pow(self.clone(), k)
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

/// Floating-point scalars: everything needing `sqrt`, `ln` and friends.
pub trait Real: Scalar + Float + FloatConst {}

impl Real for f32 {}
impl Real for f64 {}

impl Scalar for f64 {
    const AGREEMENT_TOL: f64 = 1e-10;
    const REPORT_TOL: f64 = 1e-9;

    fn from_f64_lossy(v: f64) -> Self {
        v
    }

    fn write_canonical(&self, out: &mut Vec<u8>) {
        // +0.0 and -0.0 are the same table value
        let v = if *self == 0.0 { 0.0f64 } else { *self };
        out.extend_from_slice(&v.to_bits().to_le_bytes());
    }
}

impl Scalar for f32 {
    const AGREEMENT_TOL: f64 = 1e-4;
    const REPORT_TOL: f64 = 1e-4;

    fn from_f64_lossy(v: f64) -> Self {
        v as f32
    }

    fn write_canonical(&self, out: &mut Vec<u8>) {
        let v = if *self == 0.0 { 0.0f32 } else { *self };
        out.extend_from_slice(&v.to_bits().to_le_bytes());
    }
}

impl Scalar for BigRational {
    const AGREEMENT_TOL: f64 = 0.0;
    const REPORT_TOL: f64 = 0.0;

    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_f64_lossy(v: f64) -> Self {
        BigRational::from_float(v).expect("finite value")
    }

    fn write_canonical(&self, out: &mut Vec<u8>) {
        // Ratio is kept reduced with a positive denominator
        let num = self.numer().to_signed_bytes_le();
        let den = self.denom().to_signed_bytes_le();
        out.extend_from_slice(&(num.len() as u32).to_le_bytes());
        out.extend_from_slice(&num);
        out.extend_from_slice(&den);
    }
}
