//! Fourier spectra via the fast Walsh–Hadamard transform.
//!
//! `coeffs[S] = 2^-n * sum_x f(x) * chi_S(x)` with `chi_S(x) = (-1)^|S ∩ x|`
//! under the table index convention. The forward transform carries the
//! normalization; the inverse is the bare butterfly. Boolean tables go
//! through an exact `i64` butterfly and are divided once at the end.

use std::ops::{Add, Sub};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::table::{TableKind, TruthTable};

/// Below this many entries the butterfly stays on one thread.
const PARALLEL_MIN_LEN: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq)]
pub struct FourierSpectrum<T = f64> {
    arity: usize,
    coeffs: Vec<T>,
}

impl<T: Scalar> FourierSpectrum<T> {
    pub fn new(arity: usize, coeffs: Vec<T>) -> Result<Self> {
        crate::table::check_arity(arity)?;
        if coeffs.len() != 1 << arity {
            return Err(Error::LengthMismatch {
                expected: 1 << arity,
                actual: coeffs.len(),
            });
        }
        Ok(FourierSpectrum { arity, coeffs })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coefficient(&self, mask: usize) -> &T {
        &self.coeffs[mask]
    }

    /// `sum_i f̂({i})`.
    pub fn level1_sum(&self) -> T {
        (0..self.arity).fold(T::zero(), |acc, i| acc + self.coeffs[1 << i].clone())
    }

    /// `f̂({1}), ..., f̂({n})`.
    pub fn singletons(&self) -> Vec<T> {
        (0..self.arity).map(|i| self.coeffs[1 << i].clone()).collect()
    }

    /// `sum_S f̂(S)^2`.
    pub fn sum_of_squares(&self) -> T {
        self.coeffs
            .iter()
            .fold(T::zero(), |acc, c| acc + c.clone() * c.clone())
    }

    /// Sum of coefficients over a list of masks.
    pub fn sum_over(&self, masks: &[usize]) -> T {
        masks
            .iter()
            .fold(T::zero(), |acc, &m| acc + self.coeffs[m].clone())
    }
}

/// In-place unnormalized Walsh–Hadamard butterfly, ascending bit positions.
pub fn butterfly<V>(data: &mut [V])
where
    V: Clone + Add<Output = V> + Sub<Output = V> + Send,
{
    let len = data.len();
    debug_assert!(len.is_power_of_two());
    let mut half = 1;
    while half < len {
        let pass = |chunk: &mut [V]| {
            let (lo, hi) = chunk.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let sum = a.clone() + b.clone();
                let diff = a.clone() - b.clone();
                *a = sum;
                *b = diff;
            }
        };
        if len >= PARALLEL_MIN_LEN && len / (2 * half) >= 8 {
            data.par_chunks_mut(2 * half).for_each(pass);
        } else {
            data.chunks_mut(2 * half).for_each(pass);
        }
        half *= 2;
    }
}

pub fn wht_forward<T: Scalar>(f: &TruthTable<T>) -> FourierSpectrum<T> {
    let n = f.arity();
    let scale = T::from_int(1i64 << n);
    let coeffs = if let Some(ints) = integer_spectrum(f) {
        ints.into_iter()
            .map(|v| T::from_int(v) / scale.clone())
            .collect()
    } else {
        let mut vals = f.values().to_vec();
        butterfly(&mut vals);
        vals.into_iter().map(|v| v / scale.clone()).collect()
    };
    FourierSpectrum { arity: n, coeffs }
}

/// `2^n * f̂(S)` for a Boolean table, exactly.
pub fn integer_spectrum<T: Scalar>(f: &TruthTable<T>) -> Option<Vec<i64>> {
    if !f.is_boolean() {
        return None;
    }
    let mut ints: Vec<i64> = f
        .values()
        .iter()
        .map(|v| if *v > T::zero() { 1 } else { -1 })
        .collect();
    butterfly(&mut ints);
    Some(ints)
}

/// Direct `O(2^n)` evaluation of one coefficient; the transform's oracle.
pub fn naive_coefficient<T: Scalar>(f: &TruthTable<T>, mask: usize) -> T {
    let sum = f
        .values()
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (m, v)| {
            if (m & mask).count_ones().is_multiple_of(2) {
                acc + v.clone()
            } else {
                acc - v.clone()
            }
        });
    sum / T::from_int(1i64 << f.arity())
}

/// Reconstructs the table. Values within `1e-9` outside [-1, 1] (float
/// round-off) are clamped; anything further out is an error.
pub fn wht_inverse<T: Scalar>(spec: &FourierSpectrum<T>) -> Result<TruthTable<T>> {
    let mut vals = spec.coeffs.clone();
    butterfly(&mut vals);
    let one = T::one();
    let slack = T::from_f64_lossy(1e-9);
    for (index, v) in vals.iter_mut().enumerate() {
        if v.abs() > one {
            if v.abs() - one.clone() <= slack {
                *v = v.signum();
            } else {
                return Err(Error::ValueOutOfRange {
                    index,
                    value: v.to_f64_lossy(),
                });
            }
        }
    }
    TruthTable::new(spec.arity, vals)
}

/// Per-level aggregates of a spectrum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelProfile<T = f64> {
    /// `L1^k = sum_{|S|=k} |f̂(S)|`.
    pub l1_by_level: Vec<T>,
    /// `W_k = sum_{|S|=k} f̂(S)`.
    pub signed_sum_by_level: Vec<T>,
    /// `sum_{|S|=k} f̂(S)^2`.
    pub weight_by_level: Vec<T>,
    pub total_influence: T,
    pub variance: T,
}

impl<T: Scalar> LevelProfile<T> {
    pub fn arity(&self) -> usize {
        self.l1_by_level.len() - 1
    }

    pub fn l1(&self, k: usize) -> T {
        self.l1_by_level.get(k).cloned().unwrap_or_else(T::zero)
    }

    pub fn signed_sum(&self, k: usize) -> T {
        self.signed_sum_by_level
            .get(k)
            .cloned()
            .unwrap_or_else(T::zero)
    }

    pub fn weight(&self, k: usize) -> T {
        self.weight_by_level.get(k).cloned().unwrap_or_else(T::zero)
    }
}

pub fn level_profile<T: Scalar>(spec: &FourierSpectrum<T>) -> LevelProfile<T> {
    let n = spec.arity;
    let mut l1 = vec![T::zero(); n + 1];
    let mut signed = vec![T::zero(); n + 1];
    let mut weight = vec![T::zero(); n + 1];
    for (mask, c) in spec.coeffs.iter().enumerate() {
        let k = mask.count_ones() as usize;
        l1[k] = l1[k].clone() + c.abs();
        signed[k] = signed[k].clone() + c.clone();
        weight[k] = weight[k].clone() + c.clone() * c.clone();
    }
    let total_influence = weight
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (k, w)| acc + T::from_int(k as i64) * w.clone());
    let variance = weight
        .iter()
        .skip(1)
        .fold(T::zero(), |acc, w| acc + w.clone());
    LevelProfile {
        l1_by_level: l1,
        signed_sum_by_level: signed,
        weight_by_level: weight,
        total_influence,
        variance,
    }
}

/// A table together with its spectrum and level profile.
#[derive(Clone, Debug)]
pub struct AnalyzedFunction<T = f64> {
    pub label: String,
    pub table: TruthTable<T>,
    pub spectrum: FourierSpectrum<T>,
    pub profile: LevelProfile<T>,
}

impl<T: Scalar> AnalyzedFunction<T> {
    pub fn new(label: impl Into<String>, table: TruthTable<T>) -> Self {
        let spectrum = wht_forward(&table);
        let profile = level_profile(&spectrum);
        AnalyzedFunction {
            label: label.into(),
            table,
            spectrum,
            profile,
        }
    }

    pub fn arity(&self) -> usize {
        self.table.arity()
    }

    pub fn kind(&self) -> TableKind {
        self.table.kind()
    }
}

/// Formats a mask as a 1-based subset, e.g. `{1,3}`.
pub fn subset_label(mask: usize) -> String {
    let items: Vec<String> = (0..usize::BITS as usize)
        .filter(|i| mask >> i & 1 == 1)
        .map(|i| (i + 1).to_string())
        .collect();
    format!("{{{}}}", items.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;
    use num_rational::BigRational;

    fn maj3() -> TruthTable {
        families::majority(3).unwrap()
    }

    #[test]
    fn maj3_spectrum() {
        // frozen from direct 8-point sums
        let s = wht_forward(&maj3());
        let expect = [0.0, 0.5, 0.5, 0.0, 0.5, 0.0, 0.0, -0.5];
        assert_eq!(s.coeffs(), &expect);
        for (mask, &c) in expect.iter().enumerate() {
            assert_eq!(naive_coefficient(&maj3(), mask), c);
        }
    }

    #[test]
    fn parity_and_constant() {
        let p: TruthTable = families::parity(2).unwrap();
        assert_eq!(wht_forward(&p).coeffs(), &[0.0, 0.0, 0.0, 1.0]);
        let c: TruthTable = families::constant(3, crate::table::Sign::Plus).unwrap();
        let s = wht_forward(&c);
        assert_eq!(s.coefficient(0), &1.0);
        assert!(s.coeffs()[1..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn empty_mask_is_mean() {
        let r: TruthTable = families::random_bounded(5, 3).unwrap();
        let mean = r.values().iter().sum::<f64>() / 32.0;
        assert!((naive_coefficient(&r, 0) - mean).abs() < 1e-15);
        let d: TruthTable = families::dictator(3, 2).unwrap();
        assert_eq!(naive_coefficient(&d, 0b010), 1.0);
    }

    #[test]
    fn maj3_profile() {
        let p = level_profile(&wht_forward(&maj3()));
        assert_eq!(p.l1_by_level, vec![0.0, 1.5, 0.0, 0.5]);
        assert_eq!(p.signed_sum_by_level, vec![0.0, 1.5, 0.0, -0.5]);
        assert_eq!(p.total_influence, 1.5);
        assert_eq!(p.variance, 1.0);
    }

    #[test]
    fn parity4_and_constant_profiles() {
        let p = level_profile(&wht_forward(&families::parity::<f64>(4).unwrap()));
        assert_eq!(p.l1(4), 1.0);
        assert_eq!(p.total_influence, 4.0);
        assert_eq!(p.variance, 1.0);
        assert!((0..4).all(|k| p.l1(k) == 0.0));
        let c = level_profile(&wht_forward(
            &families::constant::<f64>(3, crate::table::Sign::Minus).unwrap(),
        ));
        assert_eq!(c.variance, 0.0);
        assert_eq!(c.total_influence, 0.0);
    }

    #[test]
    fn inverse_round_trips() {
        let m = maj3();
        assert_eq!(wht_inverse(&wht_forward(&m)).unwrap(), m);
        let r: TruthTable = families::random_bounded(8, 7).unwrap();
        let back = wht_inverse(&wht_forward(&r)).unwrap();
        let dev = r
            .values()
            .iter()
            .zip(back.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(dev <= 1e-12, "{dev}");
    }

    #[test]
    fn inverse_of_single_coefficient() {
        let mut coeffs = vec![0.0; 4];
        coeffs[1] = 1.0;
        let t = wht_inverse(&FourierSpectrum::new(2, coeffs).unwrap()).unwrap();
        assert_eq!(t, families::dictator(2, 1).unwrap());
        let bad = FourierSpectrum::new(1, vec![2.0, 0.0]).unwrap();
        assert!(wht_inverse(&bad).is_err());
    }

    #[test]
    fn boolean_spectra_are_dyadic() {
        let f: TruthTable = families::random_boolean(9, 4).unwrap();
        let s = wht_forward(&f);
        let ints = integer_spectrum(&f).unwrap();
        for (c, i) in s.coeffs().iter().zip(&ints) {
            assert_eq!(c * 512.0, *i as f64);
            assert_eq!((c * 512.0).fract(), 0.0);
        }
    }

    #[test]
    fn rational_spectrum_matches_float() {
        let f: TruthTable<BigRational> = families::threshold(5, 2).unwrap();
        let exact = wht_forward(&f);
        let float = wht_forward(&families::threshold::<f64>(5, 2).unwrap());
        for (a, b) in exact.coeffs().iter().zip(float.coeffs()) {
            assert_eq!(a.to_f64_lossy(), *b);
        }
    }

    #[test]
    fn parallel_butterfly_matches_serial_oracle() {
        let f: TruthTable = families::random_bounded(17, 21).unwrap();
        let s = wht_forward(&f);
        for mask in [0usize, 1, 77, 1 << 16, (1 << 17) - 1] {
            assert!((s.coefficient(mask) - naive_coefficient(&f, mask)).abs() < 1e-12);
        }
    }

    #[test]
    fn arity_zero() {
        let t = TruthTable::new(0, vec![-0.25]).unwrap();
        let s = wht_forward(&t);
        assert_eq!(s.coeffs(), &[-0.25]);
        let p = level_profile(&s);
        assert_eq!(p.variance, 0.0);
        assert_eq!(p.l1_by_level, vec![0.25]);
        assert_eq!(wht_inverse(&s).unwrap(), t);
    }

    #[test]
    fn subset_labels() {
        assert_eq!(subset_label(0), "{}");
        assert_eq!(subset_label(0b101), "{1,3}");
    }
}
