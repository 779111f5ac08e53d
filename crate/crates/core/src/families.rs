//! Named function families.

use crate::error::{Error, Result};
use crate::keyed;
use crate::scalar::Scalar;
use crate::table::{check_arity, Sign, TruthTable};

fn plus_count(arity: usize, m: usize) -> usize {
    arity - (m as u32).count_ones() as usize
}

/// +1 iff at least `k` coordinates equal +1.
pub fn threshold<T: Scalar>(arity: usize, k: usize) -> Result<TruthTable<T>> {
    if k > arity + 1 {
        return Err(Error::domain(format!(
            "threshold {k} outside 0..={} for arity {arity}",
            arity + 1
        )));
    }
    TruthTable::from_predicate(arity, |m| plus_count(arity, m) >= k)
}

pub fn majority<T: Scalar>(arity: usize) -> Result<TruthTable<T>> {
    if arity.is_multiple_of(2) {
        return Err(Error::EvenMajority(arity));
    }
    threshold(arity, arity.div_ceil(2))
}

/// Character of the full set, `x_1 x_2 ... x_n`.
pub fn parity<T: Scalar>(arity: usize) -> Result<TruthTable<T>> {
    TruthTable::from_predicate(arity, |m| (m as u32).count_ones().is_multiple_of(2))
}

/// `x_i` with `i` 1-based.
pub fn dictator<T: Scalar>(arity: usize, i: usize) -> Result<TruthTable<T>> {
    if i == 0 || i > arity {
        return Err(Error::IndexOutOfRange { index: i, arity });
    }
    TruthTable::from_predicate(arity, |m| m >> (i - 1) & 1 == 0)
}

/// OR of ANDs over consecutive blocks of `width` variables, with -1 read as
/// true: the value is -1 iff some block is entirely -1.
pub fn tribes<T: Scalar>(width: usize, arity: usize) -> Result<TruthTable<T>> {
    if width == 0 || !arity.is_multiple_of(width) {
        return Err(Error::domain(format!(
            "tribes width {width} must divide arity {arity}"
        )));
    }
    check_arity(arity)?;
    let block = (1usize << width) - 1;
    TruthTable::from_predicate(arity, |m| {
        !(0..arity / width).any(|b| m >> (b * width) & block == block)
    })
}

pub fn constant<T: Scalar>(arity: usize, sign: Sign) -> Result<TruthTable<T>> {
    TruthTable::from_predicate(arity, |_| sign == Sign::Plus)
}

/// Uniformly random Boolean table keyed on `(seed, index)`.
pub fn random_boolean<T: Scalar>(arity: usize, seed: u64) -> Result<TruthTable<T>> {
    check_arity(arity)?;
    let words = keyed::keyed_words(seed, 1 << arity);
    TruthTable::from_predicate(arity, |m| words[m] >> 63 == 0)
}

/// Values uniform in [-1, 1], keyed on `(seed, index)`; always bounded kind.
pub fn random_bounded<T: Scalar>(arity: usize, seed: u64) -> Result<TruthTable<T>> {
    check_arity(arity)?;
    let values = keyed::keyed_words(seed, 1 << arity)
        .into_iter()
        .map(|w| T::from_f64_lossy(keyed::symmetric_unit(w)))
        .collect();
    TruthTable::bounded(arity, values)
}
