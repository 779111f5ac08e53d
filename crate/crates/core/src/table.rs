//! Dense truth tables on the Boolean cube and the closure operations on them.
//!
//! Index convention: bit `i - 1` of a table index set means `x_i = -1`, clear
//! means `x_i = +1`. Index 0 is therefore the all-plus-ones point, and the
//! character `chi_S` at index `m` is `(-1)^popcount(S & m)`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest supported arity (2^26 doubles is about 0.5 GiB).
pub const MAX_ARITY: usize = 26;

pub(crate) fn check_arity(arity: usize) -> Result<()> {
    if arity > MAX_ARITY {
        return Err(Error::ArityOutOfRange {
            arity,
            max: MAX_ARITY,
        });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableKind {
    /// Every value is exactly +1 or -1.
    Boolean,
    /// Values anywhere in [-1, 1].
    Bounded,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn from_bit(bit: bool) -> Sign {
        if bit {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn from_i64(v: i64) -> Option<Sign> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }

    /// Table-index bit for this coordinate value.
    pub fn bit(self) -> bool {
        self == Sign::Minus
    }

    pub fn to_i64(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn value<T: Scalar>(self) -> T {
        T::from_int(self.to_i64())
    }

    pub fn negate(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

/// Partial assignment of input variables (1-based indices).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Restriction {
    fixed: BTreeMap<usize, Sign>,
}

impl Restriction {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(fixed: impl IntoIterator<Item = (usize, Sign)>) -> Self {
        Restriction {
            fixed: fixed.into_iter().collect(),
        }
    }

    /// Builds a restriction from bit masks: bit `i - 1` of `fixed_mask` fixes
    /// `x_i`, and the same bit of `minus_mask` fixes it to -1 (else +1).
    pub fn from_masks(fixed_mask: u32, minus_mask: u32) -> Self {
        let fixed = (0..32)
            .filter(|b| fixed_mask >> b & 1 == 1)
            .map(|b| (b + 1, Sign::from_bit(minus_mask >> b & 1 == 1)))
            .collect();
        Restriction { fixed }
    }

    pub fn fix(mut self, index: usize, sign: Sign) -> Self {
        self.fixed.insert(index, sign);
        self
    }

    pub fn fixed(&self) -> &BTreeMap<usize, Sign> {
        &self.fixed
    }

    pub fn len(&self) -> usize {
        self.fixed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixed.is_empty()
    }

    pub fn free_count(&self, arity: usize) -> usize {
        arity - self.fixed.len()
    }

    /// `(fixed_mask, minus_mask)`, validated against `arity`.
    pub fn masks(&self, arity: usize) -> Result<(u32, u32)> {
        let mut fixed_mask = 0u32;
        let mut minus_mask = 0u32;
        for (&i, &s) in &self.fixed {
            if i == 0 || i > arity {
                return Err(Error::IndexOutOfRange { index: i, arity });
            }
            fixed_mask |= 1 << (i - 1);
            if s.bit() {
                minus_mask |= 1 << (i - 1);
            }
        }
        Ok((fixed_mask, minus_mask))
    }
}

impl fmt::Display for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (j, (i, s)) in self.fixed.iter().enumerate() {
            if j > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}:{s}")?;
        }
        f.write_str("}")
    }
}

/// Input sign flips `sigma` and output sign `tau`: `z -> tau * f(z ⊙ sigma)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignPattern {
    pub input_signs: Vec<Sign>,
    pub output_sign: Sign,
}

impl SignPattern {
    pub fn identity(arity: usize) -> Self {
        SignPattern {
            input_signs: vec![Sign::Plus; arity],
            output_sign: Sign::Plus,
        }
    }

    pub fn from_masks(arity: usize, flip_mask: u32, negate_output: bool) -> Self {
        SignPattern {
            input_signs: (0..arity)
                .map(|b| Sign::from_bit(flip_mask >> b & 1 == 1))
                .collect(),
            output_sign: Sign::from_bit(negate_output),
        }
    }

    pub fn flip_mask(&self) -> u32 {
        self.input_signs
            .iter()
            .enumerate()
            .filter(|(_, s)| s.bit())
            .fold(0, |m, (b, _)| m | 1 << b)
    }
}

impl fmt::Display for SignPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.input_signs {
            f.write_str(if s.bit() { "-" } else { "+" })?;
        }
        write!(f, "/{}", if self.output_sign.bit() { "-" } else { "+" })
    }
}

/// Values of `f: {-1,1}^n -> [-1,1]` in index order.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthTable<T = f64> {
    arity: usize,
    values: Vec<T>,
    kind: TableKind,
}

impl<T: Scalar> TruthTable<T> {
    /// Validates the values and infers the kind: Boolean iff every value is
    /// exactly ±1.
    pub fn new(arity: usize, values: Vec<T>) -> Result<Self> {
        let kind = validate_values(arity, &values)?;
        Ok(TruthTable {
            arity,
            values,
            kind,
        })
    }

    /// Like [`TruthTable::new`] but always tagged bounded.
    pub fn bounded(arity: usize, values: Vec<T>) -> Result<Self> {
        validate_values(arity, &values)?;
        Ok(TruthTable {
            arity,
            values,
            kind: TableKind::Bounded,
        })
    }

    /// Boolean table; `pred(index)` true means the value +1.
    pub fn from_predicate(arity: usize, pred: impl Fn(usize) -> bool) -> Result<Self> {
        check_arity(arity)?;
        let (one, minus) = (T::one(), -T::one());
        let values = (0..1usize << arity)
            .map(|m| if pred(m) { one.clone() } else { minus.clone() })
            .collect();
        Ok(TruthTable {
            arity,
            values,
            kind: TableKind::Boolean,
        })
    }

    pub fn from_fn(arity: usize, f: impl Fn(usize) -> T) -> Result<Self> {
        check_arity(arity)?;
        Self::new(arity, (0..1usize << arity).map(f).collect())
    }

    pub fn constant(arity: usize, value: T) -> Result<Self> {
        check_arity(arity)?;
        Self::new(arity, vec![value; 1 << arity])
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn kind(&self) -> TableKind {
        self.kind
    }

    pub fn is_boolean(&self) -> bool {
        self.kind == TableKind::Boolean
    }

    pub fn value(&self, index: usize) -> &T {
        &self.values[index]
    }

    /// Evaluates at a point given as signs `x_1..x_n`.
    pub fn eval(&self, x: &[Sign]) -> Result<T> {
        if x.len() != self.arity {
            return Err(Error::LengthMismatch {
                expected: self.arity,
                actual: x.len(),
            });
        }
        Ok(self.values[point_index(x)].clone())
    }

    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .map(|v| v.abs())
            .fold(T::zero(), T::max_of)
    }

    /// Same values, tagged bounded.
    pub fn as_bounded(&self) -> Self {
        TruthTable {
            kind: TableKind::Bounded,
            ..self.clone()
        }
    }

    pub fn convert<U: Scalar>(&self) -> TruthTable<U> {
        TruthTable {
            arity: self.arity,
            values: self
                .values
                .iter()
                .map(|v| U::from_f64_lossy(v.to_f64_lossy()))
                .collect(),
            kind: self.kind,
        }
    }

    /// Fixes the variables in `rho`; the result is a table on the free
    /// variables in ascending original order.
    pub fn restrict(&self, rho: &Restriction) -> Result<Self> {
        let (fixed, minus) = rho.masks(self.arity)?;
        Ok(self.compose(fixed, minus, 0, false))
    }

    /// `z -> tau * f(z_1 sigma_1, ..., z_n sigma_n)`.
    pub fn apply_signs(&self, s: &SignPattern) -> Result<Self> {
        if s.input_signs.len() != self.arity {
            return Err(Error::LengthMismatch {
                expected: self.arity,
                actual: s.input_signs.len(),
            });
        }
        Ok(self.compose(0, 0, s.flip_mask(), s.output_sign.bit()))
    }

    /// Bounded table `c * f`; requires `|c| * max|f| <= 1`.
    pub fn scale(&self, c: &T) -> Result<Self> {
        let peak = c.abs() * self.max_abs();
        if peak > T::one() {
            return Err(Error::domain(format!(
                "scale factor {} pushes values to {} > 1",
                c.to_f64_lossy(),
                peak.to_f64_lossy()
            )));
        }
        Ok(TruthTable {
            arity: self.arity,
            values: self.values.iter().map(|v| c.clone() * v.clone()).collect(),
            kind: TableKind::Bounded,
        })
    }

    /// Reorders variables: the new variable `j` (1-based) reads the old
    /// variable `perm[j - 1]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.arity {
            return Err(Error::LengthMismatch {
                expected: self.arity,
                actual: perm.len(),
            });
        }
        let mut seen = vec![false; self.arity];
        for &p in perm {
            if p == 0 || p > self.arity || seen[p - 1] {
                return Err(Error::domain(format!("{perm:?} is not a permutation")));
            }
            seen[p - 1] = true;
        }
        let values = (0..self.len())
            .map(|m| {
                let old = perm
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| m >> j & 1 == 1)
                    .fold(0usize, |acc, (_, &p)| acc | 1 << (p - 1));
                self.values[old].clone()
            })
            .collect();
        Ok(TruthTable {
            arity: self.arity,
            values,
            kind: self.kind,
        })
    }

    /// Restriction of a sign-transformed table in one pass:
    /// `z -> (-1)^negate * f((base | scatter(z)) ^ flip)`.
    pub(crate) fn compose(&self, fixed: u32, minus: u32, flip: u32, negate: bool) -> Self {
        let full = (1u32 << self.arity).wrapping_sub(1) as usize;
        let free = full & !(fixed as usize);
        let base = (minus & fixed) as usize;
        let flip = flip as usize & full;
        let m = free.count_ones() as usize;
        let mut values = Vec::with_capacity(1 << m);
        // subsets of `free` in increasing order == scatter of z = 0, 1, 2, ...
        let mut sub = 0usize;
        loop {
            let v = self.values[(base | sub) ^ flip].clone();
            values.push(if negate { -v } else { v });
            if sub == free {
                break;
            }
            sub = (sub.wrapping_sub(free)) & free;
        }
        TruthTable {
            arity: m,
            values,
            kind: self.kind,
        }
    }

    /// Byte key identifying the table exactly (arity and values).
    pub fn canonical_key(&self) -> Vec<u8> {
        let mut key = Vec::with_capacity(8 + self.len());
        key.push(self.arity as u8);
        if self.is_boolean() {
            key.push(0);
            let mut byte = 0u8;
            for (i, v) in self.values.iter().enumerate() {
                if *v < T::zero() {
                    byte |= 1 << (i % 8);
                }
                if i % 8 == 7 {
                    key.push(byte);
                    byte = 0;
                }
            }
            if !self.len().is_multiple_of(8) {
                key.push(byte);
            }
        } else {
            key.push(1);
            for v in &self.values {
                v.write_canonical(&mut key);
            }
        }
        key
    }
}

/// Table index of a point given as signs.
pub fn point_index(x: &[Sign]) -> usize {
    x.iter()
        .enumerate()
        .filter(|(_, s)| s.bit())
        .fold(0, |m, (i, _)| m | 1 << i)
}

/// Signs of the point at table index `m`.
pub fn index_point(arity: usize, m: usize) -> Vec<Sign> {
    (0..arity).map(|i| Sign::from_bit(m >> i & 1 == 1)).collect()
}

fn validate_values<T: Scalar>(arity: usize, values: &[T]) -> Result<TableKind> {
    check_arity(arity)?;
    if values.len() != 1 << arity {
        return Err(Error::LengthMismatch {
            expected: 1 << arity,
            actual: values.len(),
        });
    }
    let one = T::one();
    let mut boolean = true;
    for (index, v) in values.iter().enumerate() {
        if v.abs() > one || v.to_f64().is_some_and(f64::is_nan) {
            return Err(Error::ValueOutOfRange {
                index,
                value: v.to_f64_lossy(),
            });
        }
        if v.abs() != one {
            boolean = false;
        }
    }
    Ok(if boolean {
        TableKind::Boolean
    } else {
        TableKind::Bounded
    })
}

/// Every Boolean function of `arity <= 4` variables, in order of the id whose
/// bit `m` set means `f(m) = -1`.
pub fn all_boolean_tables<T: Scalar>(arity: usize) -> Result<impl Iterator<Item = TruthTable<T>>> {
    if arity > 4 {
        return Err(Error::domain(format!(
            "exhaustive enumeration limited to arity 4, got {arity}"
        )));
    }
    let len = 1usize << arity;
    Ok((0..1u64 << len).map(move |id| {
        TruthTable::from_predicate(arity, |m| id >> m & 1 == 0).expect("arity checked")
    }))
}
