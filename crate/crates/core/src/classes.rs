//! Finite function classes closed under restriction and sign flips.
//!
//! A member is `restrict(z -> tau * f(z ⊙ sigma), rho)` for a base function
//! `f`. Enumeration deduplicates by exact table bytes; sampling draws
//! derivations i.i.d. from a seed.

use std::collections::HashMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coin::expectation_from_profile;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectrum::{level_profile, wht_forward};
use crate::table::{Restriction, SignPattern, TruthTable};

pub const DEFAULT_MEMBER_CAP: usize = 1_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ClosureFlags {
    pub restriction: bool,
    pub input_negation: bool,
    pub output_negation: bool,
}

impl ClosureFlags {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn restriction() -> Self {
        ClosureFlags {
            restriction: true,
            ..Self::default()
        }
    }

    pub fn all() -> Self {
        ClosureFlags {
            restriction: true,
            input_negation: true,
            output_negation: true,
        }
    }

    pub fn has_signs(&self) -> bool {
        self.input_negation || self.output_negation
    }
}

/// How a member arises from a base function; masks use the table bit
/// convention (bit `i - 1` for variable `i`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Derivation {
    pub base: usize,
    pub fixed_mask: u32,
    pub minus_mask: u32,
    pub flip_mask: u32,
    pub negate_output: bool,
}

impl Derivation {
    pub fn identity(base: usize) -> Self {
        Derivation {
            base,
            fixed_mask: 0,
            minus_mask: 0,
            flip_mask: 0,
            negate_output: false,
        }
    }

    pub fn restriction(&self) -> Restriction {
        Restriction::from_masks(self.fixed_mask, self.minus_mask)
    }

    pub fn signs(&self, arity: usize) -> SignPattern {
        SignPattern::from_masks(arity, self.flip_mask, self.negate_output)
    }

    /// Materializes the member from its base table in one pass.
    pub fn apply<T: Scalar>(&self, base: &TruthTable<T>) -> TruthTable<T> {
        base.compose(
            self.fixed_mask,
            self.minus_mask,
            self.flip_mask,
            self.negate_output,
        )
    }
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "base[{}]", self.base)?;
        if self.fixed_mask != 0 {
            write!(f, " rho={}", self.restriction())?;
        }
        if self.flip_mask != 0 {
            write!(f, " sigma={:#x}", self.flip_mask)?;
        }
        if self.negate_output {
            f.write_str(" tau=-1")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Member<T = f64> {
    pub table: TruthTable<T>,
    pub derivation: Derivation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ClassMode {
    Enumerate { cap: usize },
    Sample { count: usize, seed: u64 },
    Explicit,
}

#[derive(Clone, Debug)]
pub struct FunctionClass<T = f64> {
    base: Vec<TruthTable<T>>,
    flags: ClosureFlags,
    mode: ClassMode,
    members: Vec<Member<T>>,
}

impl<T: Scalar> FunctionClass<T> {
    /// A class consisting of exactly the given tables, no closure claimed.
    pub fn explicit(tables: Vec<TruthTable<T>>) -> Result<Self> {
        if tables.is_empty() {
            return Err(Error::domain("class needs at least one function"));
        }
        let members = tables
            .iter()
            .enumerate()
            .map(|(i, t)| Member {
                table: t.clone(),
                derivation: Derivation::identity(i),
            })
            .collect();
        Ok(FunctionClass {
            base: tables,
            flags: ClosureFlags::none(),
            mode: ClassMode::Explicit,
            members,
        })
    }

    /// Marks the class restriction-closed after checking that every
    /// restriction of every member is itself a member.
    pub fn with_verified_restriction_closure(mut self) -> Result<Self> {
        if !self.is_restriction_closed() {
            return Err(Error::Precondition(
                "class is not closed under restriction".into(),
            ));
        }
        self.flags.restriction = true;
        Ok(self)
    }

    pub fn is_restriction_closed(&self) -> bool {
        let keys: std::collections::HashSet<Vec<u8>> =
            self.members.iter().map(|m| m.table.canonical_key()).collect();
        self.members.iter().all(|m| {
            restriction_patterns(m.table.arity())
                .all(|(fixed, minus)| keys.contains(&m.table.compose(fixed, minus, 0, false).canonical_key()))
        })
    }

    pub fn base(&self) -> &[TruthTable<T>] {
        &self.base
    }

    pub fn flags(&self) -> ClosureFlags {
        self.flags
    }

    pub fn mode(&self) -> ClassMode {
        self.mode
    }

    pub fn members(&self) -> &[Member<T>] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// True when suprema over the members are suprema over the whole class.
    pub fn is_exhaustive(&self) -> bool {
        !matches!(self.mode, ClassMode::Sample { .. })
    }

    /// A prefix of the member list as a class of its own.
    pub fn truncated(&self, len: usize) -> Self {
        FunctionClass {
            members: self.members[..len.min(self.members.len())].to_vec(),
            ..self.clone()
        }
    }
}

/// All `(fixed_mask, minus_mask)` pairs with `minus ⊆ fixed`: `3^n` patterns.
fn restriction_patterns(arity: usize) -> impl Iterator<Item = (u32, u32)> {
    (0u32..1 << arity).flat_map(|fixed| subsets(fixed).map(move |minus| (fixed, minus)))
}

fn subsets(mask: u32) -> impl Iterator<Item = u32> {
    let mut next = Some(0u32);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == mask {
            None
        } else {
            Some(cur.wrapping_sub(mask) & mask)
        };
        Some(cur)
    })
}

/// Number of derivations enumeration will visit for one base of `arity`.
/// Input flips on fixed coordinates are absorbed by the restriction, so with
/// both restriction and input negation only flips of free coordinates are
/// visited (`4^n` combinations).
fn patterns_per_base(arity: usize, flags: ClosureFlags) -> u128 {
    let n = arity as u32;
    let core: u128 = match (flags.restriction, flags.input_negation) {
        (true, true) => 4u128.pow(n),
        (true, false) => 3u128.pow(n),
        (false, true) => 2u128.pow(n),
        (false, false) => 1,
    };
    core * if flags.output_negation { 2 } else { 1 }
}

pub fn closure_enumerate<T: Scalar>(
    base: Vec<TruthTable<T>>,
    flags: ClosureFlags,
    cap: usize,
) -> Result<FunctionClass<T>> {
    if base.is_empty() {
        return Err(Error::domain("class needs at least one base function"));
    }
    let estimate: u128 = base
        .iter()
        .map(|b| patterns_per_base(b.arity(), flags))
        .sum();
    if estimate > cap as u128 {
        return Err(Error::CapExceeded { estimate, cap });
    }

    let mut seen: HashMap<Vec<u8>, ()> = HashMap::new();
    let mut members = Vec::new();
    for (bi, b) in base.iter().enumerate() {
        let n = b.arity();
        let full = ((1u64 << n) - 1) as u32;
        let fixings: Vec<(u32, u32)> = if flags.restriction {
            restriction_patterns(n).collect()
        } else {
            vec![(0, 0)]
        };
        let negations: &[bool] = if flags.output_negation {
            &[false, true]
        } else {
            &[false]
        };
        for &negate_output in negations {
            for &(fixed_mask, minus_mask) in &fixings {
                let flips: Vec<u32> = if flags.input_negation {
                    subsets(full & !fixed_mask).collect()
                } else {
                    vec![0]
                };
                for flip_mask in flips {
                    let derivation = Derivation {
                        base: bi,
                        fixed_mask,
                        minus_mask,
                        flip_mask,
                        negate_output,
                    };
                    let table = derivation.apply(b);
                    if seen.insert(table.canonical_key(), ()).is_none() {
                        members.push(Member { table, derivation });
                    }
                }
            }
        }
    }
    Ok(FunctionClass {
        base,
        flags,
        mode: ClassMode::Enumerate { cap },
        members,
    })
}

/// I.i.d. draws: a uniform base member; with restriction, each coordinate
/// independently fixed to -1, fixed to +1 or left free (1/3 each); uniform
/// signs where flagged.
pub fn closure_sample<T: Scalar>(
    base: Vec<TruthTable<T>>,
    flags: ClosureFlags,
    count: usize,
    seed: u64,
    dedup: bool,
) -> Result<FunctionClass<T>> {
    if base.is_empty() {
        return Err(Error::domain("class needs at least one base function"));
    }
    if count == 0 {
        return Err(Error::domain("sample count must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen: HashMap<Vec<u8>, ()> = HashMap::new();
    let mut members = Vec::with_capacity(count);
    for _ in 0..count {
        let bi = rng.gen_range(0..base.len());
        let n = base[bi].arity();
        let mut derivation = Derivation::identity(bi);
        if flags.restriction {
            for i in 0..n {
                match rng.gen_range(0..3) {
                    0 => {
                        derivation.fixed_mask |= 1 << i;
                        derivation.minus_mask |= 1 << i;
                    }
                    1 => derivation.fixed_mask |= 1 << i,
                    _ => {}
                }
            }
        }
        if flags.input_negation {
            derivation.flip_mask = (rng.gen::<u64>() & ((1u64 << n) - 1)) as u32;
        }
        if flags.output_negation {
            derivation.negate_output = rng.gen_bool(0.5);
        }
        let table = derivation.apply(&base[bi]);
        if dedup && seen.insert(table.canonical_key(), ()).is_some() {
            continue;
        }
        members.push(Member { table, derivation });
    }
    Ok(FunctionClass {
        base,
        flags,
        mode: ClassMode::Sample { count, seed },
        members,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MemberStats<T = f64> {
    pub arity: usize,
    pub l1_by_level: Vec<T>,
    /// `sum_i f̂({i})`.
    pub signed_level1: T,
    /// Advantage at each grid point, in grid order.
    pub advantages: Vec<T>,
}

pub fn member_stats<T: Scalar>(table: &TruthTable<T>, eps_grid: &[T]) -> MemberStats<T> {
    let profile = level_profile(&wht_forward(table));
    let uniform = profile.signed_sum(0);
    MemberStats {
        arity: table.arity(),
        signed_level1: profile.signed_sum(1),
        advantages: eps_grid
            .iter()
            .map(|e| (expectation_from_profile(&profile, e) - uniform.clone()).abs())
            .collect(),
        l1_by_level: profile.l1_by_level,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Supremum<T = f64> {
    pub value: T,
    /// Index into the class member list.
    pub witness: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassStats<T = f64> {
    /// False for sampled classes, whose suprema are lower bounds.
    pub exact: bool,
    pub member_count: usize,
    pub sup_l1_by_level: Vec<Supremum<T>>,
    /// `sup |sum_i f̂({i})|`.
    pub sup_abs_signed_level1: Supremum<T>,
    pub sup_advantage: Vec<(T, Supremum<T>)>,
    pub members: Vec<MemberStats<T>>,
}

impl<T> ClassStats<T> {
    pub fn label(&self) -> &'static str {
        if self.exact {
            "exact"
        } else {
            "sampled lower bound"
        }
    }
}

fn supremum<T: Scalar>(values: impl Iterator<Item = T>) -> Supremum<T> {
    let mut best = Supremum {
        value: T::zero(),
        witness: 0,
    };
    for (i, v) in values.enumerate() {
        if i == 0 || v > best.value {
            best = Supremum {
                value: v,
                witness: i,
            };
        }
    }
    best
}

pub fn class_stats<T: Scalar>(c: &FunctionClass<T>, eps_grid: &[T]) -> Result<ClassStats<T>> {
    if c.is_empty() {
        return Err(Error::domain("class statistics need a non-empty class"));
    }
    let members: Vec<MemberStats<T>> = c
        .members
        .par_iter()
        .map(|m| member_stats(&m.table, eps_grid))
        .collect();
    let max_arity = members.iter().map(|m| m.arity).max().unwrap_or(0);
    let sup_l1_by_level = (0..=max_arity)
        .map(|k| {
            supremum(
                members
                    .iter()
                    .map(|m| m.l1_by_level.get(k).cloned().unwrap_or_else(T::zero)),
            )
        })
        .collect();
    let sup_abs_signed_level1 = supremum(members.iter().map(|m| m.signed_level1.abs()));
    let sup_advantage = eps_grid
        .iter()
        .enumerate()
        .map(|(j, e)| {
            (
                e.clone(),
                supremum(members.iter().map(|m| m.advantages[j].clone())),
            )
        })
        .collect();
    Ok(ClassStats {
        exact: c.is_exhaustive(),
        member_count: members.len(),
        sup_l1_by_level,
        sup_abs_signed_level1,
        sup_advantage,
        members,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;
    use crate::table::Sign;

    fn keys<T: Scalar>(c: &FunctionClass<T>) -> std::collections::BTreeSet<Vec<u8>> {
        c.members().iter().map(|m| m.table.canonical_key()).collect()
    }

    #[test]
    fn dictator_restriction_closure() {
        let x1: TruthTable = families::dictator(1, 1).unwrap();
        let c = closure_enumerate(vec![x1.clone()], ClosureFlags::restriction(), 100).unwrap();
        assert_eq!(c.len(), 3);
        let expect = FunctionClass::explicit(vec![
            x1,
            TruthTable::constant(0, 1.0).unwrap(),
            TruthTable::constant(0, -1.0).unwrap(),
        ])
        .unwrap();
        assert_eq!(keys(&c), keys(&expect));
        assert!(c.is_restriction_closed());
    }

    #[test]
    fn no_closure_and_output_negation() {
        let m: TruthTable = families::majority(3).unwrap();
        let c = closure_enumerate(vec![m.clone()], ClosureFlags::none(), 10).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.members()[0].table, m);
        let p: TruthTable = families::parity(2).unwrap();
        let flags = ClosureFlags {
            output_negation: true,
            ..ClosureFlags::none()
        };
        assert_eq!(closure_enumerate(vec![p], flags, 10).unwrap().len(), 2);
    }

    #[test]
    fn cap_is_enforced() {
        // 4^11 * 2 sign-and-restriction patterns
        let m: TruthTable = families::majority(11).unwrap();
        let err = closure_enumerate(vec![m], ClosureFlags::all(), DEFAULT_MEMBER_CAP).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { .. }));
        assert!(err.to_string().contains("sampling"));
    }

    #[test]
    fn derivations_reproduce_members() {
        let f: TruthTable = families::random_boolean(4, 8).unwrap();
        let c = closure_enumerate(vec![f.clone()], ClosureFlags::all(), DEFAULT_MEMBER_CAP).unwrap();
        for m in c.members() {
            let d = &m.derivation;
            let via_ops = f
                .apply_signs(&d.signs(4))
                .unwrap()
                .restrict(&d.restriction())
                .unwrap();
            assert_eq!(via_ops, m.table);
            assert!(m.table.arity() <= 4);
        }
    }

    #[test]
    fn sign_flips_on_fixed_coordinates_add_nothing() {
        // the 4^n pattern shortcut must cover the full 6^n family
        let f: TruthTable = families::random_boolean(3, 5).unwrap();
        let fast = closure_enumerate(
            vec![f.clone()],
            ClosureFlags {
                restriction: true,
                input_negation: true,
                output_negation: false,
            },
            1000,
        )
        .unwrap();
        let mut slow = std::collections::BTreeSet::new();
        for flip in 0..8u32 {
            for (fixed, minus) in restriction_patterns(3) {
                slow.insert(f.compose(fixed, minus, flip, false).canonical_key());
            }
        }
        assert_eq!(keys(&fast), slow);
    }

    #[test]
    fn sampling_is_seeded() {
        let m: TruthTable = families::majority(5).unwrap();
        let a = closure_sample(vec![m.clone()], ClosureFlags::all(), 100, 1, false).unwrap();
        let b = closure_sample(vec![m.clone()], ClosureFlags::all(), 100, 1, false).unwrap();
        assert_eq!(a.len(), 100);
        for (x, y) in a.members().iter().zip(b.members()) {
            assert_eq!(x.table, y.table);
            assert_eq!(x.derivation, y.derivation);
        }
        let plain = closure_sample(vec![m.clone()], ClosureFlags::none(), 20, 3, false).unwrap();
        assert!(plain.members().iter().all(|x| x.table == m));
        assert!(!a.is_exhaustive());
    }

    #[test]
    fn sampled_restrictions_of_maj9_are_consistent() {
        let m: TruthTable = families::majority(9).unwrap();
        let c = closure_sample(vec![m.clone()], ClosureFlags::restriction(), 500, 7, false).unwrap();
        assert_eq!(c.len(), 500);
        for member in c.members() {
            let rho = member.derivation.restriction();
            let free: Vec<usize> = (1..=9).filter(|i| !rho.fixed().contains_key(i)).collect();
            for z in 0..1usize << free.len() {
                let mut x = vec![Sign::Plus; 9];
                for (&i, &s) in rho.fixed() {
                    x[i - 1] = s;
                }
                for (j, &i) in free.iter().enumerate() {
                    x[i - 1] = Sign::from_bit(z >> j & 1 == 1);
                }
                assert_eq!(*member.table.value(z), m.eval(&x).unwrap());
            }
        }
    }

    #[test]
    fn stats_of_small_classes() {
        let x1: TruthTable = families::dictator(1, 1).unwrap();
        let c = closure_enumerate(vec![x1], ClosureFlags::restriction(), 100).unwrap();
        let s = class_stats(&c, &[0.5]).unwrap();
        assert_eq!(s.sup_abs_signed_level1.value, 1.0);
        assert_eq!(c.members()[s.sup_abs_signed_level1.witness].table.arity(), 1);
        assert!(s.exact);

        let p: TruthTable = families::parity(3).unwrap();
        let flags = ClosureFlags {
            output_negation: true,
            ..ClosureFlags::none()
        };
        let s = class_stats(&closure_enumerate(vec![p], flags, 10).unwrap(), &[]).unwrap();
        assert_eq!(s.sup_l1_by_level[1].value, 0.0);
    }

    #[test]
    fn maj3_restriction_closure_stats() {
        let m: TruthTable = families::majority(3).unwrap();
        let c = closure_enumerate(vec![m.clone()], ClosureFlags::restriction(), 100).unwrap();
        let s = class_stats(&c, &[0.1, 0.9]).unwrap();
        assert_eq!(s.sup_l1_by_level[1].value, 1.5);
        assert_eq!(c.members()[s.sup_l1_by_level[1].witness].table, m);
        // witness consistency
        for (_, sup) in &s.sup_advantage {
            let w = &c.members()[sup.witness].table;
            let again = member_stats(w, &[0.1, 0.9]);
            assert!(again.advantages.contains(&sup.value));
        }
    }

    #[test]
    fn sign_closure_does_not_change_l1_suprema() {
        for seed in 0..4 {
            let f: TruthTable = families::random_boolean(3, seed).unwrap();
            let r = closure_enumerate(vec![f.clone()], ClosureFlags::restriction(), 1000).unwrap();
            let a = closure_enumerate(vec![f], ClosureFlags::all(), 1000).unwrap();
            let sr = class_stats(&r, &[]).unwrap();
            let sa = class_stats(&a, &[]).unwrap();
            for k in 0..=3 {
                assert_eq!(sr.sup_l1_by_level[k].value, sa.sup_l1_by_level[k].value);
            }
        }
    }

    #[test]
    fn suprema_monotone_under_inclusion() {
        let f: TruthTable = families::random_boolean(4, 77).unwrap();
        let c = closure_enumerate(vec![f], ClosureFlags::all(), DEFAULT_MEMBER_CAP).unwrap();
        let grid = [0.2, 0.6];
        let mut prev: Option<ClassStats> = None;
        for len in [1, 5, 20, 80, c.len()] {
            let s = class_stats(&c.truncated(len), &grid).unwrap();
            if let Some(p) = &prev {
                for (a, b) in p.sup_l1_by_level.iter().zip(&s.sup_l1_by_level) {
                    assert!(b.value >= a.value);
                }
                assert!(s.sup_abs_signed_level1.value >= p.sup_abs_signed_level1.value);
                for (a, b) in p.sup_advantage.iter().zip(&s.sup_advantage) {
                    assert!(b.1.value >= a.1.value);
                }
            }
            prev = Some(s);
        }
    }

    #[test]
    fn explicit_class_closure_verification() {
        let x1: TruthTable = families::dictator(1, 1).unwrap();
        assert!(FunctionClass::explicit(vec![x1.clone()])
            .unwrap()
            .with_verified_restriction_closure()
            .is_err());
        let ok = FunctionClass::explicit(vec![
            x1,
            TruthTable::constant(0, 1.0).unwrap(),
            TruthTable::constant(0, -1.0).unwrap(),
        ])
        .unwrap()
        .with_verified_restriction_closure()
        .unwrap();
        assert!(ok.flags().restriction);
    }
}
