//! Expectations under ε-biased product measures and the coin-problem
//! quantities built on them.
//!
//! `coins(eps)` is the product measure on `{-1,1}^n` with `E[x_i] = eps`.
//! Every expectation here is exact (polynomial in the table values and the
//! bias); there is no sampling.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectrum::{level_profile, wht_forward, FourierSpectrum, LevelProfile};
use crate::table::{check_arity, Restriction, Sign, TruthTable};

/// Coordinate bias `E[x_i] = eps`, `|eps| <= 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiasPoint<T = f64> {
    eps: T,
}

impl<T: Scalar> BiasPoint<T> {
    pub fn new(eps: T) -> Result<Self> {
        if eps.abs() > T::one() || eps.to_f64().is_some_and(f64::is_nan) {
            return Err(Error::InvalidBias(eps.to_f64_lossy()));
        }
        Ok(BiasPoint { eps })
    }

    pub fn eps(&self) -> &T {
        &self.eps
    }

    /// `P[x_i = +1]` and `P[x_i = -1]`.
    fn marginals(&self) -> (T, T) {
        let two = T::from_int(2);
        (
            (T::one() + self.eps.clone()) / two.clone(),
            (T::one() - self.eps.clone()) / two,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Direct,
    Spectral,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Spectral => "spectral",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdvantageReport<T = f64> {
    pub eps: T,
    pub expectation_biased: T,
    pub expectation_uniform: T,
    /// `|E f(coins(eps)) - E f(coins(0))|`.
    pub advantage: T,
    pub method: Method,
}

/// Full `2^n` weighted sum with weight `p^#plus * q^#minus`.
pub fn expectation_direct<T: Scalar>(f: &TruthTable<T>, b: &BiasPoint<T>) -> T {
    let n = f.arity();
    let (p, q) = b.marginals();
    let plus_pow: Vec<T> = (0..=n).map(|k| p.powu(k)).collect();
    let minus_pow: Vec<T> = (0..=n).map(|k| q.powu(k)).collect();
    f.values()
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (m, v)| {
            let minus = m.count_ones() as usize;
            acc + v.clone() * plus_pow[n - minus].clone() * minus_pow[minus].clone()
        })
}

/// `sum_k W_k eps^k` by Horner's rule.
pub fn expectation_from_profile<T: Scalar>(profile: &LevelProfile<T>, eps: &T) -> T {
    profile
        .signed_sum_by_level
        .iter()
        .rev()
        .fold(T::zero(), |acc, w| acc * eps.clone() + w.clone())
}

pub fn expectation_spectral<T: Scalar>(spec: &FourierSpectrum<T>, b: &BiasPoint<T>) -> T {
    expectation_from_profile(&level_profile(spec), b.eps())
}

/// `d/d eps E f(coins(eps)) = sum_{k>=1} k W_k eps^(k-1)`.
pub fn derivative_from_profile<T: Scalar>(profile: &LevelProfile<T>, eps: &T) -> T {
    profile
        .signed_sum_by_level
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(T::zero(), |acc, (k, w)| {
            acc * eps.clone() + T::from_int(k as i64) * w.clone()
        })
}

pub fn bias_derivative<T: Scalar>(spec: &FourierSpectrum<T>, b: &BiasPoint<T>) -> T {
    derivative_from_profile(&level_profile(spec), b.eps())
}

fn report<T: Scalar>(eps: &T, biased: T, uniform: T, method: Method) -> AdvantageReport<T> {
    AdvantageReport {
        eps: eps.clone(),
        advantage: (biased.clone() - uniform.clone()).abs(),
        expectation_biased: biased,
        expectation_uniform: uniform,
        method,
    }
}

/// Advantage by both methods, `[direct, spectral]`; fails if they disagree
/// by more than the scalar's agreement tolerance.
pub fn advantage_reports<T: Scalar>(
    f: &TruthTable<T>,
    b: &BiasPoint<T>,
) -> Result<[AdvantageReport<T>; 2]> {
    let zero = BiasPoint::new(T::zero())?;
    let direct = report(
        b.eps(),
        expectation_direct(f, b),
        expectation_direct(f, &zero),
        Method::Direct,
    );
    let profile = level_profile(&wht_forward(f));
    let spectral = report(
        b.eps(),
        expectation_from_profile(&profile, b.eps()),
        profile.signed_sum(0),
        Method::Spectral,
    );
    let gap = (direct.expectation_biased.clone() - spectral.expectation_biased.clone())
        .abs()
        .to_f64_lossy();
    if gap > T::AGREEMENT_TOL {
        return Err(Error::NumericalFault(format!(
            "direct and spectral expectations differ by {gap:e} at eps={}",
            b.eps().to_f64_lossy()
        )));
    }
    Ok([direct, spectral])
}

pub fn advantage<T: Scalar>(f: &TruthTable<T>, b: &BiasPoint<T>) -> Result<AdvantageReport<T>> {
    let [direct, _] = advantage_reports(f, b)?;
    Ok(direct)
}

/// Smallest `k` with `(1+eps)^k (1-eps)^(n-k) >= 1`, evaluated in log space.
/// Near-ties within round-off resolve to the smaller `k`.
pub fn optimal_threshold(arity: usize, eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Domain(format!(
            "optimal threshold needs 0 < eps <= 1, got {eps}"
        )));
    }
    if eps == 1.0 {
        return Ok(arity);
    }
    let up = eps.ln_1p();
    let down = (-eps).ln_1p();
    let slack = 1e-12 * arity.max(1) as f64 * (up - down);
    Ok((0..=arity)
        .find(|&k| k as f64 * up + (arity - k) as f64 * down >= -slack)
        .unwrap_or(arity))
}

pub(crate) fn binomial(n: usize, k: usize) -> i64 {
    (0..k).fold(1i64, |acc, j| acc * (n - j) as i64 / (j + 1) as i64)
}

/// `sum_x |mu_eps(x) - mu_0(x)|`, i.e. twice the total-variation distance
/// between `coins(eps)` and `coins(0)`, from binomial weights.
pub fn twice_total_variation<T: Scalar>(arity: usize, b: &BiasPoint<T>) -> T {
    let (p, q) = b.marginals();
    let uniform = T::dyadic(arity);
    (0..=arity).fold(T::zero(), |acc, plus| {
        let point = p.powu(plus) * q.powu(arity - plus);
        acc + T::from_int(binomial(arity, plus)) * (point - uniform.clone()).abs()
    })
}

/// Brute-force maximum advantage over all `2^(2^n)` Boolean functions
/// (`n <= 4`). Returns the maximum and the first maximizing table.
pub fn max_advantage_exhaustive<T: Scalar>(
    arity: usize,
    b: &BiasPoint<T>,
) -> Result<(T, TruthTable<T>)> {
    if arity > 4 {
        return Err(Error::Domain(format!(
            "exhaustive search limited to arity 4, got {arity}"
        )));
    }
    let (p, q) = b.marginals();
    let uniform = T::dyadic(arity);
    let diff: Vec<T> = (0..1usize << arity)
        .map(|m| {
            let minus = m.count_ones() as usize;
            p.powu(arity - minus) * q.powu(minus) - uniform.clone()
        })
        .collect();
    let all = (1u64 << (1 << arity)) - 1;
    let mut best = (T::zero(), 0u64);
    for id in 0..=all {
        let total = diff.iter().enumerate().fold(T::zero(), |acc, (m, d)| {
            if id >> m & 1 == 0 {
                acc + d.clone()
            } else {
                acc - d.clone()
            }
        });
        let adv = total.abs();
        if adv > best.0 {
            // orient the witness so that it favours the biased side
            best = (adv, if total < T::zero() { id ^ all } else { id });
        }
    }
    let table = TruthTable::from_predicate(arity, |m| best.1 >> m & 1 == 0)?;
    Ok((best.0, table))
}

/// Coordinate-wise description of the restriction distribution: each
/// coordinate is fixed to `sign(eps0)` with probability `|eps0|`, free
/// otherwise, and free coordinates get bias `eps / (1 - |eps0|)`.
struct MixtureParams<T> {
    fix_prob: T,
    fix_sign: Sign,
    free_bias: BiasPoint<T>,
}

fn mixture_params<T: Scalar>(eps0: &T, eps: &T) -> Result<MixtureParams<T>> {
    let a = eps0.abs();
    if a >= T::one() {
        return Err(Error::InvalidBias(eps0.to_f64_lossy()));
    }
    let room = T::one() - a.clone();
    let slack = T::from_f64_lossy(T::AGREEMENT_TOL);
    if eps.abs() > room.clone() + slack {
        return Err(Error::Domain(format!(
            "eps={} outside [|eps0|-1, 1-|eps0|] for eps0={}",
            eps.to_f64_lossy(),
            eps0.to_f64_lossy()
        )));
    }
    let mut delta = eps.clone() / room;
    if delta.abs() > T::one() {
        delta = delta.signum();
    }
    Ok(MixtureParams {
        fix_prob: a,
        fix_sign: if *eps0 < T::zero() {
            Sign::Minus
        } else {
            Sign::Plus
        },
        free_bias: BiasPoint::new(delta)?,
    })
}

/// Contracts the table one variable at a time against the per-coordinate
/// mixture marginals.
fn mixture_by_contraction<T: Scalar>(f: &TruthTable<T>, mp: &MixtureParams<T>) -> T {
    let (p, q) = mp.free_bias.marginals();
    let free = T::one() - mp.fix_prob.clone();
    let (fp, fm) = match mp.fix_sign {
        Sign::Plus => (mp.fix_prob.clone(), T::zero()),
        Sign::Minus => (T::zero(), mp.fix_prob.clone()),
    };
    let w_plus = fp + free.clone() * p;
    let w_minus = fm + free * q;
    let mut vals = f.values().to_vec();
    while vals.len() > 1 {
        vals = vals
            .chunks(2)
            .map(|pair| w_plus.clone() * pair[0].clone() + w_minus.clone() * pair[1].clone())
            .collect();
    }
    vals.pop().expect("table has at least one entry")
}

/// `E_{rho ~ D(eps0)} E f|rho(coins(eps / (1-|eps0|)))`, which equals
/// `E f(coins(eps0 + eps))`. Both sides are computed and compared.
pub fn restricted_mixture_expectation<T: Scalar>(f: &TruthTable<T>, eps0: &T, eps: &T) -> Result<T> {
    let mp = mixture_params(eps0, eps)?;
    let mixture = mixture_by_contraction(f, &mp);
    let mut shifted = eps0.clone() + eps.clone();
    if shifted.abs() > T::one() {
        shifted = shifted.signum();
    }
    let direct = expectation_direct(f, &BiasPoint::new(shifted)?);
    let gap = (mixture.clone() - direct).abs().to_f64_lossy();
    if gap > T::AGREEMENT_TOL {
        return Err(Error::NumericalFault(format!(
            "restriction mixture differs from shifted expectation by {gap:e}"
        )));
    }
    Ok(mixture)
}

/// Mixture evaluated by enumerating every fixing pattern (`n <= 8`),
/// materializing each restriction.
pub fn restricted_mixture_exhaustive<T: Scalar>(f: &TruthTable<T>, eps0: &T, eps: &T) -> Result<T> {
    let n = f.arity();
    if n > 8 {
        return Err(Error::Domain(format!(
            "exhaustive mixture limited to arity 8, got {n}"
        )));
    }
    check_arity(n)?;
    let mp = mixture_params(eps0, eps)?;
    let free_prob = T::one() - mp.fix_prob.clone();
    let mut total = T::zero();
    for fixed in 0u32..1 << n {
        let k = fixed.count_ones() as usize;
        let weight = mp.fix_prob.powu(k) * free_prob.powu(n - k);
        if weight == T::zero() {
            continue;
        }
        let minus = if mp.fix_sign == Sign::Minus { fixed } else { 0 };
        let restricted = f.restrict(&Restriction::from_masks(fixed, minus))?;
        total = total + weight * expectation_direct(&restricted, &mp.free_bias);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn bias(e: f64) -> BiasPoint {
        BiasPoint::new(e).unwrap()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn bias_validation() {
        assert!(BiasPoint::new(1.0).is_ok());
        assert!(BiasPoint::new(-1.0).is_ok());
        assert!(BiasPoint::new(1.0 + 1e-12).is_err());
        assert!(BiasPoint::new(f64::NAN).is_err());
    }

    #[test]
    fn maj3_expectations() {
        let m: TruthTable = families::majority(3).unwrap();
        assert_eq!(expectation_direct(&m, &bias(1.0)), 1.0);
        assert_eq!(expectation_direct(&m, &bias(0.0)), 0.0);
        // 1.5 eps - 0.5 eps^3 at eps = 0.1
        assert!((expectation_direct(&m, &bias(0.1)) - 0.1495).abs() < 1e-15);
        assert!((expectation_spectral(&wht_forward(&m), &bias(0.1)) - 0.1495).abs() < 1e-15);
    }

    #[test]
    fn maj3_exact_rational() {
        let m: TruthTable<BigRational> = families::majority(3).unwrap();
        let b = BiasPoint::new(rat(1, 10)).unwrap();
        assert_eq!(expectation_direct(&m, &b), rat(1495, 10000));
        assert_eq!(expectation_spectral(&wht_forward(&m), &b), rat(1495, 10000));
    }

    #[test]
    fn parity_and_constant_spectral() {
        let p: TruthTable = families::parity(5).unwrap();
        assert_eq!(expectation_spectral(&wht_forward(&p), &bias(0.5)), 0.03125);
        let c: TruthTable = families::constant(4, Sign::Minus).unwrap();
        assert_eq!(expectation_spectral(&wht_forward(&c), &bias(0.3)), -1.0);
        assert!((expectation_direct(&c, &bias(0.3)) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn advantage_examples() {
        let t: TruthTable = families::threshold(3, 2).unwrap();
        assert!((advantage(&t, &bias(0.5)).unwrap().advantage - 0.6875).abs() < 1e-15);
        let r: TruthTable = families::random_boolean(6, 2).unwrap();
        assert_eq!(advantage(&r, &bias(0.0)).unwrap().advantage, 0.0);
        let d: TruthTable = families::dictator(3, 1).unwrap();
        for e in [-0.7, -0.1, 0.3, 1.0] {
            assert!((advantage(&d, &bias(e)).unwrap().advantage - e.abs()).abs() < 1e-15);
        }
        let [a, s] = advantage_reports(&t, &bias(0.25)).unwrap();
        assert_eq!(a.method, Method::Direct);
        assert_eq!(s.method, Method::Spectral);
    }

    #[test]
    fn optimal_threshold_examples() {
        assert_eq!(optimal_threshold(3, 0.5).unwrap(), 2);
        assert_eq!(optimal_threshold(1, 0.3).unwrap(), 1);
        assert_eq!(optimal_threshold(5, 1.0).unwrap(), 5);
        assert!(optimal_threshold(3, 0.0).is_err());
        assert!(optimal_threshold(3, -0.2).is_err());
        // the inequality checked directly
        for n in 1..30 {
            for e in [0.01, 0.1, 0.37, 0.9] {
                let k = optimal_threshold(n, e).unwrap();
                let val = |k: usize| (1.0 + e).powi(k as i32) * (1.0 - e).powi((n - k) as i32);
                assert!(val(k) >= 1.0 - 1e-12);
                if k > 0 {
                    assert!(val(k - 1) < 1.0);
                }
            }
        }
    }

    #[test]
    fn derivative_examples() {
        let m = wht_forward(&families::majority::<f64>(3).unwrap());
        assert_eq!(bias_derivative(&m, &bias(0.0)), 1.5);
        assert!((bias_derivative(&m, &bias(0.2)) - 1.44).abs() < 1e-15);
        let h = 1e-6;
        let fd = (expectation_spectral(&m, &bias(0.2 + h)) - expectation_spectral(&m, &bias(0.2 - h)))
            / (2.0 * h);
        assert!((fd - 1.44).abs() < 1e-6);
        let p = wht_forward(&families::parity::<f64>(4).unwrap());
        assert_eq!(bias_derivative(&p, &bias(0.0)), 0.0);
    }

    #[test]
    fn total_variation_matches_brute_force() {
        for n in 1..=3 {
            for e in [0.1, 0.3, 0.5] {
                let b = bias(e);
                let (best, _) = max_advantage_exhaustive(n, &b).unwrap();
                assert!((best - twice_total_variation(n, &b)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn optimal_distinguisher_n3_exact() {
        let b = BiasPoint::new(rat(1, 2)).unwrap();
        let (best, witness) = max_advantage_exhaustive(3, &b).unwrap();
        assert_eq!(best, rat(11, 16));
        assert_eq!(witness, families::threshold(3, 2).unwrap());
        assert_eq!(twice_total_variation(3, &b), rat(11, 16));
    }

    #[test]
    fn mixture_dictator_hand_computed() {
        let d: TruthTable = families::dictator(1, 1).unwrap();
        let v = restricted_mixture_expectation(&d, &0.5, &0.2).unwrap();
        assert!((v - 0.7).abs() < 1e-15);
        let ex = restricted_mixture_exhaustive(&d, &0.5, &0.2).unwrap();
        assert!((ex - 0.7).abs() < 1e-15);
    }

    #[test]
    fn mixture_maj3_and_zero_shift() {
        let m: TruthTable = families::majority(3).unwrap();
        let ex = restricted_mixture_exhaustive(&m, &0.3, &0.1).unwrap();
        assert!((ex - expectation_direct(&m, &bias(0.4))).abs() < 1e-12);
        let r: TruthTable = families::random_bounded(5, 9).unwrap();
        let v = restricted_mixture_expectation(&r, &0.0, &-0.35).unwrap();
        assert!((v - expectation_direct(&r, &bias(-0.35))).abs() < 1e-15);
    }

    #[test]
    fn mixture_exact_in_rationals() {
        let f: TruthTable<BigRational> = families::random_bounded(4, 3).unwrap();
        let (e0, e) = (rat(-2, 5), rat(3, 10));
        let a = restricted_mixture_exhaustive(&f, &e0, &e).unwrap();
        let b = restricted_mixture_expectation(&f, &e0, &e).unwrap();
        let c = expectation_direct(&f, &BiasPoint::new(rat(-1, 10)).unwrap());
        assert_eq!(a, c);
        assert_eq!(b, c);
    }

    #[test]
    fn mixture_rejects_out_of_range() {
        let d: TruthTable = families::dictator(1, 1).unwrap();
        assert!(restricted_mixture_expectation(&d, &1.0, &0.0).is_err());
        assert!(restricted_mixture_expectation(&d, &0.5, &0.6).is_err());
        assert!(restricted_mixture_exhaustive(&families::parity::<f64>(9).unwrap(), &0.1, &0.1).is_err());
    }
}
