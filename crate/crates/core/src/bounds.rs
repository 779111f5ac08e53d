//! Executable versions of the inequalities relating small-bias advantage,
//! level-1 Fourier mass and restriction closure.
//!
//! Every checker returns [`BoundReport`]s; `holds` means
//! `lhs <= rhs + tolerance`. Throughout, `delta(eps)` is
//! `E f(coins_eps) - E f(coins_0)`.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::classes::{class_stats, FunctionClass};
use crate::coin::{
    advantage, binomial, derivative_from_profile, expectation_direct, max_advantage_exhaustive,
    optimal_threshold, twice_total_variation, BiasPoint,
};
use crate::error::{Error, Result};
use crate::families;
use crate::keyed::derive_seed;
use crate::robp::RobpProgram;
use crate::scalar::Real;
use crate::spectrum::{level_profile, wht_forward, AnalyzedFunction, LevelProfile};
use crate::table::TruthTable;

/// Relative slack on range preconditions, so grid points computed as
/// `k / sqrt(n)` are not rejected for round-off.
const RANGE_SLACK: f64 = 1e-12;

/// Points in the hypothesis grid of [`check_improved_coin`].
pub const HYPOTHESIS_GRID_POINTS: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Param {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub bound_id: String,
    pub params: Vec<Param>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
    pub tolerance: f64,
    pub witness: Option<String>,
    pub note: Option<String>,
}

impl BoundReport {
    pub fn new(bound_id: &str, params: &[(&str, f64)], lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let margin = rhs - lhs;
        BoundReport {
            bound_id: bound_id.to_string(),
            params: params
                .iter()
                .map(|(name, value)| Param {
                    name: name.to_string(),
                    value: *value,
                })
                .collect(),
            lhs,
            rhs,
            margin,
            holds: margin >= -tolerance,
            tolerance,
            witness: None,
            note: None,
        }
    }

    pub fn with_witness(mut self, witness: impl Into<String>) -> Self {
        self.witness = Some(witness.into());
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Re-evaluates `holds` under a different tolerance.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.holds = self.margin >= -tolerance;
        self
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|p| p.name == name).map(|p| p.value)
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bound_id)?;
        for p in &self.params {
            write!(f, " {}={}", p.name, p.value)?;
        }
        write!(
            f,
            ": lhs={} rhs={} margin={} {}",
            self.lhs,
            self.rhs,
            self.margin,
            if self.holds { "holds" } else { "VIOLATED" }
        )
    }
}

/// A class-wide check: the aggregate is the worst member.
#[derive(Clone, Debug, Serialize)]
pub struct ClassCheck {
    pub aggregate: BoundReport,
    pub members: Vec<BoundReport>,
}

fn f64_of<T: Real>(v: T) -> f64 {
    v.to_f64_lossy()
}

fn tolerance<T: Real>() -> f64 {
    T::REPORT_TOL
}

fn delta<T: Real>(f: &TruthTable<T>, eps: T) -> Result<T> {
    let biased = expectation_direct(f, &BiasPoint::new(eps)?);
    let uniform = expectation_direct(f, &BiasPoint::new(T::zero())?);
    Ok(biased - uniform)
}

/// `|eps|^2 * n * scale <= 1` up to round-off.
fn within_range<T: Real>(eps: T, arity: usize, scale: f64) -> bool {
    let e = f64_of(eps);
    e * e * arity as f64 * scale <= 1.0 + RANGE_SLACK
}

fn require_nonzero<T: Real>(eps: T) -> Result<()> {
    if eps.is_zero() {
        return Err(Error::domain("eps must be nonzero"));
    }
    if !eps.is_finite() || eps.abs() > T::one() {
        return Err(Error::InvalidBias(f64_of(eps)));
    }
    Ok(())
}

fn sum_singletons<T: Real>(profile: &LevelProfile<T>) -> T {
    profile.signed_sum(1)
}

/// `|(1/eps) delta(eps) - sum_i f̂({i})| = |sum_{k>=2} W_k eps^(k-1)|`,
/// with `W_k` the signed level sums.
pub fn residual_from_profile<T: Real>(profile: &LevelProfile<T>, eps: T) -> Result<T> {
    require_nonzero(eps)?;
    let n = profile.arity();
    let mut acc = T::zero();
    for k in (2..=n).rev() {
        acc = acc * eps + profile.signed_sum(k);
    }
    Ok((acc * eps).abs())
}

pub fn residual<T: Real>(f: &TruthTable<T>, eps: T) -> Result<T> {
    residual_from_profile(&level_profile(&wht_forward(f)), eps)
}

/// The rate bound in its stated form `|eps| n sqrt(Var)` and the sharper
/// Cauchy-Schwarz intermediate
/// `(1/|eps|) sqrt(sum_{k>=2} C(n,k) eps^(2k)) sqrt(sum_{|S|>=2} f̂(S)^2)`.
pub fn check_rate_variance<T: Real>(a: &AnalyzedFunction<T>, eps: T) -> Result<[BoundReport; 2]> {
    let n = a.arity();
    require_nonzero(eps)?;
    if !within_range(eps, n, 1.0) {
        return Err(Error::Domain(format!(
            "variance rate bound needs |eps| <= 1/sqrt(n) = {}, got {}",
            1.0 / (n as f64).sqrt(),
            f64_of(eps)
        )));
    }
    let lhs = residual_from_profile(&a.profile, eps)?;
    let abs_eps = eps.abs();
    let nn = T::from_int(n as i64);
    let stated = abs_eps * nn * a.profile.variance.max(T::zero()).sqrt();

    let eps2 = eps * eps;
    let mut moment = T::zero();
    for k in 2..=n {
        moment = moment + T::from_int(binomial(n, k)) * eps2.powu(k);
    }
    let high_weight = (2..=n).fold(T::zero(), |acc, k| acc + a.profile.weight(k));
    let sharp = moment.sqrt() * high_weight.max(T::zero()).sqrt() / abs_eps;

    let params = [("n", n as f64), ("eps", f64_of(eps))];
    let tol = tolerance::<T>();
    Ok([
        BoundReport::new("rate_variance", &params, f64_of(lhs), f64_of(stated), tol)
            .with_witness(a.label.clone()),
        BoundReport::new("rate_variance_sharp", &params, f64_of(lhs), f64_of(sharp), tol)
            .with_witness(a.label.clone()),
    ])
}

/// `residual <= 2 |eps| n sqrt(max_{k>=2} sum_{|S|=k} f̂(S)^2)` for
/// `|eps| <= 1/(2 sqrt n)`.
pub fn check_rate_maxlevel<T: Real>(a: &AnalyzedFunction<T>, eps: T) -> Result<BoundReport> {
    let n = a.arity();
    require_nonzero(eps)?;
    if !within_range(eps, n, 4.0) {
        return Err(Error::Domain(format!(
            "max-level rate bound needs |eps| <= 1/(2 sqrt(n)) = {}, got {}",
            0.5 / (n as f64).sqrt(),
            f64_of(eps)
        )));
    }
    let lhs = residual_from_profile(&a.profile, eps)?;
    let max_weight = (2..=n).fold(T::zero(), |acc, k| acc.max(a.profile.weight(k)));
    let rhs = T::from_int(2) * eps.abs() * T::from_int(n as i64) * max_weight.sqrt();
    Ok(BoundReport::new(
        "rate_maxlevel",
        &[("n", n as f64), ("eps", f64_of(eps))],
        f64_of(lhs),
        f64_of(rhs),
        tolerance::<T>(),
    )
    .with_witness(a.label.clone()))
}

/// For non-negative singleton coefficients:
/// `L1^1(f) <= min over grid of |delta(eps)/eps| + |eps| n`.
/// Grid points outside `0 < |eps| <= 1/sqrt(n)` are skipped.
pub fn check_nonneg_level1<T: Real>(a: &AnalyzedFunction<T>, eps_grid: &[T]) -> Result<BoundReport> {
    let n = a.arity();
    if let Some((i, c)) = a
        .spectrum
        .singletons()
        .into_iter()
        .enumerate()
        .find(|(_, c)| f64_of(*c) < -T::AGREEMENT_TOL)
    {
        return Err(Error::Precondition(format!(
            "singleton coefficient of x{} is negative ({})",
            i + 1,
            f64_of(c)
        )));
    }
    let mut best: Option<(T, T)> = None;
    for &eps in eps_grid {
        if eps.is_zero() || !within_range(eps, n, 1.0) {
            continue;
        }
        let value = (delta(&a.table, eps)? / eps).abs() + eps.abs() * T::from_int(n as i64);
        if best.is_none_or(|(_, b)| value < b) {
            best = Some((eps, value));
        }
    }
    let (eps, rhs) = best.ok_or_else(|| {
        Error::domain("no grid point with 0 < |eps| <= 1/sqrt(n) for the level-1 bound")
    })?;
    Ok(BoundReport::new(
        "nonneg_level1",
        &[("n", n as f64), ("eps", f64_of(eps))],
        f64_of(a.profile.l1(1)),
        f64_of(rhs),
        tolerance::<T>(),
    )
    .with_witness(a.label.clone())
    .with_note("rhs minimized over the supplied grid; eps is the minimizer"))
}

/// `|delta(eps)| <= |eps| (t + |eps| n)` with `t = |sum_i f̂({i})|`, for
/// `|eps| <= 1/sqrt(n)`. When additionally `|eps| <= t/n` the coarser form
/// `|delta(eps)| <= 2 t |eps|` is reported too.
pub fn check_small_eps_coin<T: Real>(a: &AnalyzedFunction<T>, eps: T) -> Result<Vec<BoundReport>> {
    let n = a.arity();
    if !within_range(eps, n, 1.0) {
        return Err(Error::Domain(format!(
            "small-bias coin bound needs |eps| <= 1/sqrt(n) = {}, got {}",
            1.0 / (n as f64).sqrt(),
            f64_of(eps)
        )));
    }
    let t = sum_singletons(&a.profile).abs();
    let lhs = delta(&a.table, eps)?.abs();
    let abs_eps = eps.abs();
    let nn = T::from_int(n as i64);
    let params = [("n", n as f64), ("eps", f64_of(eps)), ("t", f64_of(t))];
    let tol = tolerance::<T>();
    let mut out = vec![BoundReport::new(
        "small_eps_coin",
        &params,
        f64_of(lhs),
        f64_of(abs_eps * (t + abs_eps * nn)),
        tol,
    )
    .with_witness(a.label.clone())];
    if abs_eps * nn <= t {
        out.push(
            BoundReport::new(
                "small_eps_coin_coarse",
                &params,
                f64_of(lhs),
                f64_of(T::from_int(2) * t * abs_eps),
                tol,
            )
            .with_witness(a.label.clone()),
        );
    }
    Ok(out)
}

/// `HYPOTHESIS_GRID_POINTS` log-spaced magnitudes in `[eps0, 1]`.
pub fn hypothesis_grid(eps0: f64) -> Vec<f64> {
    let k = HYPOTHESIS_GRID_POINTS;
    let lo = eps0.ln();
    (0..k)
        .map(|i| {
            if i + 1 == k {
                1.0
            } else {
                (lo * (1.0 - i as f64 / (k - 1) as f64)).exp()
            }
        })
        .collect()
}

/// Given the hypothesis `|delta(e)| <= |e| B` for `|e| >= eps0` (checked on
/// a finite grid of both signs first), the conclusion
/// `|delta(eps)| <= |eps| (B + n (|eps| + eps0))` for `|eps| < eps0`, plus the
/// composite `|delta(eps)| <= |eps| (B + 2 n eps0)` valid for all `|eps| <= 1`.
///
/// A failed hypothesis is reported as [`Error::HypothesisFailed`], not as a
/// violated bound.
pub fn check_improved_coin<T: Real>(
    a: &AnalyzedFunction<T>,
    b: T,
    eps0: T,
    eps: T,
) -> Result<Vec<BoundReport>> {
    let n = a.arity();
    if !(b >= T::zero()) {
        return Err(Error::domain("B must be non-negative"));
    }
    if !(eps0 > T::zero()) || !within_range(eps0, n, 1.0) {
        return Err(Error::Domain(format!(
            "eps0 must lie in (0, 1/sqrt(n)] = (0, {}], got {}",
            1.0 / (n as f64).sqrt(),
            f64_of(eps0)
        )));
    }
    if !eps.is_finite() || eps.abs() > T::one() {
        return Err(Error::InvalidBias(f64_of(eps)));
    }
    let tol = tolerance::<T>();
    for mag in hypothesis_grid(f64_of(eps0)) {
        for e in [T::from_f64_lossy(mag), T::from_f64_lossy(-mag)] {
            let lhs = delta(&a.table, e)?.abs();
            let rhs = e.abs() * b;
            if f64_of(lhs) > f64_of(rhs) + tol {
                return Err(Error::HypothesisFailed {
                    eps: f64_of(e),
                    lhs: f64_of(lhs),
                    rhs: f64_of(rhs),
                });
            }
        }
    }

    let lhs = f64_of(delta(&a.table, eps)?.abs());
    let abs_eps = eps.abs();
    let nn = T::from_int(n as i64);
    let params = [
        ("n", n as f64),
        ("eps", f64_of(eps)),
        ("eps0", f64_of(eps0)),
        ("B", f64_of(b)),
    ];
    let note = format!("hypothesis checked on {HYPOTHESIS_GRID_POINTS} log-spaced |eps| in [eps0, 1], both signs");
    let mut out = Vec::new();
    if abs_eps < eps0 {
        out.push(
            BoundReport::new(
                "improved_coin",
                &params,
                lhs,
                f64_of(abs_eps * (b + nn * (abs_eps + eps0))),
                tol,
            )
            .with_witness(a.label.clone())
            .with_note(note.clone()),
        );
    }
    out.push(
        BoundReport::new(
            "improved_coin_composite",
            &params,
            lhs,
            f64_of(abs_eps * (b + T::from_int(2) * nn * eps0)),
            tol,
        )
        .with_witness(a.label.clone())
        .with_note(note),
    );
    Ok(out)
}

fn require_restriction_closed<T: Real>(c: &FunctionClass<T>) -> Result<()> {
    if !c.flags().restriction {
        return Err(Error::Precondition(
            "class is not closed under restriction".into(),
        ));
    }
    Ok(())
}

fn class_check(id: &str, members: Vec<BoundReport>, tol: f64) -> ClassCheck {
    let worst = members
        .iter()
        .enumerate()
        .min_by(|(_, x), (_, y)| x.margin.total_cmp(&y.margin))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let w = &members[worst];
    let params: Vec<(&str, f64)> = w.params.iter().map(|p| (p.name.as_str(), p.value)).collect();
    let aggregate = BoundReport::new(id, &params, w.lhs, w.rhs, tol)
        .with_witness(w.witness.clone().unwrap_or_else(|| format!("member {worst}")))
        .with_note(format!("worst of {} members", members.len()));
    ClassCheck { aggregate, members }
}

/// For a restriction-closed class with `t = sup |sum_i f̂({i})|`:
/// `|delta(eps)| <= ln(1/(1-|eps|)) t` for every member and `|eps| < 1`.
pub fn check_restriction_coin<T: Real>(c: &FunctionClass<T>, eps_grid: &[T]) -> Result<Vec<ClassCheck>> {
    require_restriction_closed(c)?;
    if let Some(e) = eps_grid.iter().find(|e| !(e.abs() < T::one())) {
        return Err(Error::Domain(format!(
            "restriction coin bound needs |eps| < 1, got {}",
            f64_of(*e)
        )));
    }
    let t = class_stats(c, &[])?.sup_abs_signed_level1.value;
    let tol = tolerance::<T>();
    eps_grid
        .iter()
        .map(|&eps| {
            let rhs = -(T::one() - eps.abs()).ln() * t;
            let members = c
                .members()
                .par_iter()
                .enumerate()
                .map(|(i, m)| {
                    Ok(BoundReport::new(
                        "restriction_coin",
                        &[("eps", f64_of(eps)), ("t", f64_of(t))],
                        f64_of(delta(&m.table, eps)?.abs()),
                        f64_of(rhs),
                        tol,
                    )
                    .with_witness(format!("member {i}: {}", m.derivation)))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(class_check("restriction_coin", members, tol))
        })
        .collect()
}

/// For a restriction-closed class:
/// `|d/de E f(coins_e)| at eps0 <= t / (1 - |eps0|)` for every member.
pub fn check_derivative_bound<T: Real>(c: &FunctionClass<T>, eps0_grid: &[T]) -> Result<Vec<ClassCheck>> {
    require_restriction_closed(c)?;
    if let Some(e) = eps0_grid.iter().find(|e| !(e.abs() < T::one())) {
        return Err(Error::Domain(format!(
            "derivative bound needs |eps0| < 1, got {}",
            f64_of(*e)
        )));
    }
    let profiles: Vec<LevelProfile<T>> = c
        .members()
        .par_iter()
        .map(|m| level_profile(&wht_forward(&m.table)))
        .collect();
    let t = profiles
        .iter()
        .fold(T::zero(), |acc, p| acc.max(sum_singletons(p).abs()));
    let tol = tolerance::<T>();
    Ok(eps0_grid
        .iter()
        .map(|&eps0| {
            let rhs = t / (T::one() - eps0.abs());
            let members = profiles
                .iter()
                .zip(c.members())
                .enumerate()
                .map(|(i, (p, m))| {
                    BoundReport::new(
                        "derivative_bound",
                        &[("eps0", f64_of(eps0)), ("t", f64_of(t))],
                        f64_of(derivative_from_profile(p, &eps0).abs()),
                        f64_of(rhs),
                        tol,
                    )
                    .with_witness(format!("member {i}: {}", m.derivation))
                })
                .collect();
            class_check("derivative_bound", members, tol)
        })
        .collect())
}

/// The coin bound for width-`w` read-once branching programs and
/// the level-1 bound it yields.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BranchingProgramBound {
    /// `eps r^(w-2) + (n + r^(w-2)) (w-2) (1/(2-eps))^(r-1)`.
    pub coin: f64,
    /// `r^(w-2) + (1/eps) (n + r^(w-2)) (w-2) (1/(2-eps))^(r-1) + eps n`.
    pub level1: f64,
}

pub fn branching_program_bound(n: usize, w: u32, r: u32, eps: f64) -> Result<BranchingProgramBound> {
    if r < 1 || w < 2 || !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!(
            "need r >= 1, w >= 2, 0 < eps < 1; got r={r}, w={w}, eps={eps}"
        )));
    }
    let rw = (r as f64).powi(w as i32 - 2);
    let tail = (n as f64 + rw) * (w - 2) as f64 * (1.0 / (2.0 - eps)).powi(r as i32 - 1);
    Ok(BranchingProgramBound {
        coin: eps * rw + tail,
        level1: rw + tail / eps + eps * n as f64,
    })
}

/// `ceil(4 log_base(n)) + 1`.
pub fn robp_rounds(n: usize, log_base: f64) -> Result<u32> {
    if n < 1 || !(log_base > 1.0) {
        return Err(Error::domain("need n >= 1 and log base > 1"));
    }
    Ok((4.0 * (n as f64).ln() / log_base.ln()).ceil() as u32 + 1)
}

/// Exact `L1^1` of seeded random width-`w` programs on `n` variables against
/// the level-1 recipe at `eps = 1/n`, `r = ceil(4 log_base n) + 1`.
/// Sample `i` uses the generator seeded by `derive_seed(seed, i)`.
pub fn check_robp_level1(
    n: usize,
    w: u32,
    samples: usize,
    seed: u64,
    log_base: f64,
) -> Result<Vec<BoundReport>> {
    if n > 20 {
        return Err(Error::Domain(format!(
            "branching-program check limited to n <= 20, got {n}"
        )));
    }
    if n < 2 {
        return Err(Error::domain("branching-program check needs n >= 2"));
    }
    let r = robp_rounds(n, log_base)?;
    let recipe = branching_program_bound(n, w, r, 1.0 / n as f64)?.level1;
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
            let program = RobpProgram::random(n, w, &mut rng)?;
            let table: TruthTable<f64> = program.to_table()?;
            let l1 = level_profile(&wht_forward(&table)).l1(1);
            Ok(BoundReport::new(
                "robp_level1",
                &[
                    ("n", n as f64),
                    ("w", w as f64),
                    ("r", r as f64),
                    ("eps", 1.0 / n as f64),
                ],
                l1,
                recipe,
                <f64 as crate::scalar::Scalar>::REPORT_TOL,
            )
            .with_witness(format!("sample {i} (seed {seed})"))
            .with_note("concrete recipe value; asymptotic constants are not checkable"))
        })
        .collect()
}

/// Brute-force maximum advantage over all Boolean functions on `n <= 4`
/// bits versus the best threshold function and twice the total variation
/// between the biased and uniform product measures. Each report's `lhs` is
/// the absolute gap, so `holds` means equality within tolerance.
pub fn check_optimal_distinguisher<T: Real>(n: usize, eps: T) -> Result<Vec<BoundReport>> {
    if n > 4 {
        return Err(Error::Domain(format!(
            "exhaustive distinguisher search limited to n <= 4, got {n}"
        )));
    }
    if !(eps > T::zero()) {
        return Err(Error::domain("optimal distinguisher needs eps > 0"));
    }
    let b = BiasPoint::new(eps)?;
    let (best, _) = max_advantage_exhaustive(n, &b)?;
    let k = optimal_threshold(n, f64_of(eps))?;
    let thr: TruthTable<T> = families::threshold(n, k)?;
    let thr_adv = advantage(&thr, &b)?.advantage;
    let tv2 = twice_total_variation(n, &b);
    let params = [
        ("n", n as f64),
        ("eps", f64_of(eps)),
        ("k", k as f64),
        ("max_advantage", f64_of(best)),
    ];
    let tol = tolerance::<T>();
    let witness = format!("thr:{n}:{k}");
    Ok(vec![
        BoundReport::new(
            "optimal_threshold_gap",
            &params,
            f64_of((best - thr_adv).abs()),
            0.0,
            tol,
        )
        .with_witness(witness.clone()),
        BoundReport::new(
            "optimal_total_variation_gap",
            &params,
            f64_of((best - tv2).abs()),
            0.0,
            tol,
        )
        .with_witness(witness),
    ])
}
