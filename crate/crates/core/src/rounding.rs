//! Randomized rounding of bounded functions, Hoeffding tails for sums of
//! Fourier coefficients, and the scaled-majority experiment showing level-1
//! control without level-3 control.

use rayon::prelude::*;
use serde::Serialize;

use crate::classes::{closure_sample, ClosureFlags};
use crate::coin::binomial;
use crate::error::{Error, Result};
use crate::families;
use crate::keyed::{derive_seed, keyed_words, unit_interval};
use crate::scalar::Scalar;
use crate::spectrum::{level_profile, wht_forward};
use crate::table::TruthTable;

/// Default confidence for the Hoeffding allowance.
pub const DEFAULT_CONFIDENCE: f64 = 0.01;

/// Scales within this of 1 are treated as exactly 1.
pub const SCALE_SNAP: f64 = 1e-7;

/// A set of subsets of `[m]`, as bitmasks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SubsetFamily {
    arity: usize,
    masks: Vec<usize>,
}

impl SubsetFamily {
    /// Duplicates are dropped, first occurrence wins.
    pub fn new(arity: usize, masks: impl IntoIterator<Item = usize>) -> Result<Self> {
        crate::table::check_arity(arity)?;
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for m in masks {
            if m >> arity != 0 {
                return Err(Error::Domain(format!(
                    "subset mask {m:#x} out of range for arity {arity}"
                )));
            }
            if seen.insert(m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            return Err(Error::domain("subset family must be non-empty"));
        }
        Ok(SubsetFamily { arity, masks: out })
    }

    /// All subsets of size `k`.
    pub fn level(arity: usize, k: usize) -> Result<Self> {
        Self::new(
            arity,
            (0..1usize << arity).filter(|m| m.count_ones() as usize == k),
        )
    }

    pub fn singletons(arity: usize) -> Result<Self> {
        Self::level(arity, 1)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn masks(&self) -> &[usize] {
        &self.masks
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    /// `c(x) = sum_{S in T} chi_S(x)` at every point.
    pub fn character_sums(&self) -> Vec<i64> {
        (0..1usize << self.arity)
            .map(|x| {
                self.masks
                    .iter()
                    .map(|&s| if (s & x).count_ones() % 2 == 0 { 1 } else { -1 })
                    .sum()
            })
            .collect()
    }
}

/// Independently at each point, `+1` with probability `(1 + g(x))/2`.
/// Point `x` uses the keyed word `(seed, x)`, so the result does not depend
/// on evaluation order.
pub fn round_randomized<T: Scalar>(g: &TruthTable<T>, seed: u64) -> Result<TruthTable<T>> {
    let words = keyed_words(seed, g.len());
    TruthTable::from_predicate(g.arity(), |x| {
        let p = (1.0 + g.value(x).to_f64_lossy()) / 2.0;
        unit_interval(words[x]) < p
    })
}

/// `(1/2^m) sum_x h(x) c(x)` with `c` the character sums of the family,
/// i.e. `sum_{S in T} ĥ(S)`.
fn family_sum(h: impl Iterator<Item = f64>, sums: &[i64]) -> f64 {
    let total: f64 = h.zip(sums).map(|(v, &c)| v * c as f64).sum();
    total / sums.len() as f64
}

fn check_family<T: Scalar>(g: &TruthTable<T>, t: &SubsetFamily) -> Result<()> {
    if g.arity() != t.arity() {
        return Err(Error::LengthMismatch {
            expected: 1 << t.arity(),
            actual: g.len(),
        });
    }
    Ok(())
}

/// `|sum_{S in T} (rounded^(S) - g^(S))|`.
pub fn fourier_sum_deviation<T: Scalar>(
    g: &TruthTable<T>,
    rounded: &TruthTable<T>,
    t: &SubsetFamily,
) -> Result<f64> {
    check_family(g, t)?;
    check_family(rounded, t)?;
    let (before, after) = (wht_forward(g), wht_forward(rounded));
    let total = t.masks().iter().fold(T::zero(), |acc, &s| {
        acc + after.coefficient(s).clone() - before.coefficient(s).clone()
    });
    Ok(total.abs().to_f64_lossy())
}

/// `min(1, 2 exp(-2^(m-1) eps^2 / |T|))`.
pub fn hoeffding_tail(m: usize, family_size: usize, eps: f64) -> Result<f64> {
    if family_size == 0 || !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::domain("need |T| >= 1 and eps > 0"));
    }
    let exponent = 2f64.powi(m as i32 - 1) * eps * eps / family_size as f64;
    Ok((2.0 * (-exponent).exp()).min(1.0))
}

/// Smallest deviation whose Hoeffding tail is at most `delta`:
/// `sqrt(|T| ln(2/delta) / 2^(m-1))`.
pub fn hoeffding_threshold(m: usize, family_size: usize, delta: f64) -> Result<f64> {
    if family_size == 0 || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain("need |T| >= 1 and 0 < delta < 1"));
    }
    Ok((family_size as f64 * (2.0 / delta).ln() / 2f64.powi(m as i32 - 1)).sqrt())
}

/// Exact `(E c, E c^2)` of the character sum `c(x) = sum_{S in T} chi_S(x)`
/// under the uniform distribution. Orthonormality makes `E c^2 = |T|`.
pub fn character_sum_moments(t: &SubsetFamily) -> (f64, f64) {
    let sums = t.character_sums();
    let first: i64 = sums.iter().sum();
    let second: i128 = sums.iter().map(|&c| (c as i128) * (c as i128)).sum();
    let len = sums.len() as f64;
    (first as f64 / len, second as f64 / len)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConcentrationRow {
    pub eps: f64,
    pub exceed_count: usize,
    pub fraction: f64,
    pub hoeffding: f64,
    /// `hoeffding + 3 sqrt(hoeffding (1 - hoeffding) / trials) + 1/trials`.
    pub limit: f64,
    pub within: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub arity: usize,
    pub family_size: usize,
    pub trials: usize,
    pub seed: u64,
    pub rows: Vec<ConcentrationRow>,
    #[serde(skip)]
    pub deviations: Vec<f64>,
}

impl ConcentrationReport {
    pub fn all_within(&self) -> bool {
        self.rows.iter().all(|r| r.within)
    }
}

/// Rounds `g` once per trial (trial `i` uses `derive_seed(seed, i)`) and
/// tabulates how often the family deviation reaches each `eps`.
pub fn empirical_concentration<T: Scalar>(
    g: &TruthTable<T>,
    t: &SubsetFamily,
    trials: usize,
    seed: u64,
    eps_list: &[f64],
) -> Result<ConcentrationReport> {
    check_family(g, t)?;
    if trials == 0 {
        return Err(Error::domain("need at least one trial"));
    }
    let sums = t.character_sums();
    let base: Vec<f64> = g.values().iter().map(|v| v.to_f64_lossy()).collect();
    let deviations: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let r = round_randomized(g, derive_seed(seed, i as u64))?;
            Ok(family_sum(
                r.values().iter().zip(&base).map(|(a, b)| a.to_f64_lossy() - b),
                &sums,
            )
            .abs())
        })
        .collect::<Result<_>>()?;
    let rows = eps_list
        .iter()
        .map(|&eps| {
            let hoeffding = hoeffding_tail(g.arity(), t.len(), eps)?;
            let exceed_count = deviations.iter().filter(|&&d| d >= eps).count();
            let fraction = exceed_count as f64 / trials as f64;
            let limit = hoeffding
                + 3.0 * (hoeffding * (1.0 - hoeffding) / trials as f64).sqrt()
                + 1.0 / trials as f64;
            Ok(ConcentrationRow {
                eps,
                exceed_count,
                fraction,
                hoeffding,
                limit,
                within: fraction <= limit,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ConcentrationReport {
        arity: g.arity(),
        family_size: t.len(),
        trials,
        seed,
        rows,
        deviations,
    })
}

/// `sum_i f̂({i}) = 2^-k sum_z f(z) (k - 2 |z|)`, without a full transform.
pub fn singleton_sum<T: Scalar>(f: &TruthTable<T>) -> f64 {
    let k = f.arity() as i64;
    let total: f64 = f
        .values()
        .iter()
        .enumerate()
        .map(|(z, v)| v.to_f64_lossy() * (k - 2 * z.count_ones() as i64) as f64)
        .sum();
    total / f.len() as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub b: f64,
    pub seed: u64,
    pub samples: usize,
    /// Deviations at which Hoeffding predictions are reported.
    pub deviations: Vec<f64>,
    pub confidence: f64,
}

impl ExperimentConfig {
    pub fn new(n: usize, b: f64, seed: u64, samples: usize) -> Self {
        ExperimentConfig {
            n,
            b,
            seed,
            samples,
            deviations: vec![0.1, 0.2, 0.3, 0.4],
            confidence: DEFAULT_CONFIDENCE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HoeffdingPrediction {
    pub eps: f64,
    pub tail: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleRecord {
    pub index: usize,
    pub derivation: String,
    pub arity: usize,
    pub singleton_sum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundingExperimentReport {
    pub n: usize,
    #[serde(rename = "B")]
    pub b: f64,
    pub seed: u64,
    pub samples: usize,
    pub scale: f64,
    pub warnings: Vec<String>,
    /// Largest `|sum_i f̂({i})|` over the sampled closure members.
    pub l1_level1_max_observed: f64,
    pub level1_target: f64,
    pub level1_violations: usize,
    pub l1_level3_of_majority: f64,
    /// `scale * L1^3(maj_n)`.
    pub l1_level3_of_scaled_majority: f64,
    pub l1_level3_of_rounded: f64,
    /// `|sum_{|S|=3} (rounded^(S) - g^(S))|`.
    pub level3_deviation: f64,
    pub confidence: f64,
    /// Hoeffding deviation allowance at the configured confidence.
    pub hoeffding_allowance: f64,
    /// The loose allowance `n` from the existence argument.
    pub coarse_allowance: f64,
    pub level3_lower_target: f64,
    pub level3_ok: bool,
    pub hoeffding_predictions: Vec<HoeffdingPrediction>,
    pub violations: usize,
    #[serde(skip)]
    pub sample_records: Vec<SampleRecord>,
}

/// Scales `maj_n` by `B / sqrt(n)`, rounds it, samples its closure under
/// restriction and both negations, and measures level-1 and level-3 mass.
pub fn counterexample_experiment(cfg: &ExperimentConfig) -> Result<RoundingExperimentReport> {
    let n = cfg.n;
    if n.is_multiple_of(2) {
        return Err(Error::EvenMajority(n));
    }
    let root = (n as f64).sqrt();
    if !(cfg.b > 0.0) {
        return Err(Error::domain("B must be positive"));
    }
    let mut scale = cfg.b / root;
    // B typed to ~8 digits should still hit the identity path at B = sqrt(n)
    if (scale - 1.0).abs() < SCALE_SNAP {
        scale = 1.0;
    }
    if scale > 1.0 {
        return Err(Error::Domain(format!(
            "B = {} exceeds sqrt(n) = {root}, the scaled function would leave [-1, 1]",
            cfg.b
        )));
    }
    let mut warnings = Vec::new();
    let low = (n as f64).log2().sqrt() + 2.0;
    if cfg.b < low {
        warnings.push(format!(
            "B = {} is below sqrt(log2 n) + 2 = {low:.6}; outside the asymptotic regime",
            cfg.b
        ));
    }

    let maj: TruthTable<f64> = families::majority(n)?;
    let l1_level3_of_majority = level_profile(&wht_forward(&maj)).l1(3);
    let g = maj.scale(&scale)?;
    let rounded = round_randomized(&g, cfg.seed)?;
    let l1_level3_of_rounded = level_profile(&wht_forward(&rounded)).l1(3);

    let family_size = binomial(n, 3) as usize;
    let (level3_deviation, hoeffding_allowance) = if n >= 3 {
        let t = SubsetFamily::level(n, 3)?;
        (
            fourier_sum_deviation(&g, &rounded, &t)?,
            hoeffding_threshold(n, family_size, cfg.confidence)?,
        )
    } else {
        (0.0, 0.0)
    };
    let l1_level3_of_scaled_majority = scale * l1_level3_of_majority;
    let level3_lower_target = l1_level3_of_scaled_majority - hoeffding_allowance;
    let level3_ok = l1_level3_of_rounded >= level3_lower_target;

    let class = closure_sample(
        vec![rounded],
        ClosureFlags::all(),
        cfg.samples,
        derive_seed(cfg.seed, 1),
        false,
    )?;
    let sample_records: Vec<SampleRecord> = class
        .members()
        .par_iter()
        .enumerate()
        .map(|(index, m)| SampleRecord {
            index,
            derivation: m.derivation.to_string(),
            arity: m.table.arity(),
            singleton_sum: singleton_sum(&m.table),
        })
        .collect();
    let level1_target = cfg.b + 1.0;
    let l1_level1_max_observed = sample_records
        .iter()
        .map(|r| r.singleton_sum.abs())
        .fold(0.0, f64::max);
    let level1_violations = sample_records
        .iter()
        .filter(|r| r.singleton_sum.abs() > level1_target)
        .count();

    let hoeffding_predictions = if family_size > 0 {
        cfg.deviations
            .iter()
            .map(|&eps| {
                Ok(HoeffdingPrediction {
                    eps,
                    tail: hoeffding_tail(n, family_size, eps)?,
                })
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    Ok(RoundingExperimentReport {
        n,
        b: cfg.b,
        seed: cfg.seed,
        samples: cfg.samples,
        scale,
        warnings,
        l1_level1_max_observed,
        level1_target,
        level1_violations,
        l1_level3_of_majority,
        l1_level3_of_scaled_majority,
        l1_level3_of_rounded,
        level3_deviation,
        confidence: cfg.confidence,
        hoeffding_allowance,
        coarse_allowance: n as f64,
        level3_lower_target,
        level3_ok,
        hoeffding_predictions,
        violations: level1_violations + usize::from(!level3_ok),
        sample_records,
    })
}
