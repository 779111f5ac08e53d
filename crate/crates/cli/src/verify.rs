use std::io::Write;

use anyhow::{bail, Result};
use coinlab::bounds::{
    check_derivative_bound, check_improved_coin, check_nonneg_level1, check_optimal_distinguisher,
    check_rate_maxlevel, check_rate_variance, check_restriction_coin, check_robp_level1,
    check_small_eps_coin, hypothesis_grid, ClassCheck,
};
use coinlab::coin::advantage;
use coinlab::export::{report_row, REPORT_COLUMNS};
use coinlab::table::all_boolean_tables;
use coinlab::{AnalyzedFunction, BiasPoint, BoundReport, ClassDescriptor, EpsGrid, Error, FunctionSpec};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::commands::build_class;
use crate::config::{Format, Suite};
use crate::Status;

const DEFAULT_TARGETS: [&str; 7] = ["maj:3", "maj:5", "maj:7", "parity:3", "thr:5:2", "dict:3:1", "tribes:2:4"];
const DEFAULT_CLASS: &str = "maj:5+restriction";
const DEFAULT_CLASS_GRID: &str = "0.1:0.9:9";
const DEFAULT_OPTIMAL_N: [usize; 3] = [1, 2, 3];
const DEFAULT_OPTIMAL_EPS: [f64; 3] = [0.1, 0.3, 0.5];
const DEFAULT_ROBP_N: usize = 16;
/// Improved-bound biases as fractions of the hypothesis radius.
const IMPROVED_FRACTIONS: [f64; 6] = [-0.9, -0.5, -0.1, 0.1, 0.5, 0.9];

pub struct VerifyArgs<'a> {
    pub functions: &'a [FunctionSpec],
    pub exhaustive_n: Option<usize>,
    pub class: Option<&'a ClassDescriptor>,
    pub eps_grid: Option<&'a EpsGrid>,
    pub n: Option<usize>,
    pub eps: Option<f64>,
    pub eps0: Option<f64>,
    pub b: Option<f64>,
    pub width: u32,
    pub samples: usize,
    pub cap: usize,
    pub sample: Option<usize>,
    pub members: bool,
    pub seed: u64,
    pub tolerance: Option<f64>,
}

/// A checked bound, or a request that could not be carried out.
#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum Row {
    Report(BoundReport),
    Infeasible { bound_id: String, target: String, error: String },
}

#[derive(Default)]
struct Collected {
    rows: Vec<Row>,
    /// Targets outside a checker's precondition.
    skipped: usize,
}

impl Collected {
    fn extend(&mut self, other: Collected) {
        self.rows.extend(other.rows);
        self.skipped += other.skipped;
    }

    fn merge(parts: Vec<Collected>) -> Collected {
        let mut all = Collected::default();
        for p in parts {
            all.extend(p);
        }
        all
    }
}

fn infeasible(bound_id: &str, target: &str, e: &Error) -> Row {
    Row::Infeasible {
        bound_id: bound_id.into(),
        target: target.into(),
        error: e.to_string(),
    }
}

fn is_infeasible(e: &Error) -> bool {
    matches!(
        e,
        Error::CapExceeded { .. } | Error::HypothesisFailed { .. } | Error::Precondition(_)
    )
}

fn targets(args: &VerifyArgs) -> Result<Vec<AnalyzedFunction>> {
    let mut out = Vec::new();
    if let Some(n) = args.exhaustive_n {
        if n > 4 {
            bail!("--exhaustive-n is limited to 4, got {n}");
        }
        out.extend(
            all_boolean_tables(n)?
                .enumerate()
                .map(|(id, t)| AnalyzedFunction::new(format!("exhaustive:{n}:{id}"), t)),
        );
    }
    for spec in args.functions {
        out.push(AnalyzedFunction::new(spec.to_string(), spec.build()?));
    }
    if out.is_empty() {
        for s in DEFAULT_TARGETS {
            let spec: FunctionSpec = s.parse()?;
            out.push(AnalyzedFunction::new(s, spec.build()?));
        }
    }
    Ok(out)
}

/// Points with `0 < |eps|` and `eps^2 n scale <= 1`; the default grid is
/// `±k/(10 sqrt(n))`, `k = 1..10`, or only the positive half.
fn rate_grid(args: &VerifyArgs, n: usize, scale: f64, positive_only: bool) -> Vec<f64> {
    let n = n.max(1) as f64;
    let points = match args.eps_grid {
        Some(g) => g.points(),
        None => (1..=10)
            .flat_map(|k| {
                let e = k as f64 / (10.0 * n.sqrt());
                [e, -e]
            })
            .collect(),
    };
    points
        .into_iter()
        .filter(|&e| e != 0.0 && e * e * n * scale <= 1.0 + 1e-12)
        .filter(|&e| !positive_only || e > 0.0)
        .collect()
}

fn per_function<F>(fs: &[AnalyzedFunction], check: F) -> Collected
where
    F: Fn(&AnalyzedFunction) -> Collected + Sync,
{
    Collected::merge(
        fs.par_iter()
            .map(|a| if a.arity() == 0 { Collected { rows: vec![], skipped: 1 } } else { check(a) })
            .collect(),
    )
}

fn reports(rs: coinlab::Result<impl IntoIterator<Item = BoundReport>>, id: &str, target: &str) -> Collected {
    match rs {
        Ok(rs) => Collected { rows: rs.into_iter().map(Row::Report).collect(), skipped: 0 },
        Err(e) => Collected { rows: vec![infeasible(id, target, &e)], skipped: 0 },
    }
}

fn rate(args: &VerifyArgs, fs: &[AnalyzedFunction]) -> Collected {
    per_function(fs, |a| {
        let mut c = Collected::default();
        for e in rate_grid(args, a.arity(), 1.0, false) {
            c.extend(reports(check_rate_variance(a, e), "rate_variance", &a.label));
        }
        for e in rate_grid(args, a.arity(), 4.0, false) {
            c.extend(reports(check_rate_maxlevel(a, e).map(|r| [r]), "rate_maxlevel", &a.label));
        }
        c
    })
}

fn small_eps(args: &VerifyArgs, fs: &[AnalyzedFunction]) -> Collected {
    per_function(fs, |a| {
        let mut c = Collected::default();
        for e in rate_grid(args, a.arity(), 1.0, false) {
            c.extend(reports(check_small_eps_coin(a, e), "small_eps_coin", &a.label));
        }
        c
    })
}

fn nonneg(args: &VerifyArgs, fs: &[AnalyzedFunction]) -> Collected {
    per_function(fs, |a| match check_nonneg_level1(a, &rate_grid(args, a.arity(), 1.0, true)) {
        Ok(r) => Collected { rows: vec![Row::Report(r)], skipped: 0 },
        Err(Error::Precondition(_)) => Collected { rows: vec![], skipped: 1 },
        Err(e) => Collected { rows: vec![infeasible("nonneg_level1", &a.label, &e)], skipped: 0 },
    })
}

/// Smallest `B` with `|delta(e)| <= |e| B` on the hypothesis grid.
fn admitted_constant(a: &AnalyzedFunction, eps0: f64) -> coinlab::Result<f64> {
    let mut b = 0.0f64;
    for m in hypothesis_grid(eps0) {
        for e in [m, -m] {
            b = b.max(advantage(&a.table, &BiasPoint::new(e)?)?.advantage / m);
        }
    }
    Ok(b + 1e-9)
}

fn improved(args: &VerifyArgs, fs: &[AnalyzedFunction]) -> Collected {
    per_function(fs, |a| {
        let n = a.arity() as f64;
        let radii = match args.eps0 {
            Some(e) => vec![e],
            None => vec![1.0 / n, 1.0 / n.sqrt()],
        };
        let mut c = Collected::default();
        for eps0 in radii {
            let b = match args.b {
                Some(b) => b,
                None => match admitted_constant(a, eps0) {
                    Ok(b) => b,
                    Err(e) => {
                        c.rows.push(infeasible("improved_coin", &a.label, &e));
                        continue;
                    }
                },
            };
            let points: Vec<f64> = match args.eps_grid {
                Some(g) => g.points(),
                None => IMPROVED_FRACTIONS.iter().map(|f| f * eps0).collect(),
            };
            for e in points {
                c.extend(reports(check_improved_coin(a, b, eps0, e), "improved_coin", &a.label));
                if matches!(c.rows.last(), Some(Row::Infeasible { .. })) {
                    // the hypothesis does not depend on eps
                    break;
                }
            }
        }
        c
    })
}

fn class_rows(checks: coinlab::Result<Vec<ClassCheck>>, id: &str, target: &str, members: bool, note: Option<&str>) -> Collected {
    match checks {
        Ok(cs) => {
            let mut rows = Vec::new();
            for c in cs {
                let agg = match note {
                    Some(n) => c.aggregate.with_note(n),
                    None => c.aggregate,
                };
                rows.push(Row::Report(agg));
                if members {
                    rows.extend(c.members.into_iter().map(Row::Report));
                }
            }
            Collected { rows, skipped: 0 }
        }
        Err(e) => Collected { rows: vec![infeasible(id, target, &e)], skipped: 0 },
    }
}

fn restriction(args: &VerifyArgs) -> Result<Collected> {
    let default_class: ClassDescriptor;
    let desc = match args.class {
        Some(d) => d,
        None => {
            default_class = DEFAULT_CLASS.parse()?;
            &default_class
        }
    };
    let label = desc.to_string();
    let class = match build_class(desc, args.cap, args.sample, args.seed) {
        Ok(c) => c,
        Err(e) if is_infeasible(&e) => {
            return Ok(Collected {
                rows: vec![
                    infeasible("restriction_coin", &label, &e),
                    infeasible("derivative_bound", &label, &e),
                ],
                skipped: 0,
            })
        }
        Err(e) => return Err(e.into()),
    };
    let grid = match args.eps_grid {
        Some(g) => g.clone(),
        None => DEFAULT_CLASS_GRID.parse()?,
    };
    let points: Vec<f64> = grid.points().into_iter().filter(|e| e.abs() < 1.0).collect();
    let note = (!class.is_exhaustive()).then_some("t from sampled members, a lower bound on the class value");
    let mut c = class_rows(check_restriction_coin(&class, &points), "restriction_coin", &label, args.members, note);
    c.extend(class_rows(check_derivative_bound(&class, &points), "derivative_bound", &label, args.members, note));
    Ok(c)
}

fn robp(args: &VerifyArgs) -> Collected {
    let n = args.n.unwrap_or(DEFAULT_ROBP_N);
    let target = format!("width {} programs on {n} variables", args.width);
    reports(check_robp_level1(n, args.width, args.samples, args.seed, 2.0), "robp_level1", &target)
}

fn optimal(args: &VerifyArgs) -> Collected {
    let ns = match args.n {
        Some(n) => vec![n],
        None => DEFAULT_OPTIMAL_N.to_vec(),
    };
    let eps: Vec<f64> = match (args.eps, args.eps_grid) {
        (Some(e), _) => vec![e],
        (None, Some(g)) => g.points().into_iter().filter(|e| *e > 0.0).collect(),
        (None, None) => DEFAULT_OPTIMAL_EPS.to_vec(),
    };
    let jobs: Vec<(usize, f64)> = ns.iter().flat_map(|&n| eps.iter().map(move |&e| (n, e))).collect();
    Collected::merge(
        jobs.par_iter()
            .map(|&(n, e)| reports(check_optimal_distinguisher(n, e), "optimal_threshold_gap", &format!("n={n}")))
            .collect(),
    )
}

fn run_suite(suite: Suite, args: &VerifyArgs, fs: &[AnalyzedFunction]) -> Result<Collected> {
    Ok(match suite {
        Suite::Rate => rate(args, fs),
        Suite::Nonneg => nonneg(args, fs),
        Suite::SmallEps => small_eps(args, fs),
        Suite::Improved => improved(args, fs),
        Suite::Restriction => restriction(args)?,
        Suite::Robp => robp(args),
        Suite::Optimal => optimal(args),
        Suite::All => {
            let mut c = Collected::default();
            for s in [
                Suite::Rate,
                Suite::Nonneg,
                Suite::SmallEps,
                Suite::Improved,
                Suite::Restriction,
                Suite::Robp,
                Suite::Optimal,
            ] {
                c.extend(run_suite(s, args, fs)?);
            }
            c
        }
    })
}

fn needs_targets(suite: Suite) -> bool {
    !matches!(suite, Suite::Restriction | Suite::Robp | Suite::Optimal)
}

pub fn verify<W: Write>(out: &mut W, format: Format, suite: Suite, args: &VerifyArgs) -> Result<Status> {
    let fs = if needs_targets(suite) { targets(args)? } else { Vec::new() };
    let mut collected = run_suite(suite, args, &fs)?;
    if let Some(t) = args.tolerance {
        for row in &mut collected.rows {
            if let Row::Report(r) = row {
                *r = r.clone().with_tolerance(t);
            }
        }
    }
    let total = collected.rows.iter().filter(|r| matches!(r, Row::Report(_))).count();
    let violations = collected
        .rows
        .iter()
        .filter(|r| matches!(r, Row::Report(b) if !b.holds))
        .count();
    let infeasible_count = collected.rows.len() - total;
    match format {
        Format::Json => {
            let (reports, failed): (Vec<&Row>, Vec<&Row>) =
                collected.rows.iter().partition(|r| matches!(r, Row::Report(_)));
            serde_json::to_writer_pretty(
                &mut *out,
                &json!({
                    "suite": suite.name(),
                    "reports": reports,
                    "infeasible": failed,
                    "summary": {
                        "reports": total,
                        "violations": violations,
                        "infeasible": infeasible_count,
                        "skipped": collected.skipped,
                    },
                }),
            )?;
            writeln!(out)?;
        }
        _ => {
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(REPORT_COLUMNS)?;
            for row in &collected.rows {
                match row {
                    Row::Report(r) => w.write_record(report_row(r))?,
                    Row::Infeasible { bound_id, target, error } => {
                        w.write_record([bound_id.as_str(), "", "", "", "", "infeasible", "", target, error])?
                    }
                }
            }
            w.flush()?;
        }
    }
    eprintln!(
        "{} reports, {violations} violations, {infeasible_count} infeasible, {} targets skipped (precondition not met)",
        total, collected.skipped
    );
    Ok(if violations > 0 {
        Status::Violation
    } else if infeasible_count > 0 {
        Status::Infeasible
    } else {
        Status::Pass
    })
}
