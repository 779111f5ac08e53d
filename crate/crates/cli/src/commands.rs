use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use coinlab::bounds::residual_from_profile;
use coinlab::classes::{class_stats, closure_enumerate, closure_sample, FunctionClass};
use coinlab::coin::{advantage_reports, expectation_from_profile};
use coinlab::export::{
    fmt_num, write_coin_csv, write_profile_csv, write_records_csv, write_spectrum_csv, CoinRow,
};
use coinlab::rounding::{
    counterexample_experiment, empirical_concentration, ConcentrationReport, ExperimentConfig,
    RoundingExperimentReport, SubsetFamily,
};
use coinlab::spectrum::subset_label;
use coinlab::{families, io, AnalyzedFunction, BiasPoint, ClassDescriptor, EpsGrid, FunctionSpec, TruthTable};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{Format, SeedRange};
use crate::Status;

fn json_out<W: Write>(out: &mut W, value: &impl Serialize) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn csv_rows<W: Write>(out: W, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn build(spec: &FunctionSpec) -> Result<TruthTable> {
    spec.build().with_context(|| format!("cannot build {spec}"))
}

/// `Inf_i = sum over S containing i of f̂(S)^2`.
fn influences(a: &AnalyzedFunction) -> Vec<f64> {
    let mut inf = vec![0.0; a.arity()];
    for (mask, c) in a.spectrum.coeffs().iter().enumerate() {
        for (i, v) in inf.iter_mut().enumerate() {
            if mask >> i & 1 == 1 {
                *v += c * c;
            }
        }
    }
    inf
}

/// Nonzero coefficients by decreasing magnitude, ties by mask.
fn top_coefficients(a: &AnalyzedFunction, count: usize) -> Vec<(usize, f64)> {
    let mut v: Vec<(usize, f64)> = a
        .spectrum
        .coeffs()
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, c)| c.abs() > 1e-15)
        .collect();
    v.sort_by(|x, y| y.1.abs().total_cmp(&x.1.abs()).then(x.0.cmp(&y.0)));
    v.truncate(count);
    v
}

pub fn analyze<W: Write>(
    out: &mut W,
    format: Format,
    spec: &FunctionSpec,
    top: usize,
    spectrum: bool,
    save_table: Option<&Path>,
) -> Result<Status> {
    let table = build(spec)?;
    if let Some(path) = save_table {
        io::write_table(&table, path)?;
    }
    let a = AnalyzedFunction::new(spec.to_string(), table);
    let p = &a.profile;
    let inf = influences(&a);
    let best = top_coefficients(&a, top);
    match format {
        Format::Csv if spectrum => write_spectrum_csv(out, &a.spectrum)?,
        Format::Csv => write_profile_csv(out, p)?,
        Format::Json => {
            let profile: Vec<_> = (0..=a.arity())
                .map(|k| json!({"level": k, "l1": p.l1(k), "signed_sum": p.signed_sum(k), "weight": p.weight(k)}))
                .collect();
            let top: Vec<_> = best
                .iter()
                .map(|&(m, c)| json!({"mask": m, "subset": subset_label(m), "level": m.count_ones(), "coefficient": c}))
                .collect();
            json_out(
                out,
                &json!({
                    "arity": a.arity(),
                    "kind": format!("{:?}", a.kind()).to_lowercase(),
                    "mean": p.signed_sum(0),
                    "variance": p.variance,
                    "total_influence": p.total_influence,
                    "influences": inf,
                    "profile": profile,
                    "top_coefficients": top,
                }),
            )?;
        }
        Format::Text => {
            writeln!(out, "arity            {}", a.arity())?;
            writeln!(out, "kind             {}", format!("{:?}", a.kind()).to_lowercase())?;
            writeln!(out, "mean             {}", fmt_num(p.signed_sum(0)))?;
            writeln!(out, "variance         {}", fmt_num(p.variance))?;
            writeln!(out, "total influence  {}", fmt_num(p.total_influence))?;
            writeln!(out)?;
            writeln!(out, "{:<6} {:>18} {:>18} {:>18}", "level", "l1", "signed_sum", "weight")?;
            for k in 0..=a.arity() {
                writeln!(
                    out,
                    "{:<6} {:>18} {:>18} {:>18}",
                    k,
                    fmt_num(p.l1(k)),
                    fmt_num(p.signed_sum(k)),
                    fmt_num(p.weight(k))
                )?;
            }
            if !inf.is_empty() {
                writeln!(out)?;
                writeln!(out, "{:<6} {:>18}", "var", "influence")?;
                for (i, v) in inf.iter().enumerate() {
                    writeln!(out, "{:<6} {:>18}", format!("x{}", i + 1), fmt_num(*v))?;
                }
            }
            writeln!(out)?;
            writeln!(out, "{:<18} {:>18}", "subset", "coefficient")?;
            for (m, c) in best {
                writeln!(out, "{:<18} {:>18}", subset_label(m), fmt_num(c))?;
            }
        }
    }
    Ok(Status::Pass)
}

pub fn coin<W: Write>(out: &mut W, format: Format, spec: &FunctionSpec, grid: &EpsGrid) -> Result<Status> {
    let f = build(spec)?;
    let rows = grid
        .points()
        .into_par_iter()
        .map(|e| {
            let [direct, spectral] = advantage_reports(&f, &BiasPoint::new(e)?)?;
            Ok(CoinRow {
                function: spec.to_string(),
                eps: e,
                expectation_direct: direct.expectation_biased,
                expectation_spectral: spectral.expectation_biased,
                uniform_expectation: direct.expectation_uniform,
                advantage: direct.advantage,
            })
        })
        .collect::<coinlab::Result<Vec<_>>>()?;
    match format {
        Format::Json => json_out(out, &rows)?,
        _ => write_coin_csv(out, &rows)?,
    }
    Ok(Status::Pass)
}

pub fn build_class(
    desc: &ClassDescriptor,
    cap: usize,
    sample: Option<usize>,
    seed: u64,
) -> coinlab::Result<FunctionClass> {
    let bases = desc
        .bases
        .iter()
        .map(|s| s.build())
        .collect::<coinlab::Result<Vec<TruthTable>>>()?;
    match sample {
        Some(k) => closure_sample(bases, desc.flags, k, seed, true),
        None => closure_enumerate(bases, desc.flags, cap),
    }
}

pub fn closure<W: Write>(
    out: &mut W,
    format: Format,
    desc: &ClassDescriptor,
    grid: &EpsGrid,
    cap: usize,
    sample: Option<usize>,
    seed: u64,
) -> Result<Status> {
    let c = build_class(desc, cap, sample, seed)?;
    let eps = grid.points();
    let stats = class_stats(&c, &eps)?;
    let derivation = |i: usize| c.members()[i].derivation.to_string();
    match format {
        Format::Json => {
            let levels: Vec<_> = stats
                .sup_l1_by_level
                .iter()
                .enumerate()
                .map(|(k, s)| json!({"level": k, "value": s.value, "member": s.witness, "witness": derivation(s.witness)}))
                .collect();
            let adv: Vec<_> = stats
                .sup_advantage
                .iter()
                .map(|(e, s)| json!({"eps": e, "value": s.value, "member": s.witness, "witness": derivation(s.witness)}))
                .collect();
            let s1 = &stats.sup_abs_signed_level1;
            json_out(
                out,
                &json!({
                    "class": desc.to_string(),
                    "bases": desc.bases.iter().map(|b| b.to_string()).collect::<Vec<_>>(),
                    "label": stats.label(),
                    "exact": stats.exact,
                    "member_count": stats.member_count,
                    "sup_l1_by_level": levels,
                    "sup_abs_signed_level1": {"value": s1.value, "member": s1.witness, "witness": derivation(s1.witness)},
                    "sup_advantage": adv,
                }),
            )?;
        }
        _ => {
            let mut header: Vec<String> = [
                "member_id",
                "derivation",
                "arity",
                "l1_level1",
                "l1_level3",
                "signed_level1",
            ]
            .map(String::from)
            .to_vec();
            header.extend(eps.iter().map(|e| format!("advantage@{}", fmt_num(*e))));
            let rows: Vec<Vec<String>> = stats
                .members
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    let l1 = |k: usize| m.l1_by_level.get(k).copied().unwrap_or(0.0);
                    let mut row = vec![
                        i.to_string(),
                        derivation(i),
                        m.arity.to_string(),
                        fmt_num(l1(1)),
                        fmt_num(l1(3)),
                        fmt_num(m.signed_level1),
                    ];
                    row.extend(m.advantages.iter().map(|v| fmt_num(*v)));
                    row
                })
                .collect();
            csv_rows(out, &header, &rows)?;
        }
    }
    eprintln!("{} members ({})", stats.member_count, stats.label());
    Ok(Status::Pass)
}

pub struct RoundingArgs<'a> {
    pub n: usize,
    pub b: f64,
    pub samples: usize,
    pub trials: Option<usize>,
    pub eps_list: &'a [f64],
    pub confidence: f64,
    pub min_pass_fraction: f64,
    pub samples_csv: Option<&'a Path>,
}

#[derive(Serialize)]
struct SeedSampleRow<'a> {
    seed: u64,
    index: usize,
    derivation: &'a str,
    arity: usize,
    singleton_sum: f64,
}

#[derive(Serialize)]
struct RoundingSummary<'a> {
    seeds: String,
    runs: usize,
    passing: usize,
    min_pass_fraction: f64,
    reports: &'a [RoundingExperimentReport],
    #[serde(skip_serializing_if = "Option::is_none")]
    concentration: Option<&'a ConcentrationReport>,
}

pub fn rounding<W: Write>(out: &mut W, format: Format, seeds: SeedRange, args: &RoundingArgs) -> Result<Status> {
    if !(0.0..=1.0).contains(&args.min_pass_fraction) {
        bail!("--min-pass-fraction must lie in [0, 1]");
    }
    let seed_list: Vec<u64> = seeds.seeds().collect();
    let reports = seed_list
        .par_iter()
        .map(|&seed| {
            let mut cfg = ExperimentConfig::new(args.n, args.b, seed, args.samples);
            cfg.deviations = args.eps_list.to_vec();
            cfg.confidence = args.confidence;
            counterexample_experiment(&cfg)
        })
        .collect::<coinlab::Result<Vec<_>>>()?;
    for w in reports.first().map(|r| r.warnings.as_slice()).unwrap_or_default() {
        eprintln!("warning: {w}");
    }
    let concentration = match args.trials {
        Some(trials) => {
            let g = families::majority::<f64>(args.n)?.scale(&(args.b / (args.n as f64).sqrt()).min(1.0))?;
            let family = SubsetFamily::level(args.n, 3.min(args.n))?;
            Some(empirical_concentration(&g, &family, trials, seeds.first, args.eps_list)?)
        }
        None => None,
    };
    if let Some(path) = args.samples_csv {
        let rows: Vec<SeedSampleRow> = reports
            .iter()
            .flat_map(|r| {
                r.sample_records.iter().map(move |s| SeedSampleRow {
                    seed: r.seed,
                    index: s.index,
                    derivation: &s.derivation,
                    arity: s.arity,
                    singleton_sum: s.singleton_sum,
                })
            })
            .collect();
        let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        write_records_csv(BufWriter::new(file), &rows)?;
    }
    let passing = reports.iter().filter(|r| r.violations == 0).count();
    match format {
        Format::Json => json_out(
            out,
            &RoundingSummary {
                seeds: seeds.to_string(),
                runs: reports.len(),
                passing,
                min_pass_fraction: args.min_pass_fraction,
                reports: &reports,
                concentration: concentration.as_ref(),
            },
        )?,
        _ => {
            let header: Vec<String> = [
                "seed",
                "l1_level1_max_observed",
                "level1_target",
                "level1_violations",
                "l1_level3_of_rounded",
                "level3_lower_target",
                "level3_ok",
                "violations",
            ]
            .map(String::from)
            .to_vec();
            let rows: Vec<Vec<String>> = reports
                .iter()
                .map(|r| {
                    vec![
                        r.seed.to_string(),
                        fmt_num(r.l1_level1_max_observed),
                        fmt_num(r.level1_target),
                        r.level1_violations.to_string(),
                        fmt_num(r.l1_level3_of_rounded),
                        fmt_num(r.level3_lower_target),
                        r.level3_ok.to_string(),
                        r.violations.to_string(),
                    ]
                })
                .collect();
            csv_rows(out, &header, &rows)?;
        }
    }
    eprintln!("{passing} of {} seeds meet both targets", reports.len());
    let enough = passing as f64 >= args.min_pass_fraction * reports.len() as f64;
    let tails_ok = concentration.as_ref().is_none_or(|c| c.all_within());
    Ok(if enough && tails_ok { Status::Pass } else { Status::Violation })
}

#[derive(Serialize)]
struct SweepRow {
    function: String,
    n: usize,
    eps: f64,
    advantage: f64,
    /// `delta(eps)/eps`, the level-1 sum at `eps = 0`.
    advantage_over_eps: f64,
    level1_sum: f64,
    /// `|delta(eps)/eps - level1_sum|`.
    residual: f64,
}

pub fn sweep<W: Write>(out: &mut W, format: Format, specs: &[FunctionSpec], grid: &EpsGrid) -> Result<Status> {
    let eps = grid.points();
    let tables = specs.iter().map(build).collect::<Result<Vec<_>>>()?;
    let rows: Vec<SweepRow> = specs
        .par_iter()
        .zip(tables)
        .map(|(spec, t)| {
            let a = AnalyzedFunction::new(spec.to_string(), t);
            let p = &a.profile;
            let level1 = p.signed_sum(1);
            eps.iter()
                .map(|&e| {
                    let delta = expectation_from_profile(p, &e) - p.signed_sum(0);
                    let (ratio, residual) = if e == 0.0 {
                        (level1, 0.0)
                    } else {
                        (delta / e, residual_from_profile(p, e)?)
                    };
                    Ok(SweepRow {
                        function: a.label.clone(),
                        n: a.arity(),
                        eps: e,
                        advantage: delta.abs(),
                        advantage_over_eps: ratio,
                        level1_sum: level1,
                        residual,
                    })
                })
                .collect::<coinlab::Result<Vec<_>>>()
        })
        .collect::<coinlab::Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    match format {
        Format::Json => json_out(out, &rows)?,
        _ => {
            let header: Vec<String> = ["function", "n", "eps", "advantage", "advantage_over_eps", "level1_sum", "residual"]
                .map(String::from)
                .to_vec();
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.function.clone(),
                        r.n.to_string(),
                        fmt_num(r.eps),
                        fmt_num(r.advantage),
                        fmt_num(r.advantage_over_eps),
                        fmt_num(r.level1_sum),
                        fmt_num(r.residual),
                    ]
                })
                .collect();
            csv_rows(out, &header, &body)?;
        }
    }
    Ok(Status::Pass)
}
