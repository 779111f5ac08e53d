//! Command-line model. `RunConfig::canonical_args` spells out every
//! setting, defaults included, so a normalized config parses back to itself.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use coinlab::{ClassDescriptor, EpsGrid, FunctionSpec};

#[derive(Parser, Clone, Debug, PartialEq)]
#[command(
    name = "coinlab",
    version,
    about = "Fourier analysis of Boolean functions and biased-coin distinguishing"
)]
pub struct RunConfig {
    /// Output format; the default depends on the subcommand.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Replace the tolerance of every bound report; a negative value
    /// demands that much margin.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub tolerance: Option<f64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Seed, or an inclusive range `a..b` (rounding only).
    #[arg(long, global = true, default_value = "0")]
    pub seed: SeedRange,

    /// Print the canonical command line and exit.
    #[arg(long, global = true)]
    pub print_config: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Text => "text",
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// Variance and max-level rate bounds.
    Rate,
    /// Level-1 bound for functions with non-negative singleton coefficients.
    Nonneg,
    /// Small-bias coin bound from the level-1 sum.
    SmallEps,
    /// Improved coin bound under the hypothesis on large biases.
    Improved,
    /// Restriction-closed class bounds.
    Restriction,
    /// Branching-program level-1 recipe.
    Robp,
    /// Threshold functions are optimal distinguishers.
    Optimal,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Rate => "rate",
            Suite::Nonneg => "nonneg",
            Suite::SmallEps => "small-eps",
            Suite::Improved => "improved",
            Suite::Restriction => "restriction",
            Suite::Robp => "robp",
            Suite::Optimal => "optimal",
            Suite::All => "all",
        }
    }
}

#[derive(Subcommand, Clone, Debug, PartialEq)]
pub enum Command {
    /// Level profile, influences, variance and largest coefficients.
    Analyze {
        spec: FunctionSpec,
        /// Number of largest coefficients listed.
        #[arg(long, default_value_t = 10)]
        top: usize,
        /// With csv output, list the whole spectrum instead of the profile.
        #[arg(long)]
        spectrum: bool,
        /// Also write the truth table to this file.
        #[arg(long)]
        save_table: Option<PathBuf>,
    },
    /// Biased expectations and advantage over a bias grid.
    Coin {
        spec: FunctionSpec,
        #[arg(long, allow_hyphen_values = true)]
        eps: EpsGrid,
    },
    /// Run a bound-verification suite.
    Verify {
        suite: Suite,
        /// Target function (repeatable).
        #[arg(long = "function")]
        functions: Vec<FunctionSpec>,
        /// Use every Boolean function of this arity (at most 4) as targets.
        #[arg(long)]
        exhaustive_n: Option<usize>,
        /// Class for the restriction suite.
        #[arg(long)]
        class: Option<ClassDescriptor>,
        /// Bias grid; points outside a checker's range are dropped.
        #[arg(long, allow_hyphen_values = true)]
        eps_grid: Option<EpsGrid>,
        /// Arity for the robp and optimal suites.
        #[arg(long)]
        n: Option<usize>,
        /// Bias for the optimal suite.
        #[arg(long)]
        eps: Option<f64>,
        /// Hypothesis radius for the improved suite.
        #[arg(long)]
        eps0: Option<f64>,
        /// Hypothesis constant for the improved suite; default is the
        /// smallest value the hypothesis grid admits.
        #[arg(long = "B")]
        b: Option<f64>,
        /// Program width for the robp suite.
        #[arg(long, default_value_t = 3)]
        width: u32,
        /// Random programs for the robp suite.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Closure member cap.
        #[arg(long, default_value_t = coinlab::classes::DEFAULT_MEMBER_CAP)]
        cap: usize,
        /// Sample this many closure members instead of enumerating.
        #[arg(long)]
        sample: Option<usize>,
        /// Also emit one row per class member.
        #[arg(long)]
        members: bool,
    },
    /// Closure statistics of a function class.
    Closure {
        class: ClassDescriptor,
        #[arg(long, allow_hyphen_values = true, default_value = "0.1,0.3,0.5")]
        eps_grid: EpsGrid,
        #[arg(long, default_value_t = coinlab::classes::DEFAULT_MEMBER_CAP)]
        cap: usize,
        /// Sample this many members instead of enumerating.
        #[arg(long)]
        sample: Option<usize>,
    },
    /// Randomized-rounding experiment on scaled majority.
    Rounding {
        #[arg(long)]
        n: usize,
        #[arg(long = "B")]
        b: f64,
        /// Closure members sampled for the level-1 check.
        #[arg(long, default_value_t = 500)]
        samples: usize,
        /// Also run this many roundings for empirical tail frequencies.
        #[arg(long)]
        trials: Option<usize>,
        /// Deviations for the tail predictions.
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4")]
        eps_list: Vec<f64>,
        /// Failure probability behind the Hoeffding allowance.
        #[arg(long, default_value_t = coinlab::rounding::DEFAULT_CONFIDENCE)]
        confidence: f64,
        /// Fraction of seeds that must pass for exit status 0.
        #[arg(long, default_value_t = 0.95)]
        min_pass_fraction: f64,
        /// Write per-sample rows here.
        #[arg(long)]
        samples_csv: Option<PathBuf>,
    },
    /// Advantage over bias against the level-1 sum, for several functions.
    Sweep {
        #[arg(required = true)]
        specs: Vec<FunctionSpec>,
        #[arg(long, allow_hyphen_values = true, default_value = "-0.5:0.5:11")]
        eps: EpsGrid,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Analyze { .. } => "analyze",
            Command::Coin { .. } => "coin",
            Command::Verify { .. } => "verify",
            Command::Closure { .. } => "closure",
            Command::Rounding { .. } => "rounding",
            Command::Sweep { .. } => "sweep",
        }
    }

    pub fn default_format(&self) -> Format {
        match self {
            Command::Analyze { .. } => Format::Text,
            Command::Rounding { .. } => Format::Json,
            _ => Format::Csv,
        }
    }
}

/// Inclusive seed range; a single seed is `a..a`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct SeedRange {
    pub first: u64,
    pub last: u64,
}

impl SeedRange {
    pub fn single(&self) -> Option<u64> {
        (self.first == self.last).then_some(self.first)
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> {
        self.first..=self.last
    }
}

impl FromStr for SeedRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| {
            t.trim()
                .parse::<u64>()
                .map_err(|_| format!("`{t}` is not a non-negative integer"))
        };
        let (first, last) = match s.split_once("..") {
            Some((a, b)) => (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?),
            None => {
                let v = num(s)?;
                (v, v)
            }
        };
        if first > last {
            return Err(format!("empty seed range {s}"));
        }
        Ok(SeedRange { first, last })
    }
}

impl fmt::Display for SeedRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.single() {
            Some(v) => write!(f, "{v}"),
            None => write!(f, "{}..{}", self.first, self.last),
        }
    }
}

impl RunConfig {
    /// Defaults made explicit: the output format is resolved.
    pub fn normalized(&self) -> RunConfig {
        let mut c = self.clone();
        c.format = Some(self.format());
        c.print_config = false;
        c
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_else(|| self.command.default_format())
    }

    /// Full argument vector, program name first.
    pub fn canonical_args(&self) -> Vec<String> {
        let mut a: Vec<String> = vec!["coinlab".into()];
        let mut push = |k: &str, v: String| {
            a.push(format!("--{k}"));
            a.push(v);
        };
        push("format", self.format().name().into());
        if let Some(t) = self.tolerance {
            push("tolerance", t.to_string());
        }
        if let Some(j) = self.jobs {
            push("jobs", j.to_string());
        }
        push("seed", self.seed.to_string());
        a.push(self.command.name().into());
        a.extend(self.command.canonical_args());
        a
    }

    /// Canonical args joined by spaces, quoting any argument with whitespace.
    pub fn canonical(&self) -> String {
        self.canonical_args()
            .iter()
            .map(|s| {
                if s.chars().any(char::is_whitespace) {
                    format!("'{s}'")
                } else {
                    s.clone()
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl Command {
    fn canonical_args(&self) -> Vec<String> {
        let mut a = Vec::new();
        fn kv(a: &mut Vec<String>, k: &str, v: impl ToString) {
            a.push(format!("--{k}"));
            a.push(v.to_string());
        }
        fn flag(a: &mut Vec<String>, k: &str, on: bool) {
            if on {
                a.push(format!("--{k}"));
            }
        }
        match self {
            Command::Analyze { spec, top, spectrum, save_table } => {
                a.push(spec.to_string());
                kv(&mut a, "top", top);
                flag(&mut a, "spectrum", *spectrum);
                if let Some(p) = save_table {
                    kv(&mut a, "save-table", p.display());
                }
            }
            Command::Coin { spec, eps } => {
                a.push(spec.to_string());
                kv(&mut a, "eps", eps);
            }
            Command::Verify {
                suite,
                functions,
                exhaustive_n,
                class,
                eps_grid,
                n,
                eps,
                eps0,
                b,
                width,
                samples,
                cap,
                sample,
                members,
            } => {
                a.push(suite.name().into());
                for f in functions {
                    kv(&mut a, "function", f);
                }
                if let Some(v) = exhaustive_n {
                    kv(&mut a, "exhaustive-n", v);
                }
                if let Some(v) = class {
                    kv(&mut a, "class", v);
                }
                if let Some(v) = eps_grid {
                    kv(&mut a, "eps-grid", v);
                }
                if let Some(v) = n {
                    kv(&mut a, "n", v);
                }
                if let Some(v) = eps {
                    kv(&mut a, "eps", v);
                }
                if let Some(v) = eps0 {
                    kv(&mut a, "eps0", v);
                }
                if let Some(v) = b {
                    kv(&mut a, "B", v);
                }
                kv(&mut a, "width", width);
                kv(&mut a, "samples", samples);
                kv(&mut a, "cap", cap);
                if let Some(v) = sample {
                    kv(&mut a, "sample", v);
                }
                flag(&mut a, "members", *members);
            }
            Command::Closure { class, eps_grid, cap, sample } => {
                a.push(class.to_string());
                kv(&mut a, "eps-grid", eps_grid);
                kv(&mut a, "cap", cap);
                if let Some(v) = sample {
                    kv(&mut a, "sample", v);
                }
            }
            Command::Rounding {
                n,
                b,
                samples,
                trials,
                eps_list,
                confidence,
                min_pass_fraction,
                samples_csv,
            } => {
                kv(&mut a, "n", n);
                kv(&mut a, "B", b);
                kv(&mut a, "samples", samples);
                if let Some(v) = trials {
                    kv(&mut a, "trials", v);
                }
                let list: Vec<String> = eps_list.iter().map(f64::to_string).collect();
                kv(&mut a, "eps-list", list.join(","));
                kv(&mut a, "confidence", confidence);
                kv(&mut a, "min-pass-fraction", min_pass_fraction);
                if let Some(p) = samples_csv {
                    kv(&mut a, "samples-csv", p.display());
                }
            }
            Command::Sweep { specs, eps } => {
                a.extend(specs.iter().map(|s| s.to_string()));
                kv(&mut a, "eps", eps);
            }
        }
        a
    }
}
