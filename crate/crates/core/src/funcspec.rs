//! Textual descriptors shared by the CLI and config files.
//!
//! Functions: `maj:N`, `thr:N:K`, `parity:N`, `dict:N:I`, `tribes:W:N`,
//! `const:N:+1|-1`, `rand:N:SEED`, `randreal:N:SEED`, `scaled:C:SPEC`,
//! `table:PATH`, `robp:PATH`.
//!
//! Bias grids: `a:b:k` (k evenly spaced points in `[a, b]`) or a comma list.
//!
//! Classes: comma-separated function specs followed by closure flags, e.g.
//! `maj:9+restriction` or `dict:3:1,parity:3+restriction+output_negation`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::classes::ClosureFlags;
use crate::error::{ParseError, Result};
use crate::scalar::Scalar;
use crate::table::{Sign, TruthTable};
use crate::{families, io, robp::RobpProgram};

#[derive(Clone, Debug, PartialEq)]
pub enum FunctionSpec {
    Majority(usize),
    Threshold { arity: usize, k: usize },
    Parity(usize),
    Dictator { arity: usize, index: usize },
    Tribes { width: usize, arity: usize },
    Constant { arity: usize, sign: Sign },
    Random { arity: usize, seed: u64 },
    RandomReal { arity: usize, seed: u64 },
    Scaled { factor: f64, inner: Box<FunctionSpec> },
    Table(PathBuf),
    Robp(PathBuf),
}

impl FunctionSpec {
    pub fn build<T: Scalar>(&self) -> Result<TruthTable<T>> {
        match self {
            FunctionSpec::Majority(n) => families::majority(*n),
            FunctionSpec::Threshold { arity, k } => families::threshold(*arity, *k),
            FunctionSpec::Parity(n) => families::parity(*n),
            FunctionSpec::Dictator { arity, index } => families::dictator(*arity, *index),
            FunctionSpec::Tribes { width, arity } => families::tribes(*width, *arity),
            FunctionSpec::Constant { arity, sign } => families::constant(*arity, *sign),
            FunctionSpec::Random { arity, seed } => families::random_boolean(*arity, *seed),
            FunctionSpec::RandomReal { arity, seed } => families::random_bounded(*arity, *seed),
            FunctionSpec::Scaled { factor, inner } => {
                inner.build::<T>()?.scale(&T::from_f64_lossy(*factor))
            }
            FunctionSpec::Table(path) => io::read_table(path),
            FunctionSpec::Robp(path) => RobpProgram::read(path)?.to_table(),
        }
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionSpec::Majority(n) => write!(f, "maj:{n}"),
            FunctionSpec::Threshold { arity, k } => write!(f, "thr:{arity}:{k}"),
            FunctionSpec::Parity(n) => write!(f, "parity:{n}"),
            FunctionSpec::Dictator { arity, index } => write!(f, "dict:{arity}:{index}"),
            FunctionSpec::Tribes { width, arity } => write!(f, "tribes:{width}:{arity}"),
            FunctionSpec::Constant { arity, sign } => write!(f, "const:{arity}:{sign}"),
            FunctionSpec::Random { arity, seed } => write!(f, "rand:{arity}:{seed}"),
            FunctionSpec::RandomReal { arity, seed } => write!(f, "randreal:{arity}:{seed}"),
            FunctionSpec::Scaled { factor, inner } => write!(f, "scaled:{factor}:{inner}"),
            FunctionSpec::Table(p) => write!(f, "table:{}", p.display()),
            FunctionSpec::Robp(p) => write!(f, "robp:{}", p.display()),
        }
    }
}

/// Colon-separated fields with their byte offsets.
struct Fields<'a> {
    input: &'a str,
    rest: &'a str,
    offset: usize,
}

impl<'a> Fields<'a> {
    fn new(input: &'a str, offset: usize) -> Self {
        Fields {
            input,
            rest: &input[offset..],
            offset,
        }
    }

    fn next_field(&mut self, what: &str) -> Result<(&'a str, usize), ParseError> {
        if self.rest.is_empty() && self.offset >= self.input.len() {
            return Err(ParseError::new(
                self.input,
                self.input.len(),
                format!("missing {what}"),
            ));
        }
        let start = self.offset;
        let (field, rest, consumed) = match self.rest.find(':') {
            Some(p) => (&self.rest[..p], &self.rest[p + 1..], p + 1),
            None => (self.rest, "", self.rest.len() + 1),
        };
        self.rest = rest;
        self.offset += consumed;
        if field.is_empty() {
            return Err(ParseError::new(self.input, start, format!("empty {what}")));
        }
        Ok((field, start))
    }

    /// Everything left, including colons.
    fn remainder(&mut self, what: &str) -> Result<(&'a str, usize), ParseError> {
        let start = self.offset.min(self.input.len());
        let r = self.rest;
        self.rest = "";
        self.offset = self.input.len() + 1;
        if r.is_empty() {
            return Err(ParseError::new(self.input, start, format!("missing {what}")));
        }
        Ok((r, start))
    }

    fn number<N: FromStr>(&mut self, what: &str) -> Result<N, ParseError> {
        let (field, pos) = self.next_field(what)?;
        field
            .parse()
            .map_err(|_| ParseError::new(self.input, pos, format!("{what} `{field}` is not valid")))
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.offset <= self.input.len() {
            return Err(ParseError::new(
                self.input,
                self.offset,
                "unexpected trailing fields",
            ));
        }
        Ok(())
    }
}

fn parse_spec_at(input: &str, offset: usize) -> Result<FunctionSpec, ParseError> {
    let mut fields = Fields::new(input, offset);
    let (name, name_pos) = fields.next_field("family name")?;
    let spec = match name {
        "maj" => FunctionSpec::Majority(fields.number("arity")?),
        "thr" => FunctionSpec::Threshold {
            arity: fields.number("arity")?,
            k: fields.number("threshold")?,
        },
        "parity" => FunctionSpec::Parity(fields.number("arity")?),
        "dict" => FunctionSpec::Dictator {
            arity: fields.number("arity")?,
            index: fields.number("variable index")?,
        },
        "tribes" => FunctionSpec::Tribes {
            width: fields.number("tribe width")?,
            arity: fields.number("arity")?,
        },
        "const" => {
            let arity = fields.number("arity")?;
            let (s, pos) = fields.next_field("constant sign")?;
            let sign = match s {
                "+1" | "1" => Sign::Plus,
                "-1" => Sign::Minus,
                _ => return Err(ParseError::new(input, pos, "constant must be +1 or -1")),
            };
            FunctionSpec::Constant { arity, sign }
        }
        "rand" => FunctionSpec::Random {
            arity: fields.number("arity")?,
            seed: fields.number("seed")?,
        },
        "randreal" => FunctionSpec::RandomReal {
            arity: fields.number("arity")?,
            seed: fields.number("seed")?,
        },
        "scaled" => {
            let factor: f64 = fields.number("scale factor")?;
            let (_, pos) = fields.remainder("inner spec")?;
            let inner = parse_spec_at(input, pos)?;
            return Ok(FunctionSpec::Scaled {
                factor,
                inner: Box::new(inner),
            });
        }
        "table" => return Ok(FunctionSpec::Table(fields.remainder("path")?.0.into())),
        "robp" => return Ok(FunctionSpec::Robp(fields.remainder("path")?.0.into())),
        other => {
            return Err(ParseError::new(
                input,
                name_pos,
                format!("unknown function family `{other}`"),
            ))
        }
    };
    fields.finish()?;
    Ok(spec)
}

impl FromStr for FunctionSpec {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        parse_spec_at(s, 0)
    }
}

/// Grid of bias values.
#[derive(Clone, Debug, PartialEq)]
pub enum EpsGrid {
    Linspace { start: f64, end: f64, count: usize },
    List(Vec<f64>),
}

impl EpsGrid {
    pub fn points(&self) -> Vec<f64> {
        match self {
            EpsGrid::Linspace { start, end, count } => match count {
                0 => vec![],
                1 => vec![*start],
                _ => (0..*count)
                    .map(|i| {
                        if i + 1 == *count {
                            *end
                        } else {
                            start + (end - start) * i as f64 / (*count - 1) as f64
                        }
                    })
                    .collect(),
            },
            EpsGrid::List(v) => v.clone(),
        }
    }
}

impl fmt::Display for EpsGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EpsGrid::Linspace { start, end, count } => write!(f, "{start}:{end}:{count}"),
            EpsGrid::List(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

impl FromStr for EpsGrid {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        let check = |v: f64, pos: usize| -> Result<f64, ParseError> {
            if v.is_finite() && v.abs() <= 1.0 {
                Ok(v)
            } else {
                Err(ParseError::new(s, pos, format!("bias {v} outside [-1, 1]")))
            }
        };
        if s.contains(':') {
            let mut fields = Fields::new(s, 0);
            let (a, pa) = fields.next_field("grid start")?;
            let start = check(
                a.parse()
                    .map_err(|_| ParseError::new(s, pa, "grid start is not a number"))?,
                pa,
            )?;
            let (b, pb) = fields.next_field("grid end")?;
            let end = check(
                b.parse()
                    .map_err(|_| ParseError::new(s, pb, "grid end is not a number"))?,
                pb,
            )?;
            let count = fields.number("grid size")?;
            fields.finish()?;
            Ok(EpsGrid::Linspace { start, end, count })
        } else {
            let mut out = Vec::new();
            let mut pos = 0;
            for part in s.split(',') {
                let t = part.trim();
                let v: f64 = t
                    .parse()
                    .map_err(|_| ParseError::new(s, pos, format!("`{t}` is not a number")))?;
                out.push(check(v, pos)?);
                pos += part.len() + 1;
            }
            Ok(EpsGrid::List(out))
        }
    }
}

/// Base functions plus closure flags.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassDescriptor {
    pub bases: Vec<FunctionSpec>,
    pub flags: ClosureFlags,
}

const FLAG_NAMES: [(&str, &str); 5] = [
    ("restriction", "restriction"),
    ("input_negation", "input_negation"),
    ("inneg", "input_negation"),
    ("output_negation", "output_negation"),
    ("outneg", "output_negation"),
];

impl FromStr for ClassDescriptor {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        let mut flags = ClosureFlags::default();
        let mut body = s;
        'strip: loop {
            for (suffix, flag) in FLAG_NAMES {
                if let Some(b) = body.strip_suffix(suffix).and_then(|b| b.strip_suffix('+')) {
                    match flag {
                        "restriction" => flags.restriction = true,
                        "input_negation" => flags.input_negation = true,
                        _ => flags.output_negation = true,
                    }
                    body = b;
                    continue 'strip;
                }
            }
            break;
        }
        if body.is_empty() {
            return Err(ParseError::new(s, 0, "class needs at least one base function"));
        }
        let mut bases = Vec::new();
        let mut pos = 0;
        for part in body.split(',') {
            // parse against the whole input so positions point into it
            let spec = parse_spec_at(&s[..pos + part.len()], pos)
                .map_err(|e| ParseError::new(s, e.position, e.message))?;
            bases.push(spec);
            pos += part.len() + 1;
        }
        Ok(ClassDescriptor { bases, flags })
    }
}

impl fmt::Display for ClassDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.bases.iter().map(|b| b.to_string()).collect();
        f.write_str(&parts.join(","))?;
        if self.flags.restriction {
            f.write_str("+restriction")?;
        }
        if self.flags.input_negation {
            f.write_str("+input_negation")?;
        }
        if self.flags.output_negation {
            f.write_str("+output_negation")?;
        }
        Ok(())
    }
}
