//! Read-once branching programs.
//!
//! States are numbered `1..=width`. Layer `i` reads `x_{i+1}`; each layer
//! holds, per state, the pair `[target_on_plus, target_on_minus]`.

use std::collections::BTreeSet;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::table::{check_arity, Sign, TruthTable};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobpProgram {
    width: u32,
    start: u32,
    accept: BTreeSet<u32>,
    layers: Vec<Vec<[u32; 2]>>,
}

impl RobpProgram {
    pub fn new(
        width: u32,
        start: u32,
        accept: impl IntoIterator<Item = u32>,
        layers: Vec<Vec<[u32; 2]>>,
    ) -> Result<Self> {
        let p = RobpProgram {
            width,
            start,
            accept: accept.into_iter().collect(),
            layers,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let w = self.width;
        if w < 2 {
            return Err(Error::InvalidProgram(format!("width {w} < 2")));
        }
        let in_range = |s: u32| (1..=w).contains(&s);
        if !in_range(self.start) {
            return Err(Error::InvalidProgram(format!(
                "start state {} outside 1..={w}",
                self.start
            )));
        }
        if let Some(s) = self.accept.iter().find(|s| !in_range(**s)) {
            return Err(Error::InvalidProgram(format!(
                "accept state {s} outside 1..={w}"
            )));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.len() != w as usize {
                return Err(Error::InvalidProgram(format!(
                    "layer {} has {} states, width is {w}",
                    i + 1,
                    layer.len()
                )));
            }
            if let Some(t) = layer.iter().flatten().find(|t| !in_range(**t)) {
                return Err(Error::InvalidProgram(format!(
                    "layer {} targets state {t} outside 1..={w}",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn start(&self) -> u32 {
        self.start
    }

    pub fn accept(&self) -> &BTreeSet<u32> {
        &self.accept
    }

    pub fn layers(&self) -> &[Vec<[u32; 2]>] {
        &self.layers
    }

    /// Number of input variables.
    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    /// Runs the layers left to right; +1 iff the final state accepts.
    pub fn eval(&self, x: &[Sign]) -> Result<Sign> {
        if x.len() != self.layers.len() {
            return Err(Error::LengthMismatch {
                expected: self.layers.len(),
                actual: x.len(),
            });
        }
        Ok(self.run(|i| x[i].bit()))
    }

    fn run(&self, minus_at: impl Fn(usize) -> bool) -> Sign {
        let mut state = self.start;
        for (i, layer) in self.layers.iter().enumerate() {
            state = layer[state as usize - 1][minus_at(i) as usize];
        }
        if self.accept.contains(&state) {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn to_table<T: Scalar>(&self) -> Result<TruthTable<T>> {
        check_arity(self.len())?;
        TruthTable::from_predicate(self.len(), |m| self.run(|i| m >> i & 1 == 1) == Sign::Plus)
    }

    /// Width-2 program computing `x_1 x_2 ... x_n` (state 1 = even count of -1s).
    pub fn parity(arity: usize) -> Self {
        RobpProgram {
            width: 2,
            start: 1,
            accept: [1].into(),
            layers: vec![vec![[1, 2], [2, 1]]; arity],
        }
    }

    /// Uniformly random transitions, start state and accept set.
    pub fn random(arity: usize, width: u32, rng: &mut impl Rng) -> Result<Self> {
        if width < 2 {
            return Err(Error::InvalidProgram(format!("width {width} < 2")));
        }
        let layers = (0..arity)
            .map(|_| {
                (0..width)
                    .map(|_| [rng.gen_range(1..=width), rng.gen_range(1..=width)])
                    .collect()
            })
            .collect();
        let start = rng.gen_range(1..=width);
        let accept = (1..=width).filter(|_| rng.gen_bool(0.5)).collect();
        Ok(RobpProgram {
            width,
            start,
            accept,
            layers,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: RobpProgram = serde_json::from_str(text)
            .map_err(|e| Error::InvalidProgram(format!("malformed program file: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("program serializes")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }
}
