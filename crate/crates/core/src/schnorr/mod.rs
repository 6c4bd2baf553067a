//! Schnorr tests, integral tests and the conversions between tests and martingales.
//!
//! A [`SchnorrTest`] is a finite run of levels `U_start, U_start+1, ...` with
//! `μ(U_n) <= 2^-n`; the recorded measures must equal the exact measures.
//! Oracle-parameterized (uniform) tests live in [`uniform`].

pub mod uniform;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cantor::{canonicalize, measure, BitString, Cylinder, OpenSetCode};
use crate::exact::Rational;
use crate::layering::{self, LayeringError};
use crate::martingale::{conditional_martingale, node_at, node_count, Martingale, Normalization};
use crate::report::Record;
use crate::stepfn::{LayeredFunction, StepFunction};

pub use uniform::{
    clamp_ml_enumeration, pair, totalize_code, uniformize_tt_martingale, unpair, OracleFunctional, PartialEntry,
    PartialEnumeration, Program, TestKind, Token, UniformTest,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchnorrError {
    #[error("level {level} has measure {measure}, above 2^-{level}")]
    MeasureBound { level: usize, measure: Rational },
    #[error("level {level} records measure {recorded} but has measure {actual}")]
    MeasureMismatch { level: usize, recorded: Rational, actual: Rational },
    #[error("{levels} levels but {measures} recorded measures")]
    ShapeMismatch { levels: usize, measures: usize },
    #[error("martingale precondition violated: {0}")]
    InvalidMartingale(String),
    #[error("oracle prefix has {actual} bits, query needs {needed}")]
    OracleTooShort { needed: usize, actual: usize },
    #[error("uniform test of kind {actual:?} used as {expected:?}")]
    WrongKind { expected: TestKind, actual: TestKind },
    #[error(transparent)]
    Layering(#[from] Box<LayeringError>),
}

/// Levels `U_start, ..., U_{start+len-1}` with their exact measures.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchnorrTest {
    #[serde(default = "default_start")]
    start: usize,
    levels: Vec<OpenSetCode>,
    measures: Vec<Rational>,
}

fn default_start() -> usize {
    1
}

impl SchnorrTest {
    /// Computes the exact measures and enforces `μ(U_n) <= 2^-n`.
    pub fn new(start: usize, levels: Vec<OpenSetCode>) -> Result<Self, SchnorrError> {
        let measures = levels.iter().map(|u| measure(u, usize::MAX)).collect();
        let test = SchnorrTest { start, levels, measures };
        test.validate()?;
        Ok(test)
    }

    /// Unchecked assembly, e.g. from a file; see [`SchnorrTest::validate`].
    pub fn from_parts(start: usize, levels: Vec<OpenSetCode>, measures: Vec<Rational>) -> Self {
        SchnorrTest { start, levels, measures }
    }

    pub fn empty() -> Self {
        SchnorrTest { start: 1, levels: Vec::new(), measures: Vec::new() }
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn levels(&self) -> &[OpenSetCode] {
        &self.levels
    }

    pub fn measures(&self) -> &[Rational] {
        &self.measures
    }

    /// `(n, U_n)` pairs.
    pub fn indexed_levels(&self) -> impl Iterator<Item = (usize, &OpenSetCode)> {
        self.levels.iter().enumerate().map(move |(i, u)| (self.start + i, u))
    }

    pub fn level(&self, n: usize) -> Option<&OpenSetCode> {
        n.checked_sub(self.start).and_then(|i| self.levels.get(i))
    }

    pub fn max_depth(&self) -> usize {
        self.levels.iter().map(OpenSetCode::max_stem_len).max().unwrap_or(0)
    }

    /// `#{n : [word] ⊆ U_n}`.
    pub fn membership_count(&self, word: &BitString) -> usize {
        self.levels.iter().filter(|u| u.covers(word)).count()
    }

    pub fn validate(&self) -> Result<(), SchnorrError> {
        if self.levels.len() != self.measures.len() {
            return Err(SchnorrError::ShapeMismatch { levels: self.levels.len(), measures: self.measures.len() });
        }
        for (i, (u, recorded)) in self.levels.iter().zip(&self.measures).enumerate() {
            let level = self.start + i;
            let actual = measure(u, usize::MAX);
            if &actual != recorded {
                return Err(SchnorrError::MeasureMismatch { level, recorded: recorded.clone(), actual });
            }
            if actual > Rational::pow2(-(level as i64)) {
                return Err(SchnorrError::MeasureBound { level, measure: actual });
            }
        }
        Ok(())
    }

    /// One record per level for the measure field and one for the bound.
    pub fn check_records(&self) -> Vec<Record> {
        let mut out = vec![Record::equal("levels.count", self.levels.len(), self.measures.len())];
        for (i, u) in self.levels.iter().enumerate() {
            let level = self.start + i;
            let actual = measure(u, usize::MAX);
            match self.measures.get(i) {
                Some(recorded) => out.push(Record::equal(format!("level[{level}].measure"), &actual, recorded)),
                None => out.push(Record::new(format!("level[{level}].measure"), &actual, "missing", false)),
            }
            let bound = Rational::pow2(-(level as i64));
            let ok = actual <= bound;
            out.push(Record::new(format!("level[{level}].bound"), format!("<= {bound}"), actual, ok));
        }
        out
    }
}

/// A layered function used as an integral test.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntegralTest {
    pub body: LayeredFunction,
}

impl IntegralTest {
    pub fn new(body: LayeredFunction) -> Self {
        IntegralTest { body }
    }
}

/// `t = Σ_n 1_{U_n}`, one indicator layer per level at that level's own depth.
pub fn schnorr_to_integral(test: &SchnorrTest) -> IntegralTest {
    let layers = test
        .levels
        .iter()
        .map(|u| {
            let canon = canonicalize(u, usize::MAX);
            StepFunction::indicator(&canon, canon.max_stem_len())
        })
        .collect();
    IntegralTest::new(LayeredFunction::new(layers))
}

/// The Schnorr test emitted by the key-lemma layering of `t`.
pub fn integral_to_schnorr(t: &IntegralTest, horizon: usize) -> Result<SchnorrTest, SchnorrError> {
    let plan = layering::build_layering(&t.body, horizon).map_err(Box::new)?;
    Ok(plan.emitted_test)
}

/// Recover a Schnorr test from an integral test whose layers are 0/1 indicators.
///
/// Layer `k` becomes `U_{start+k}`; `start` is 1 when every bound allows it, else 0.
/// Returns `None` when some layer is not an indicator or the bounds fail even from 0.
pub fn indicator_layers_to_schnorr(t: &IntegralTest) -> Option<SchnorrTest> {
    let mut levels = Vec::new();
    for g in t.body.layers() {
        if !g.values().iter().all(|v| v.is_zero() || *v == Rational::one()) {
            return None;
        }
        let cells: Vec<bool> = g.values().iter().map(|v| !v.is_zero()).collect();
        levels.push(OpenSetCode::from_cells(g.depth(), &cells));
    }
    SchnorrTest::new(1, levels.clone()).or_else(|_| SchnorrTest::new(0, levels)).ok()
}

/// `U_n` = minimal nodes (breadth-first, within the stored depth) with `d(σ) > 2^n`,
/// for `n = 1..=levels`. Needs a valid `d` with `d(λ) <= 1`.
pub fn martingale_to_test(d: &Martingale, levels: usize) -> Result<SchnorrTest, SchnorrError> {
    if let Err(v) = d.validate() {
        return Err(SchnorrError::InvalidMartingale(v.to_string()));
    }
    if d.root() > &Rational::one() {
        return Err(SchnorrError::InvalidMartingale(format!("root capital {} exceeds 1", d.root())));
    }
    let mut out = Vec::with_capacity(levels);
    for n in 1..=levels {
        let threshold = Rational::pow2(n as i64);
        let mut stems: Vec<BitString> = Vec::new();
        for i in 0..node_count(d.depth()) {
            let node = node_at(i);
            if d.value(&node) > &threshold && !stems.iter().any(|s| s.is_prefix_of(&node)) {
                stems.push(node);
            }
        }
        let u = OpenSetCode::new(stems.into_iter().map(Cylinder::Stem).collect());
        // Ville: μ{sup_k d(X↾k) > 2^n} <= d(λ)·2^-n
        let mu = measure(&u, usize::MAX);
        let bound = d.root() * Rational::pow2(-(n as i64));
        if mu > bound {
            return Err(SchnorrError::MeasureBound { level: n, measure: mu });
        }
        out.push(u);
    }
    SchnorrTest::new(1, out)
}

/// `d = Σ_n d_n` with `d_n(σ) = μ(U_n ∩ [σ]) / μ([σ])`, so `d(λ) = Σ_n μ(U_n)`.
pub fn test_to_martingale(test: &SchnorrTest) -> Martingale {
    let depth = test.max_depth();
    let parts: Vec<Martingale> = test
        .levels
        .iter()
        .map(|u| conditional_martingale(u, Normalization::Unnormalized).expect("unnormalized conditional is total"))
        .collect();
    Martingale::from_fn(depth, |node| parts.iter().map(|d| d.value(node).clone()).sum())
}
