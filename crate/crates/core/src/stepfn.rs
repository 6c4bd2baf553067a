//! Step functions and layered functions on Cantor space.
//!
//! A [`StepFunction`] of depth `d` is constant on each of the `2^d` cylinders
//! of length `d`. A [`LayeredFunction`] is a finite sum `t = Σ_k g_k` of
//! step functions together with its exact integral.
//!
//! Binary operations always work at the common refinement depth, and results
//! are never re-compressed to a lower depth.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cantor::{BitString, OpenSetCode};
use crate::exact::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StepError {
    #[error("step function value {value} at cell {cell} is negative")]
    NegativeValue { cell: usize, value: Rational },
    #[error("depth {depth} needs {expected} values, got {actual}")]
    LengthMismatch { depth: usize, expected: usize, actual: usize },
    #[error("prefix of length {len} is shorter than depth {depth}")]
    PrefixTooShort { len: usize, depth: usize },
    #[error("declared integral {declared} differs from the layer sum {actual}")]
    IntegralMismatch { declared: Rational, actual: Rational },
    #[error("{op} needs at least one argument")]
    EmptyFamily { op: &'static str },
    #[error("scale takes exactly one argument, got {0}")]
    ScaleArity(usize),
    #[error("scale factor {0} is negative")]
    NegativeScale(Rational),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
}

/// A nonnegative function constant on depth-`depth` cells.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawStep")]
pub struct StepFunction {
    depth: usize,
    values: Vec<Rational>,
}

#[derive(Deserialize)]
struct RawStep {
    depth: usize,
    values: Vec<Rational>,
}

impl TryFrom<RawStep> for StepFunction {
    type Error = StepError;
    fn try_from(raw: RawStep) -> Result<Self, StepError> {
        StepFunction::new(raw.depth, raw.values)
    }
}

impl StepFunction {
    pub fn new(depth: usize, values: Vec<Rational>) -> Result<Self, StepError> {
        let expected = 1usize << depth;
        if values.len() != expected {
            return Err(StepError::LengthMismatch { depth, expected, actual: values.len() });
        }
        if let Some((cell, value)) = values.iter().enumerate().find(|(_, v)| v.is_negative()) {
            return Err(StepError::NegativeValue { cell, value: value.clone() });
        }
        Ok(StepFunction { depth, values })
    }

    pub fn constant(depth: usize, c: Rational) -> Self {
        assert!(!c.is_negative(), "constant must be nonnegative");
        StepFunction { depth, values: vec![c; 1 << depth] }
    }

    pub fn zero(depth: usize) -> Self {
        StepFunction::constant(depth, Rational::zero())
    }

    /// `1_U` at depth `max(depth, deepest stem)`.
    pub fn indicator(code: &OpenSetCode, depth: usize) -> Self {
        let depth = depth.max(code.max_stem_len());
        let values = code
            .cell_indicator(depth)
            .into_iter()
            .map(|b| if b { Rational::one() } else { Rational::zero() })
            .collect();
        StepFunction { depth, values }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn cell(&self, index: usize) -> &Rational {
        &self.values[index]
    }

    /// Same function tabulated at a deeper grid.
    pub fn refine(&self, depth: usize) -> StepFunction {
        assert!(depth >= self.depth, "cannot refine to a shallower depth");
        let shift = depth - self.depth;
        let values = (0..1usize << depth).map(|j| self.values[j >> shift].clone()).collect();
        StepFunction { depth, values }
    }

    pub fn evaluate(&self, prefix: &BitString) -> Result<Rational, StepError> {
        if prefix.len() < self.depth {
            return Err(StepError::PrefixTooShort { len: prefix.len(), depth: self.depth });
        }
        Ok(self.values[prefix.prefix(self.depth).index()].clone())
    }

    pub fn integral(&self) -> Rational {
        let total: Rational = self.values.iter().sum();
        total * Rational::pow2(-(self.depth as i64))
    }

    fn zip_with(&self, other: &StepFunction, f: impl Fn(&Rational, &Rational) -> Rational) -> StepFunction {
        let depth = self.depth.max(other.depth);
        let (a, b) = (self.refine(depth), other.refine(depth));
        let values = a.values.iter().zip(&b.values).map(|(x, y)| f(x, y)).collect();
        StepFunction { depth, values }
    }

    pub fn add(&self, other: &StepFunction) -> StepFunction {
        self.zip_with(other, |x, y| x + y)
    }

    pub fn min(&self, other: &StepFunction) -> StepFunction {
        self.zip_with(other, |x, y| x.min(y).clone())
    }

    pub fn max(&self, other: &StepFunction) -> StepFunction {
        self.zip_with(other, |x, y| x.max(y).clone())
    }

    pub fn scale(&self, c: &Rational) -> StepFunction {
        assert!(!c.is_negative(), "scale factor must be nonnegative");
        StepFunction { depth: self.depth, values: self.values.iter().map(|v| v * c).collect() }
    }

    /// Pointwise `self + c` for a nonnegative constant.
    pub fn shift(&self, c: &Rational) -> StepFunction {
        assert!(!c.is_negative(), "shift must be nonnegative");
        StepFunction { depth: self.depth, values: self.values.iter().map(|v| v + c).collect() }
    }

    /// `self - other`, which must stay nonnegative everywhere.
    pub fn sub_dominated(&self, other: &StepFunction) -> Result<StepFunction, StepError> {
        let diff = self.zip_with(other, |x, y| x - y);
        StepFunction::new(diff.depth, diff.values)
    }

    /// Cell-wise `self <= other` at the common depth.
    pub fn le(&self, other: &StepFunction) -> bool {
        let depth = self.depth.max(other.depth);
        let (a, b) = (self.refine(depth), other.refine(depth));
        a.values.iter().zip(&b.values).all(|(x, y)| x <= y)
    }

    pub fn distribution(&self) -> AtomicDistribution {
        let cell_mass = Rational::pow2(-(self.depth as i64));
        let mut atoms: BTreeMap<Rational, Rational> = BTreeMap::new();
        for v in &self.values {
            *atoms.entry(v.clone()).or_insert_with(Rational::zero) += &cell_mass;
        }
        AtomicDistribution { atoms }
    }

    /// `μ{f > c}` when `strict`, otherwise `μ{f >= c}`.
    pub fn tail_measure(&self, c: &Rational, strict: bool) -> Rational {
        let hits = self.values.iter().filter(|v| if strict { *v > c } else { *v >= c }).count();
        Rational::new(hits as i64, 1) * Rational::pow2(-(self.depth as i64))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Combine {
    Add,
    Min,
    Scale(Rational),
    Sup,
}

pub fn combine(op: &Combine, args: &[StepFunction]) -> Result<StepFunction, StepError> {
    match op {
        Combine::Add => Ok(args.iter().fold(StepFunction::zero(0), |acc, f| acc.add(f))),
        Combine::Min => {
            let (first, rest) = args.split_first().ok_or(StepError::EmptyFamily { op: "min" })?;
            Ok(rest.iter().fold(first.clone(), |acc, f| acc.min(f)))
        }
        Combine::Sup => {
            let (first, rest) = args.split_first().ok_or(StepError::EmptyFamily { op: "sup" })?;
            Ok(rest.iter().fold(first.clone(), |acc, f| acc.max(f)))
        }
        Combine::Scale(c) => {
            if c.is_negative() {
                return Err(StepError::NegativeScale(c.clone()));
            }
            match args {
                [f] => Ok(f.scale(c)),
                _ => Err(StepError::ScaleArity(args.len())),
            }
        }
    }
}

/// Exact `‖a - b‖₁`.
pub fn l1_distance(a: &StepFunction, b: &StepFunction) -> Rational {
    let depth = a.depth.max(b.depth);
    let (a, b) = (a.refine(depth), b.refine(depth));
    let total: Rational = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).sum();
    total * Rational::pow2(-(depth as i64))
}

/// Chebyshev's inequality `μ{f > c} <= ∫f / c` for `f >= 0`, `c > 0`.
pub fn check_chebyshev(f: &StepFunction, c: &Rational) -> bool {
    assert!(c.is_positive(), "Chebyshev level must be positive");
    f.tail_measure(c, true) <= f.integral() / c
}

/// Finite pushforward of the fair-coin measure: value → mass.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomicDistribution {
    pub atoms: BTreeMap<Rational, Rational>,
}

impl AtomicDistribution {
    pub fn total_mass(&self) -> Rational {
        self.atoms.values().sum()
    }

    pub fn mass_at(&self, value: &Rational) -> Rational {
        self.atoms.get(value).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_atom(&self, value: &Rational) -> bool {
        self.atoms.get(value).is_some_and(Rational::is_positive)
    }

    pub fn mass_above(&self, c: &Rational, strict: bool) -> Rational {
        self.atoms.iter().filter(|(v, _)| if strict { *v > c } else { *v >= c }).map(|(_, m)| m).sum()
    }
}

/// `t = Σ_k g_k` with its declared (exact) integral.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawLayered")]
pub struct LayeredFunction {
    layers: Vec<StepFunction>,
    declared_integral: Rational,
}

#[derive(Deserialize)]
struct RawLayered {
    layers: Vec<StepFunction>,
    declared_integral: Rational,
}

impl TryFrom<RawLayered> for LayeredFunction {
    type Error = StepError;
    fn try_from(raw: RawLayered) -> Result<Self, StepError> {
        LayeredFunction::with_declared(raw.layers, raw.declared_integral)
    }
}

impl LayeredFunction {
    pub fn new(layers: Vec<StepFunction>) -> Self {
        let declared_integral = layers.iter().map(StepFunction::integral).sum();
        LayeredFunction { layers, declared_integral }
    }

    pub fn with_declared(layers: Vec<StepFunction>, declared: Rational) -> Result<Self, StepError> {
        let t = LayeredFunction::new(layers);
        if t.declared_integral != declared {
            return Err(StepError::IntegralMismatch { declared, actual: t.declared_integral });
        }
        Ok(t)
    }

    pub fn layers(&self) -> &[StepFunction] {
        &self.layers
    }

    pub fn declared_integral(&self) -> &Rational {
        &self.declared_integral
    }

    /// Deepest layer depth (0 for no layers).
    pub fn depth(&self) -> usize {
        self.layers.iter().map(StepFunction::depth).max().unwrap_or(0)
    }

    /// `Σ_{k<count} g_k` tabulated at `depth`.
    pub fn partial_sum(&self, count: usize, depth: usize) -> StepFunction {
        self.layers[..count.min(self.layers.len())]
            .iter()
            .fold(StepFunction::zero(depth), |acc, g| acc.add(g))
    }

    /// The full sum at the layered function's own depth.
    pub fn sum(&self) -> StepFunction {
        self.partial_sum(self.layers.len(), self.depth())
    }

    pub fn evaluate(&self, prefix: &BitString) -> Result<Rational, StepError> {
        self.layers.iter().map(|g| g.evaluate(prefix)).sum()
    }
}

/// Exact measures and verdicts of one instance of the Lusin-type sandwich.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SandwichReport {
    pub l1_distance: Rational,
    /// `μ(|t - a| < r)`
    pub t_within_r: Rational,
    /// `μ(|g - a| < r - ε)`
    pub g_within_r_minus_eps: Rational,
    /// `μ(|t - a| < r - 2ε)`
    pub t_within_r_minus_2eps: Rational,
    /// `μ(|t - g| >= ε)`
    pub deviation: Rational,
    pub upper_holds: bool,
    pub lower_holds: bool,
    pub chebyshev_holds: bool,
}

impl SandwichReport {
    pub fn all_hold(&self) -> bool {
        self.upper_holds && self.lower_holds && self.chebyshev_holds
    }
}

fn measure_where(depth: usize, cells: impl Iterator<Item = bool>) -> Rational {
    Rational::new(cells.filter(|&b| b).count() as i64, 1) * Rational::pow2(-(depth as i64))
}

/// Check, exactly, that a step function `g` with `‖t − g‖₁ <= εδ` sandwiches the
/// level sets of `t`: outside a set of measure `δ`, `|t − g| < ε`, hence
/// `μ(|t−a| < r) >= μ(|g−a| < r−ε) − δ` and `μ(|g−a| < r−ε) >= μ(|t−a| < r−2ε) − δ`.
pub fn lusin_sandwich(
    t: &LayeredFunction,
    g: &StepFunction,
    a: &Rational,
    r: &Rational,
    eps: &Rational,
    delta: &Rational,
) -> Result<SandwichReport, StepError> {
    if !eps.is_positive() || !r.is_positive() || delta.is_negative() {
        return Err(StepError::PreconditionViolated(format!("need ε > 0, r > 0, δ >= 0 (ε={eps}, r={r}, δ={delta})")));
    }
    let sum = t.sum();
    let l1 = l1_distance(&sum, g);
    let budget = eps * delta;
    if l1 > budget {
        return Err(StepError::PreconditionViolated(format!("‖t − g‖₁ = {l1} exceeds εδ = {budget}")));
    }
    let depth = sum.depth().max(g.depth());
    let (tf, gf) = (sum.refine(depth), g.refine(depth));
    let within = |f: &StepFunction, radius: Rational| -> Rational {
        measure_where(depth, f.values().iter().map(|v| (v - a).abs() < radius))
    };
    let t_within_r = within(&tf, r.clone());
    let g_within_r_minus_eps = within(&gf, r - eps);
    let t_within_r_minus_2eps = within(&tf, r - eps - eps);
    let deviation = measure_where(depth, tf.values().iter().zip(gf.values()).map(|(x, y)| &(x - y).abs() >= eps));
    Ok(SandwichReport {
        upper_holds: t_within_r >= &g_within_r_minus_eps - delta,
        lower_holds: g_within_r_minus_eps >= &t_within_r_minus_2eps - delta,
        chebyshev_holds: &deviation <= delta,
        l1_distance: l1,
        t_within_r,
        g_within_r_minus_eps,
        t_within_r_minus_2eps,
        deviation,
    })
}
