//! Martingales on the binary tree.
//!
//! A [`Martingale`] stores `d(σ)` for every node with `|σ| <= depth` in
//! breadth-first order; beyond its depth it is flat, inheriting the value of
//! the depth-`d` ancestor. Fairness `d(σ0) + d(σ1) = 2·d(σ)` is a checkable
//! predicate ([`Martingale::validate`]), so a table read from disk may be
//! unfair until repaired.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cantor::{canonicalize, interleave_word, BitSource, BitString, OpenSetCode};
use crate::exact::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MartingaleError {
    #[error("depth {depth} needs {expected} node values, got {actual}")]
    LengthMismatch { depth: usize, expected: usize, actual: usize },
    #[error("capital at node {node:?} is not positive")]
    ZeroCapitalNode { node: BitString },
    #[error("open set has measure zero")]
    ZeroMeasureSet,
    #[error("oracle prefix has {actual} bits, split to depth {depth} needs {needed}")]
    OracleTooShort { depth: usize, needed: usize, actual: usize },
    #[error("split output failed fairness: {0}")]
    SplitNotFair(FairnessViolation),
}

/// Breadth-first position of `σ`: `2^|σ| - 1 + index(σ)`.
pub fn node_index(node: &BitString) -> usize {
    (1usize << node.len()) - 1 + node.index()
}

pub fn node_at(index: usize) -> BitString {
    let len = (usize::BITS - (index + 1).leading_zeros() - 1) as usize;
    BitString::from_index(index + 1 - (1 << len), len)
}

pub fn node_count(depth: usize) -> usize {
    (1usize << (depth + 1)) - 1
}

/// Why a table is not a martingale.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FairnessViolation {
    Negative { node: BitString, value: Rational },
    Unfair { node: BitString, parent: Rational, left: Rational, right: Rational },
}

impl fmt::Display for FairnessViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FairnessViolation::Negative { node, value } => write!(f, "d({node:?}) = {value} is negative"),
            FairnessViolation::Unfair { node, parent, left, right } => {
                write!(f, "at {node:?}: {left} + {right} != 2 * {parent}")
            }
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawTable")]
pub struct Martingale {
    depth: usize,
    values: Vec<Rational>,
}

#[derive(Deserialize)]
struct RawTable {
    depth: usize,
    values: Vec<Rational>,
}

impl TryFrom<RawTable> for Martingale {
    type Error = MartingaleError;
    fn try_from(raw: RawTable) -> Result<Self, MartingaleError> {
        Martingale::from_table(raw.depth, raw.values)
    }
}

impl Martingale {
    /// A node table in breadth-first order; fairness is not checked here.
    pub fn from_table(depth: usize, values: Vec<Rational>) -> Result<Self, MartingaleError> {
        let expected = node_count(depth);
        if values.len() != expected {
            return Err(MartingaleError::LengthMismatch { depth, expected, actual: values.len() });
        }
        Ok(Martingale { depth, values })
    }

    pub fn from_fn(depth: usize, f: impl Fn(&BitString) -> Rational) -> Self {
        let values = (0..node_count(depth)).map(|i| f(&node_at(i))).collect();
        Martingale { depth, values }
    }

    pub fn constant(c: Rational) -> Self {
        Martingale { depth: 0, values: vec![c] }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn root(&self) -> &Rational {
        &self.values[0]
    }

    /// `d(σ)`, flat beyond the stored depth.
    pub fn value(&self, node: &BitString) -> &Rational {
        if node.len() > self.depth {
            &self.values[node_index(&node.prefix(self.depth))]
        } else {
            &self.values[node_index(node)]
        }
    }

    pub fn validate(&self) -> Result<(), FairnessViolation> {
        for (i, v) in self.values.iter().enumerate() {
            if v.is_negative() {
                return Err(FairnessViolation::Negative { node: node_at(i), value: v.clone() });
            }
        }
        let interior = if self.depth == 0 { 0 } else { node_count(self.depth - 1) };
        for i in 0..interior {
            let (left, right) = (&self.values[2 * i + 1], &self.values[2 * i + 2]);
            let parent = &self.values[i];
            if left + right != parent + parent {
                return Err(FairnessViolation::Unfair {
                    node: node_at(i),
                    parent: parent.clone(),
                    left: left.clone(),
                    right: right.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    pub fn to_multiplicative(&self) -> Result<MultiplicativeMartingale, MartingaleError> {
        if let Some(i) = self.values.iter().position(|v| !v.is_positive()) {
            return Err(MartingaleError::ZeroCapitalNode { node: node_at(i) });
        }
        let ratios = (1..self.values.len()).map(|i| &self.values[i] / &self.values[(i - 1) / 2]).collect();
        Ok(MultiplicativeMartingale { depth: self.depth, root: self.root().clone(), ratios })
    }

    /// Same martingale with a deeper table (flat extension written out).
    pub fn extend_to(&self, depth: usize) -> Martingale {
        assert!(depth >= self.depth);
        Martingale::from_fn(depth, |n| self.value(n).clone())
    }
}

/// Per-step capital ratios `d(σi) / d(σ)` plus the root capital.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct MultiplicativeMartingale {
    pub depth: usize,
    pub root: Rational,
    /// Ratio at every non-root node, breadth-first (node index minus one).
    pub ratios: Vec<Rational>,
}

impl MultiplicativeMartingale {
    /// Ratio at a non-root node; 1 beyond the stored depth.
    pub fn ratio(&self, node: &BitString) -> Rational {
        assert!(!node.is_empty(), "the root has no ratio");
        if node.len() > self.depth {
            Rational::one()
        } else {
            self.ratios[node_index(node) - 1].clone()
        }
    }

    /// Ratios nonnegative and summing to 2 at every pair of siblings.
    pub fn validate(&self) -> Result<(), FairnessViolation> {
        let two = Rational::from_integer(2);
        for (k, pair) in self.ratios.chunks(2).enumerate() {
            let parent = node_at(k);
            for (j, r) in pair.iter().enumerate() {
                if r.is_negative() {
                    return Err(FairnessViolation::Negative { node: parent.child(j == 1), value: r.clone() });
                }
            }
            if pair.len() != 2 || &pair[0] + &pair[1] != two {
                return Err(FairnessViolation::Unfair {
                    node: parent,
                    parent: Rational::one(),
                    left: pair[0].clone(),
                    right: pair.get(1).cloned().unwrap_or_else(Rational::zero),
                });
            }
        }
        Ok(())
    }
}

pub fn from_multiplicative(m: &MultiplicativeMartingale) -> Martingale {
    let mut values = Vec::with_capacity(node_count(m.depth));
    values.push(m.root.clone());
    for i in 1..node_count(m.depth) {
        let v = &values[(i - 1) / 2] * &m.ratios[i - 1];
        values.push(v);
    }
    Martingale { depth: m.depth, values }
}

/// Force any nonnegative node table into a martingale:
/// `ĥ(λ) = root`, `ĥ(σ0) = min{cand(σ0), 2ĥ(σ)}`, `ĥ(σ1) = 2ĥ(σ) − ĥ(σ0)`.
///
/// Negative candidate values are read as 0. A fair nonnegative table with
/// `root = cand(λ)` comes back unchanged.
pub fn repair_martingale(candidate: &Martingale, root: &Rational) -> Martingale {
    let mut values = Vec::with_capacity(candidate.values.len());
    values.push(root.clamp_nonnegative());
    let interior = if candidate.depth == 0 { 0 } else { node_count(candidate.depth - 1) };
    for i in 0..interior {
        let twice = &values[i] + &values[i];
        let left = candidate.values[2 * i + 1].clamp_nonnegative().min(twice.clone());
        let right = twice - &left;
        values.push(left);
        values.push(right);
    }
    Martingale { depth: candidate.depth, values }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Bets on the even coordinate `X` with oracle `Y`: `d̃₀^Y(σ) = d̃(σ ⊕ Y↾(|σ|−1))`.
    Even,
    /// Bets on the odd coordinate `Y` with oracle `X`: `d̃₁^X(τ) = d̃(X↾|τ| ⊕ τ)`.
    Odd,
}

/// One half of the product decomposition of `d`, relative to a finite oracle word.
///
/// The even half carries `d(λ)` as its root capital and the odd half starts at 1,
/// so `d₀^b(a) · d₁^a(b) = d(a ⊕ b)` for `|a| = |b| = depth`.
pub fn split_with_oracle_prefix(
    d: &Martingale,
    side: Side,
    oracle: &BitString,
    depth: usize,
) -> Result<Martingale, MartingaleError> {
    if oracle.len() < depth {
        return Err(MartingaleError::OracleTooShort { depth, needed: depth, actual: oracle.len() });
    }
    let base = d.to_multiplicative()?;
    let mut ratios = Vec::with_capacity(node_count(depth).saturating_sub(1));
    for i in 1..node_count(depth) {
        let node = node_at(i);
        let k = node.len();
        let word = match side {
            Side::Even => interleave_word(&node, &oracle.prefix(k - 1)),
            Side::Odd => interleave_word(&oracle.prefix(k), &node),
        };
        ratios.push(base.ratio(&word));
    }
    let root = match side {
        Side::Even => d.root().clone(),
        Side::Odd => Rational::one(),
    };
    let m = MultiplicativeMartingale { depth, root, ratios };
    m.validate().map_err(MartingaleError::SplitNotFair)?;
    let out = from_multiplicative(&m);
    out.validate().map_err(MartingaleError::SplitNotFair)?;
    Ok(out)
}

pub fn split_van_lambalgen(
    d: &Martingale,
    side: Side,
    oracle: &BitSource,
    depth: usize,
) -> Result<Martingale, MartingaleError> {
    split_with_oracle_prefix(d, side, &oracle.prefix(depth), depth)
}

/// Outcome of checking `d₀^b(a) · d₁^a(b) = d(a ⊕ b)` over all word pairs of one length.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProductIdentityReport {
    pub depth: usize,
    pub pairs: usize,
    pub passed: usize,
    pub first_failure: Option<(BitString, BitString)>,
}

impl ProductIdentityReport {
    pub fn holds(&self) -> bool {
        self.passed == self.pairs
    }
}

impl fmt::Display for ProductIdentityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.holds() { "pass" } else { "fail" };
        write!(f, "{verdict} ({}/{} pairs)", self.passed, self.pairs)
    }
}

/// Exhaustive product-identity check at split depth `n`.
pub fn check_split_product(d: &Martingale, n: usize) -> Result<ProductIdentityReport, MartingaleError> {
    let words: Vec<BitString> = BitString::all(n).collect();
    // d₀^b only depends on b as oracle; build each half once per oracle word
    let evens: Vec<Martingale> = words.iter().map(|b| split_with_oracle_prefix(d, Side::Even, b, n)).collect::<Result<_, _>>()?;
    let odds: Vec<Martingale> = words.iter().map(|a| split_with_oracle_prefix(d, Side::Odd, a, n)).collect::<Result<_, _>>()?;
    let mut report = ProductIdentityReport { depth: n, pairs: words.len() * words.len(), passed: 0, first_failure: None };
    for (ia, a) in words.iter().enumerate() {
        for (ib, b) in words.iter().enumerate() {
            let lhs = evens[ib].value(a) * odds[ia].value(b);
            if &lhs == d.value(&interleave_word(a, b)) {
                report.passed += 1;
            } else if report.first_failure.is_none() {
                report.first_failure = Some((a.clone(), b.clone()));
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapitalTrajectory {
    pub source: String,
    /// `(k, d(A↾k))` for `k = 0..=steps`.
    pub points: Vec<(usize, Rational)>,
}

pub fn run(d: &Martingale, source: &BitSource, steps: usize) -> CapitalTrajectory {
    let prefix = source.prefix(steps);
    let points = (0..=steps).map(|k| (k, d.value(&prefix.prefix(k)).clone())).collect();
    CapitalTrajectory { source: source.to_string(), points }
}

/// A nondecreasing unbounded `ℕ → ℕ` given by a rule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum OrderFunction {
    Identity,
    /// `mul·n + add`, with `mul >= 1`.
    Affine { mul: u64, add: u64 },
    /// `⌊log₂(n + 1)⌋`
    Log2,
    /// `⌊√n⌋`
    Isqrt,
}

impl OrderFunction {
    pub fn apply(&self, n: u64) -> u64 {
        match self {
            OrderFunction::Identity => n,
            OrderFunction::Affine { mul, add } => mul.max(&1) * n + add,
            OrderFunction::Log2 => 63 - (n + 1).leading_zeros() as u64,
            OrderFunction::Isqrt => n.isqrt(),
        }
    }

    /// Monotone on `0..=upto` and strictly larger at `upto` than at 0 (when `upto` is large enough).
    pub fn is_nondecreasing_upto(&self, upto: u64) -> bool {
        (0..upto).all(|n| self.apply(n) <= self.apply(n + 1))
    }
}

/// All `n <= horizon` with `d(A↾f(n)) >= n`. A finite list, never a verdict about success.
pub fn succeeds_against_order(d: &Martingale, source: &BitSource, f: &OrderFunction, horizon: usize) -> Vec<usize> {
    (0..=horizon)
        .filter(|&n| {
            let len = f.apply(n as u64) as usize;
            d.value(&source.prefix(len)) >= &Rational::from_integer(n as i64)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    /// `d(σ) = μ(U ∩ [σ]) / (μ(U)·μ([σ]))`, root capital 1.
    Normalized,
    /// `d(σ) = μ(U ∩ [σ]) / μ([σ])`, root capital `μ(U)`.
    Unnormalized,
}

/// `μ(U ∩ [σ])` for a canonical (prefix-free) code.
fn measure_within(canon: &OpenSetCode, node: &BitString) -> Rational {
    let mut total = Rational::zero();
    for stem in canon.stems() {
        if stem.is_prefix_of(node) {
            return node.measure();
        }
        if node.is_prefix_of(stem) {
            total += stem.measure();
        }
    }
    total
}

/// The conditional-measure martingale of an open set, tabulated to its deepest stem.
pub fn conditional_martingale(code: &OpenSetCode, normalization: Normalization) -> Result<Martingale, MartingaleError> {
    let canon = canonicalize(code, usize::MAX);
    let depth = canon.max_stem_len();
    let scale = match normalization {
        Normalization::Unnormalized => Rational::one(),
        Normalization::Normalized => {
            let mu: Rational = canon.stems().map(BitString::measure).sum();
            if mu.is_zero() {
                return Err(MartingaleError::ZeroMeasureSet);
            }
            mu.recip()
        }
    };
    Ok(Martingale::from_fn(depth, |node| measure_within(&canon, node) / node.measure() * &scale))
}
