//! Layering of a finite lower-semicomputable function into total approximants.
//!
//! For `t = Σ g_k` the plan picks partial sums `f_n` with small residual integral,
//! atom-free cut levels `c_n`, exceedance sets `V_n = {t - f_n > c_n}` and the test
//! `U_m = ⋃_{n>m} V_n`. The approximants `h_m` agree with `t` exactly off `U_m`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cantor::{canonicalize, interleave_word, measure, BitSource, BitString, OpenSetCode};
use crate::exact::Rational;
use crate::report::{first_failure, Record};
use crate::schnorr::{OracleFunctional, Program, SchnorrTest, TestKind, UniformTest};
use crate::stepfn::{LayeredFunction, StepError, StepFunction};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LayeringError {
    #[error("residual has not vanished by horizon {horizon}; saturation needs {needed}")]
    HorizonTooSmall { horizon: usize, needed: usize },
    #[error("point lies in every emitted level up to budget {budget}")]
    BudgetExceeded { budget: usize },
    #[error("prefix of length {len} is too short, need {needed}")]
    PrefixTooShort { len: usize, needed: usize },
    #[error("budget {h} outside [0, {max}]")]
    BudgetOutOfRange { h: Rational, max: Rational },
    #[error("assertion failed: {0}")]
    AssertionFailed(String),
    #[error(transparent)]
    Step(#[from] StepError),
}

fn residual_after(t: &LayeredFunction, count: usize) -> Rational {
    t.declared_integral() - t.layers()[..count].iter().map(StepFunction::integral).sum::<Rational>()
}

/// Least `k` with `∫ Σ_{j>=k} g_j < 2^-2n`.
fn least_index(t: &LayeredFunction, n: usize) -> usize {
    let bound = Rational::pow2(-2 * n as i64);
    (0..=t.layers().len())
        .find(|&k| residual_after(t, k) < bound)
        .expect("the full sum leaves residual 0")
}

/// `k_n` for `n = 0..=horizon`.
pub fn choose_partial_sums(t: &LayeredFunction, horizon: usize) -> Vec<usize> {
    (0..=horizon).map(|n| least_index(t, n)).collect()
}

/// The first dyadic in `(2^-n, 2^-(n-1))` that is not an atom of the residual's
/// distribution, scanning denominators `2^(n+1), 2^(n+2), ...` and numerators upward.
pub fn choose_cut_level(residual: &StepFunction, n: usize) -> Rational {
    let dist = residual.distribution();
    for j in n + 1.. {
        let lo = 1i64 << (j - n);
        for numer in (lo + 1..2 * lo).step_by(2) {
            let c = Rational::new(numer, 1) * Rational::pow2(-(j as i64));
            if !dist.is_atom(&c) {
                return c;
            }
        }
    }
    unreachable!("finitely many atoms")
}

/// The least `n` whose partial sum is all of `t`.
pub fn saturation_level(t: &LayeredFunction) -> usize {
    (0..).find(|&n| residual_after(t, least_index(t, n)).is_zero()).expect("positive residuals are finitely many")
}

fn cells_above(f: &StepFunction, c: &Rational) -> Vec<bool> {
    f.values().iter().map(|v| v > c).collect()
}

/// The full key-lemma plan on the grid of depth `grid_depth`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayeringPlan {
    pub source: LayeredFunction,
    pub grid_depth: usize,
    pub horizon: usize,
    /// `k_n` for `n = 0..=horizon+1`.
    pub partial_sum_indices: Vec<usize>,
    pub partial_sums: Vec<StepFunction>,
    pub cut_levels: Vec<Rational>,
    pub exceedance_sets: Vec<OpenSetCode>,
    /// `U_m` for `m = 0..=horizon`, starting at level 0.
    pub emitted_test: SchnorrTest,
    pub approximants: Vec<StepFunction>,
    /// First `n` with `f_n = t`, if reached.
    pub saturation_index: Option<usize>,
}

/// `h^m_n = min{f_n, f_{n-1}+c_{n-1}, ..., f_{m+1}+c_{m+1}}` from the recorded sums and cuts.
///
/// The term `f_m + c_m` is left out: with it, points of `V_m \ U_m` would fall
/// below `t`, and `{t > h_m}` would be `U_m ∪ V_m` rather than `U_m`.
fn h_mn(f: &[StepFunction], c: &[Rational], m: usize, n: usize) -> StepFunction {
    (m + 1..n).fold(f[n].clone(), |acc, j| acc.min(&f[j].shift(&c[j])))
}

/// Build the plan with `n` running to `horizon + 1`. Saturation-independent assertions
/// are checked here; the set identity is checked only when saturated.
pub fn build_layering(t: &LayeredFunction, horizon: usize) -> Result<LayeringPlan, LayeringError> {
    let grid = t.depth();
    let top = horizon + 1;
    let total = t.sum().refine(grid);
    let ks = choose_partial_sums(t, top);
    let mut partial_sums = Vec::with_capacity(top + 1);
    let mut cut_levels = Vec::with_capacity(top + 1);
    let mut exceedance = Vec::with_capacity(top + 1);
    let mut exceed_cells = Vec::with_capacity(top + 1);
    let mut saturation_index = None;
    for (n, &k) in ks.iter().enumerate() {
        let f = t.partial_sum(k, grid);
        let residual = total.sub_dominated(&f)?;
        if saturation_index.is_none() && residual.values().iter().all(Rational::is_zero) {
            saturation_index = Some(n);
        }
        let c = choose_cut_level(&residual, n);
        let cells = cells_above(&residual, &c);
        exceedance.push(canonicalize(&OpenSetCode::from_cells(grid, &cells), usize::MAX));
        exceed_cells.push(cells);
        partial_sums.push(f);
        cut_levels.push(c);
    }
    let mut levels = Vec::with_capacity(horizon + 1);
    let mut approximants = Vec::with_capacity(horizon + 1);
    for m in 0..=horizon {
        let cells: Vec<bool> = (0..1usize << grid).map(|i| exceed_cells[m + 1..].iter().any(|v| v[i])).collect();
        levels.push(canonicalize(&OpenSetCode::from_cells(grid, &cells), usize::MAX));
        let h = (m + 1..=top)
            .map(|n| h_mn(&partial_sums, &cut_levels, m, n))
            .reduce(|a, b| a.max(&b))
            .expect("n ranges over a nonempty interval");
        approximants.push(h);
    }
    let emitted_test = SchnorrTest::new(0, levels).map_err(|e| LayeringError::AssertionFailed(e.to_string()))?;
    let plan = LayeringPlan {
        source: t.clone(),
        grid_depth: grid,
        horizon,
        partial_sum_indices: ks,
        partial_sums,
        cut_levels,
        exceedance_sets: exceedance,
        emitted_test,
        approximants,
        saturation_index,
    };
    if let Some(r) = first_failure(&plan.verify()) {
        return Err(LayeringError::AssertionFailed(format!("{}: expected {}, got {}", r.name, r.expected, r.actual)));
    }
    Ok(plan)
}

/// Build a plan whose horizon reaches saturation.
pub fn build_saturated(t: &LayeredFunction) -> Result<LayeringPlan, LayeringError> {
    build_layering(t, saturation_level(t))
}

/// Value and level returned by [`LayeringPlan::evaluate`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Evaluation {
    pub value: Rational,
    pub level: usize,
}

impl LayeringPlan {
    pub fn saturated(&self) -> bool {
        self.saturation_index.is_some()
    }

    pub fn require_saturated(&self) -> Result<&Self, LayeringError> {
        if self.saturated() {
            Ok(self)
        } else {
            Err(LayeringError::HorizonTooSmall { horizon: self.horizon, needed: saturation_level(&self.source) })
        }
    }

    /// The largest `n` in the plan, `horizon + 1`.
    pub fn top(&self) -> usize {
        self.horizon + 1
    }

    pub fn h_mn(&self, m: usize, n: usize) -> StepFunction {
        h_mn(&self.partial_sums, &self.cut_levels, m, n)
    }

    pub fn level(&self, m: usize) -> &OpenSetCode {
        self.emitted_test.level(m).expect("level within horizon")
    }

    /// Every plan invariant, one record each.
    pub fn verify(&self) -> Vec<Record> {
        let mut out = Vec::new();
        let grid = self.grid_depth;
        let total = self.source.sum().refine(grid);
        for (n, f) in self.partial_sums.iter().enumerate() {
            let expected = self.source.partial_sum(self.partial_sum_indices[n], grid);
            out.push(Record::new(format!("f[{n}]"), "partial sum of k[n] layers", if *f == expected { "match" } else { "differ" }, *f == expected));
            let residual = match total.sub_dominated(f) {
                Ok(r) => r,
                Err(e) => {
                    out.push(Record::new(format!("f[{n}] <= t"), "dominated", e, false));
                    continue;
                }
            };
            let bound = Rational::pow2(-2 * n as i64);
            let r = residual.integral();
            out.push(Record::new(format!("residual[{n}]"), format!("< {bound}"), &r, r < bound));
            let c = &self.cut_levels[n];
            let (lo, hi) = (Rational::pow2(-(n as i64)), Rational::pow2(1 - n as i64));
            out.push(Record::new(format!("c[{n}].interval"), format!("in ({lo}, {hi})"), c, &lo < c && c < &hi));
            let atom = residual.distribution().is_atom(c);
            out.push(Record::new(format!("c[{n}].atom"), "no mass", if atom { "atom" } else { "no mass" }, !atom));
            let v = &self.exceedance_sets[n];
            let cells = cells_above(&residual, c);
            out.push(Record::new(format!("V[{n}].cells"), "{t - f > c}", "cell set", v.cell_indicator(grid) == cells));
            let mu = measure(v, usize::MAX);
            let cheb = Rational::pow2(-2 * n as i64) / c;
            out.push(Record::new(format!("V[{n}].chebyshev"), format!("<= {cheb}"), &mu, mu <= cheb && cheb <= lo));
        }
        let v_cells: Vec<Vec<bool>> = self.exceedance_sets.iter().map(|v| v.cell_indicator(grid)).collect();
        for (m, h) in self.approximants.iter().enumerate() {
            let u = self.level(m);
            let union: Vec<bool> = (0..1usize << grid).map(|i| v_cells[m + 1..].iter().any(|v| v[i])).collect();
            out.push(Record::new(format!("U[{m}].union"), "union of V[n], n > m", "cell set", u.cell_indicator(grid) == union));
            let mu = measure(u, usize::MAX);
            let bound = Rational::pow2(-(m as i64));
            out.push(Record::new(format!("U[{m}].bound"), format!("<= {bound}"), &mu, mu <= bound));
            out.push(Record::new(format!("h[{m}] <= t"), "true", h.le(&total), h.le(&total)));
            if self.saturated() {
                let above: Vec<bool> = total.values().iter().zip(h.refine(grid).values()).map(|(a, b)| a > b).collect();
                let ok = above == u.cell_indicator(grid);
                out.push(Record::new(format!("{{t > h[{m}]}} = U[{m}]"), "equal", if ok { "equal" } else { "differ" }, ok));
            }
            for n in m + 1..=self.top() {
                let c = &self.cut_levels[n];
                let hn = self.h_mn(m, n).refine(grid);
                let gap = h.refine(grid).values().iter().zip(hn.values()).map(|(a, b)| (a - b).abs()).max().unwrap_or_else(Rational::zero);
                out.push(Record::new(format!("|h[{m}] - h[{m},{n}]|"), format!("<= {c}"), &gap, &gap <= c));
            }
        }
        out
    }

    /// `h_m(x)` at the least `m <= budget` with `x ∉ U_m`.
    pub fn evaluate(&self, x: &BitString, budget: usize) -> Result<Evaluation, LayeringError> {
        if x.len() < self.grid_depth {
            return Err(LayeringError::PrefixTooShort { len: x.len(), needed: self.grid_depth });
        }
        let cell = x.prefix(self.grid_depth);
        for m in 0..=budget.min(self.horizon) {
            if !self.level(m).covers(&cell) {
                return Ok(Evaluation { value: self.approximants[m].evaluate(&cell)?, level: m });
            }
        }
        Err(LayeringError::BudgetExceeded { budget })
    }
}

/// Evaluate `t` at `x` through a saturated plan, searching levels up to `budget`.
pub fn evaluate(t: &LayeredFunction, x: &BitSource, budget: usize) -> Result<Evaluation, LayeringError> {
    let plan = build_layering(t, saturation_level(t).max(budget))?;
    plan.evaluate(&x.prefix(plan.grid_depth), budget)
}

fn x_depth(depth: usize) -> usize {
    depth.div_ceil(2)
}

fn y_depth(depth: usize) -> usize {
    depth / 2
}

/// `t^X(Y) = t(X ⊕ Y)`, layer by layer; `X` sits on the even positions.
pub fn section(t: &LayeredFunction, x: &BitString) -> Result<LayeredFunction, LayeringError> {
    let needed = x_depth(t.depth());
    if x.len() < needed {
        return Err(LayeringError::PrefixTooShort { len: x.len(), needed });
    }
    let layers = t
        .layers()
        .iter()
        .map(|g| {
            let xs = x.prefix(x_depth(g.depth()));
            let values = BitString::all(y_depth(g.depth())).map(|y| g.cell(interleave_word(&xs, &y).index()).clone()).collect();
            StepFunction::new(y_depth(g.depth()), values)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LayeredFunction::new(layers))
}

/// `u(X) = ∫ t^X(Y) dY`, layer by layer, with `∫u = ∫t` asserted.
pub fn marginal(t: &LayeredFunction) -> Result<LayeredFunction, LayeringError> {
    let layers = t
        .layers()
        .iter()
        .map(|g| {
            let (xd, yd) = (x_depth(g.depth()), y_depth(g.depth()));
            let scale = Rational::pow2(-(yd as i64));
            let values = BitString::all(xd)
                .map(|x| {
                    let s: Rational = BitString::all(yd).map(|y| g.cell(interleave_word(&x, &y).index()).clone()).sum();
                    s * &scale
                })
                .collect();
            StepFunction::new(xd, values)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let u = LayeredFunction::new(layers);
    if u.declared_integral() != t.declared_integral() {
        return Err(LayeringError::AssertionFailed(format!(
            "marginal integral {} differs from {}",
            u.declared_integral(),
            t.declared_integral()
        )));
    }
    Ok(u)
}

/// Truncate `tx` so that its integral is exactly `h`: whole layers while the running
/// integral stays below `h`, one scaled layer, then zeros.
pub fn rescale_to_budget(tx: &LayeredFunction, h: &Rational) -> Result<LayeredFunction, LayeringError> {
    let max = tx.declared_integral();
    if h.is_negative() || h > max {
        return Err(LayeringError::BudgetOutOfRange { h: h.clone(), max: max.clone() });
    }
    let mut lo = Rational::zero();
    let mut layers = Vec::with_capacity(tx.layers().len());
    for g in tx.layers() {
        let hi = &lo + g.integral();
        let layer = if &hi < h {
            g.clone()
        } else if &lo <= h && lo < hi {
            g.scale(&((h - &lo) / (&hi - &lo)))
        } else {
            StepFunction::zero(g.depth())
        };
        layers.push(layer);
        lo = hi;
    }
    let out = LayeredFunction::new(layers);
    if out.declared_integral() != h {
        return Err(LayeringError::AssertionFailed(format!("rescaled integral {} differs from {h}", out.declared_integral())));
    }
    Ok(out)
}

/// Which approximant level the family uses for an oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyLevel {
    /// The least level the oracle avoids, or the horizon if it avoids none.
    PerOracle,
    Fixed(usize),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct FamilyParams {
    base: LayeredFunction,
    horizon: usize,
    level: FamilyLevel,
}

/// Rescaled sections of `base`, one integral test per oracle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "FamilyParams", try_from = "FamilyParams")]
pub struct UniformIntegralFamily {
    base: LayeredFunction,
    horizon: usize,
    level: FamilyLevel,
    marginal: LayeredFunction,
    plan: LayeringPlan,
}

impl From<UniformIntegralFamily> for FamilyParams {
    fn from(f: UniformIntegralFamily) -> Self {
        FamilyParams { base: f.base, horizon: f.horizon, level: f.level }
    }
}

impl TryFrom<FamilyParams> for UniformIntegralFamily {
    type Error = LayeringError;
    fn try_from(p: FamilyParams) -> Result<Self, LayeringError> {
        UniformIntegralFamily::new(p.base, p.horizon, p.level)
    }
}

/// One oracle's view of the family.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FamilyMember {
    pub level: usize,
    pub h: Rational,
    pub u: Rational,
    pub section: LayeredFunction,
    pub rescaled: LayeredFunction,
}

impl UniformIntegralFamily {
    pub fn new(base: LayeredFunction, horizon: usize, level: FamilyLevel) -> Result<Self, LayeringError> {
        let marginal = marginal(&base)?;
        let plan = build_layering(&marginal, horizon)?;
        Ok(UniformIntegralFamily { base, horizon, level, marginal, plan })
    }

    pub fn base(&self) -> &LayeredFunction {
        &self.base
    }

    pub fn marginal(&self) -> &LayeredFunction {
        &self.marginal
    }

    pub fn plan(&self) -> &LayeringPlan {
        &self.plan
    }

    /// Oracle bits read per query.
    pub fn oracle_depth(&self) -> usize {
        x_depth(self.base.depth())
    }

    pub fn member(&self, x: &BitString) -> Result<FamilyMember, LayeringError> {
        let needed = self.oracle_depth();
        if x.len() < needed {
            return Err(LayeringError::PrefixTooShort { len: x.len(), needed });
        }
        let cell = x.prefix(self.plan.grid_depth);
        let level = match self.level {
            FamilyLevel::PerOracle => (0..=self.horizon).find(|&m| !self.plan.level(m).covers(&cell)).unwrap_or(self.horizon),
            FamilyLevel::Fixed(m) => m.min(self.horizon),
        };
        let h = self.plan.approximants[level].evaluate(&cell)?;
        let u = self.marginal.evaluate(&cell)?;
        let section = section(&self.base, x)?;
        let rescaled = rescale_to_budget(&section, &h)?;
        if h == u && rescaled != section {
            return Err(LayeringError::AssertionFailed(format!("h = u = {u} at {cell} but the family differs from the section")));
        }
        Ok(FamilyMember { level, h, u, section, rescaled })
    }
}

/// The uniform integral test `X ↦ rescale(t^X, h(X))`.
pub fn assemble_uniform_family(t: &LayeredFunction, horizon: usize, level: FamilyLevel) -> Result<UniformTest, LayeringError> {
    let family = UniformIntegralFamily::new(t.clone(), horizon, level)?;
    Ok(UniformTest::new(TestKind::IntegralTest, OracleFunctional::new(Program::IntegralFamily { family: Box::new(family) })))
}
