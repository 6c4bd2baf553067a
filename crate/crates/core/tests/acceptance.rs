//! Acceptance suite: one PASS/FAIL line per criterion, exact arithmetic throughout.
//! Every check recomputes its quantities by brute force over the cell grid instead of
//! trusting the library's own verifiers.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use deskrand::cantor::{BitSource, BitString, Cylinder, OpenSetCode};
use deskrand::exact::{repair_fast_cauchy, FastCauchyCode, Rational};
use deskrand::fixtures;
use deskrand::layering::{self, FamilyLevel, LayeringPlan, UniformIntegralFamily};
use deskrand::martingale::{
    conditional_martingale, repair_martingale, split_with_oracle_prefix, Martingale, Normalization, Side,
};
use deskrand::schnorr::{
    self, clamp_ml_enumeration, pair, OracleFunctional, Program, TestKind, UniformTest,
};
use deskrand::stepfn::{check_chebyshev, lusin_sandwich, LayeredFunction, StepFunction};

type Outcome = Result<String, String>;
type Corruption = (&'static str, Box<dyn FnOnce(&mut Value)>);
type Criterion = (&'static str, fn() -> Outcome);

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---- brute-force oracles -------------------------------------------------

fn words(len: usize) -> Vec<Vec<bool>> {
    (0..1usize << len).map(|i| (0..len).map(|b| (i >> (len - 1 - b)) & 1 == 1).collect()).collect()
}

fn cell_of(word: &[bool], depth: usize) -> usize {
    word[..depth].iter().fold(0, |acc, &b| 2 * acc + b as usize)
}

fn step_at(g: &StepFunction, word: &[bool]) -> Rational {
    g.values()[cell_of(word, g.depth())].clone()
}

fn layers_at(layers: &[StepFunction], word: &[bool]) -> Rational {
    layers.iter().map(|g| step_at(g, word)).sum()
}

fn covers(code: &OpenSetCode, word: &[bool]) -> bool {
    code.cylinders.iter().any(|c| match c {
        Cylinder::Empty => false,
        Cylinder::Stem(s) => s.len() <= word.len() && s.bits() == &word[..s.len()],
    })
}

fn deepest(code: &OpenSetCode) -> usize {
    code.cylinders
        .iter()
        .map(|c| match c {
            Cylinder::Empty => 0,
            Cylinder::Stem(s) => s.len(),
        })
        .max()
        .unwrap_or(0)
}

/// Measure by counting covered cells on a grid at least as deep as every stem.
fn counted_measure(code: &OpenSetCode) -> Rational {
    let d = deepest(code);
    let hits = words(d).iter().filter(|w| covers(code, w)).count();
    q(hits as i64, 1) * Rational::pow2(-(d as i64))
}

fn interleave(x: &[bool], y: &[bool]) -> Vec<bool> {
    let mut out = Vec::with_capacity(x.len() + y.len());
    for i in 0..x.len().max(y.len()) {
        if i < x.len() {
            out.push(x[i]);
        }
        if i < y.len() {
            out.push(y[i]);
        }
    }
    out
}

fn bs(bits: &[bool]) -> BitString {
    BitString::from_bits(bits.to_vec())
}

// ---- generators ------------------------------------------------------------

/// Mostly-zero layers with a few tall needles, so cut levels get exceeded.
fn spiky_layered(rng: &mut ChaCha8Rng, max_layers: usize, max_depth: usize) -> LayeredFunction {
    let count = rng.gen_range(1..=max_layers);
    let layers = (0..count)
        .map(|_| {
            let d = rng.gen_range(0..=max_depth);
            let tall = 1i64 << d;
            let values = (0..1usize << d)
                .map(|_| match rng.gen_range(0..10) {
                    0..=6 => Rational::zero(),
                    7..=8 => q(rng.gen_range(1..=4), 4),
                    _ => q(rng.gen_range(1..=6) * tall, 32),
                })
                .collect();
            StepFunction::new(d, values).unwrap()
        })
        .collect();
    LayeredFunction::new(layers)
}

/// Layers that read only the even-position bits, so needles survive into the marginal.
fn x_needles(rng: &mut ChaCha8Rng, max_layers: usize, x_depth: usize) -> LayeredFunction {
    let base = spiky_layered(rng, max_layers, x_depth);
    let layers = base
        .layers()
        .iter()
        .map(|g| {
            let d = (2 * g.depth()).saturating_sub(1);
            let values = words(d)
                .iter()
                .map(|w| {
                    let x: Vec<bool> = w.iter().step_by(2).copied().collect();
                    step_at(g, &x)
                })
                .collect();
            StepFunction::new(d, values).unwrap()
        })
        .collect();
    LayeredFunction::new(layers)
}

// ---- criterion 1 -----------------------------------------------------------

/// Recompute the whole plan from `t`'s layers and the plan's indices and cut levels,
/// then check the five assertions cell by cell.
fn check_plan(t: &LayeredFunction, plan: &LayeringPlan) -> Result<(), String> {
    let grid = plan.grid_depth;
    let cells = words(grid);
    let scale = Rational::pow2(-(grid as i64));
    let total: Vec<Rational> = cells.iter().map(|w| layers_at(t.layers(), w)).collect();
    let top = plan.horizon + 1;
    let mut f = Vec::new();
    let mut v = Vec::new();
    for n in 0..=top {
        let k = plan.partial_sum_indices[n];
        let fn_cells: Vec<Rational> = cells.iter().map(|w| layers_at(&t.layers()[..k], w)).collect();
        let residual = |fc: &[Rational]| -> Rational { total.iter().zip(fc).map(|(a, b)| a - b).sum::<Rational>() * &scale };
        let bound = Rational::pow2(-2 * n as i64);
        ensure(residual(&fn_cells) < bound, || format!("k[{n}] leaves residual >= {bound}"))?;
        if k > 0 {
            let prev: Vec<Rational> = cells.iter().map(|w| layers_at(&t.layers()[..k - 1], w)).collect();
            ensure(residual(&prev) >= bound, || format!("k[{n}] = {k} is not least"))?;
        }
        let c = &plan.cut_levels[n];
        ensure(Rational::pow2(-(n as i64)) < *c && *c < Rational::pow2(1 - n as i64), || format!("c[{n}] = {c} outside its interval"))?;
        let vn: Vec<bool> = total.iter().zip(&fn_cells).map(|(a, b)| &(a - b) > c).collect();
        ensure(total.iter().zip(&fn_cells).all(|(a, b)| &(a - b) != c), || format!("c[{n}] = {c} is an atom"))?;
        let recorded: Vec<bool> = cells.iter().map(|w| covers(&plan.exceedance_sets[n], w)).collect();
        ensure(recorded == vn, || format!("V[{n}] differs from {{t - f > c}}"))?;
        // Chebyshev: μ(V_n) <= 2^-2n / c_n
        let mu_v = q(vn.iter().filter(|&&b| b).count() as i64, 1) * &scale;
        ensure(mu_v <= &bound / c, || format!("μ(V[{n}]) = {mu_v} > 2^-2n / c"))?;
        f.push(fn_cells);
        v.push(vn);
    }
    let c = &plan.cut_levels;
    let h_mn = |m: usize, n: usize, i: usize| -> Rational {
        (m + 1..n).map(|j| &f[j][i] + &c[j]).fold(f[n][i].clone(), |a, b| if b < a { b } else { a })
    };
    for m in 0..=plan.horizon {
        let um: Vec<bool> = (0..cells.len()).map(|i| v[m + 1..].iter().any(|vn| vn[i])).collect();
        let recorded: Vec<bool> = cells.iter().map(|w| covers(plan.emitted_test.level(m).unwrap(), w)).collect();
        ensure(recorded == um, || format!("U[{m}] differs from the union of V[n], n > m"))?;
        let mu_u = q(um.iter().filter(|&&b| b).count() as i64, 1) * &scale;
        ensure(mu_u <= Rational::pow2(-(m as i64)), || format!("μ(U[{m}]) = {mu_u} > 2^-{m}"))?;
        for i in 0..cells.len() {
            let h = (m + 1..=top).map(|n| h_mn(m, n, i)).max().unwrap();
            ensure(plan.approximants[m].values()[cell_of(&cells[i], plan.approximants[m].depth())] == h, || {
                format!("h[{m}] differs from the recomputed sup at cell {i}")
            })?;
            ensure(h <= total[i], || format!("h[{m}] > t at cell {i}"))?;
            ensure((total[i] > h) == um[i], || format!("{{t > h[{m}]}} != U[{m}] at cell {i}"))?;
            for (n, cn) in c.iter().enumerate().take(top + 1).skip(m + 1) {
                let gap = (&h - h_mn(m, n, i)).abs();
                ensure(&gap <= cn, || format!("|h[{m}] - h[{m},{n}]| = {gap} > c[{n}] at cell {i}"))?;
            }
        }
    }
    Ok(())
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1001);
    let mut nontrivial = 0;
    let trials = 200;
    for trial in 0..trials {
        let t = spiky_layered(&mut rng, 4, 5);
        let plan = layering::build_saturated(&t).map_err(|e| format!("trial {trial}: {e}"))?;
        ensure(plan.saturated(), || format!("trial {trial}: plan not saturated"))?;
        check_plan(&t, &plan).map_err(|e| format!("trial {trial}: {e}"))?;
        if !plan.emitted_test.level(0).unwrap().is_empty() {
            nontrivial += 1;
        }
    }
    Ok(format!("{trials} layered functions, {nontrivial} with nonempty U_0"))
}

// ---- criterion 2 -----------------------------------------------------------

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x2002);
    let trials = 100;
    let mut pairs = 0usize;
    for trial in 0..trials {
        let n = 1 + trial % 5;
        let d = fixtures::positive_martingale(&mut rng, 2 * n);
        let ws = words(n);
        let mut even = Vec::new();
        let mut odd = Vec::new();
        for w in &ws {
            let e = split_with_oracle_prefix(&d, Side::Even, &bs(w), n).map_err(|e| format!("trial {trial}: {e}"))?;
            let o = split_with_oracle_prefix(&d, Side::Odd, &bs(w), n).map_err(|e| format!("trial {trial}: {e}"))?;
            ensure(e.is_valid() && o.is_valid(), || format!("trial {trial}: a split half is not a martingale"))?;
            even.push(e);
            odd.push(o);
        }
        for (ia, a) in ws.iter().enumerate() {
            for (ib, b) in ws.iter().enumerate() {
                let lhs = even[ib].value(&bs(a)) * odd[ia].value(&bs(b));
                let rhs = d.value(&bs(&interleave(a, b))).clone();
                ensure(lhs == rhs, || format!("trial {trial}: product identity fails at a={a:?} b={b:?}"))?;
                pairs += 1;
            }
        }
    }
    Ok(format!("{trials} martingales, {pairs} prefix pairs, all splits valid"))
}

// ---- criterion 3 -----------------------------------------------------------

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x3003);
    let trials = 200;
    for trial in 0..trials {
        let t = fixtures::random_layered(&mut rng, 4, 6);
        let u = layering::marginal(&t).map_err(|e| format!("trial {trial}: {e}"))?;
        let big_d = t.depth();
        let (xd, yd) = (big_d.div_ceil(2), big_d / 2);
        let mut integral = Rational::zero();
        for x in words(xd) {
            let avg: Rational = words(yd).iter().map(|y| layers_at(t.layers(), &interleave(&x, y))).sum::<Rational>()
                * Rational::pow2(-(yd as i64));
            ensure(layers_at(u.layers(), &x) == avg, || format!("trial {trial}: marginal differs at x={x:?}"))?;
            integral += avg * Rational::pow2(-(xd as i64));
        }
        ensure(&integral == t.declared_integral(), || format!("trial {trial}: brute-force ∫t = {integral}"))?;
        ensure(u.declared_integral() == t.declared_integral(), || format!("trial {trial}: ∫u != ∫t"))?;
    }
    Ok(format!("{trials} interleaved layered functions"))
}

// ---- criterion 4 -----------------------------------------------------------

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4004);
    let trials = 100;
    let (mut oracles, mut equal_cases, mut short_cases) = (0, 0, 0);
    for trial in 0..trials {
        let t = if trial % 2 == 0 { spiky_layered(&mut rng, 3, 4) } else { x_needles(&mut rng, 3, 3) };
        let u = layering::marginal(&t).map_err(|e| e.to_string())?;
        let (horizon, level) = if trial % 2 == 0 {
            (layering::saturation_level(&u), FamilyLevel::PerOracle)
        } else {
            (1, FamilyLevel::Fixed(0))
        };
        let family = UniformIntegralFamily::new(t.clone(), horizon, level).map_err(|e| format!("trial {trial}: {e}"))?;
        let xd = family.oracle_depth();
        let yd = t.depth() / 2;
        let functional = OracleFunctional::new(Program::IntegralFamily { family: Box::new(family.clone()) });
        for x in words(xd) {
            oracles += 1;
            let m = family.member(&bs(&x)).map_err(|e| format!("trial {trial}: {e}"))?;
            ensure(m.rescaled.declared_integral() == &m.h, || format!("trial {trial}: ∫ family != h at {x:?}"))?;
            let u_x: Rational = layers_at(u.layers(), &x);
            ensure(m.u == u_x && m.h <= u_x, || format!("trial {trial}: h/u wrong at {x:?}"))?;
            if m.h == u_x {
                equal_cases += 1;
                for y in words(yd) {
                    let direct = layers_at(t.layers(), &interleave(&x, &y));
                    ensure(layers_at(m.rescaled.layers(), &y) == direct, || format!("trial {trial}: family != t^X at {x:?}"))?;
                }
            } else {
                short_cases += 1;
            }
            // outputs depend only on the declared oracle prefix
            let mut longer = x.clone();
            longer.extend([true, false, true]);
            let mut flipped = x.clone();
            flipped.extend([false, true, false]);
            for query in [pair(0, 0), pair(0, 1), pair(1, 0)] {
                ensure(functional.eval(&bs(&longer), query) == functional.eval(&bs(&flipped), query), || {
                    format!("trial {trial}: output depends on bits past the use bound")
                })?;
            }
        }
    }
    Ok(format!("{trials} functions, {oracles} oracle cells ({equal_cases} with h = u, {short_cases} with h < u)"))
}

// ---- criterion 5 -----------------------------------------------------------

fn random_table(rng: &mut ChaCha8Rng) -> Martingale {
    let depth = rng.gen_range(0..=5);
    match rng.gen_range(0..3) {
        0 => {
            let d = fixtures::positive_martingale(rng, depth);
            let root = q(rng.gen_range(0..=8), 4);
            Martingale::from_fn(depth, |n| d.value(n) * &root)
        }
        1 => {
            let stems: Vec<Cylinder> =
                (0..rng.gen_range(0..4)).map(|_| Cylinder::Stem(bs(&(0..rng.gen_range(0..=depth)).map(|_| rng.gen()).collect::<Vec<_>>()))).collect();
            conditional_martingale(&OpenSetCode::new(stems), Normalization::Unnormalized).unwrap().extend_to(depth)
        }
        _ => {
            let values = (0..(1usize << (depth + 1)) - 1).map(|_| q(rng.gen_range(-4..=8), 4)).collect();
            Martingale::from_table(depth, values).unwrap()
        }
    }
}

fn random_stream(rng: &mut ChaCha8Rng) -> Vec<Rational> {
    let len = rng.gen_range(1..=12);
    if rng.gen_bool(0.4) {
        // valid nonnegative code: steps of at most 2^-(k+1)
        let mut x = q(rng.gen_range(2..=16), 4);
        (0..len)
            .map(|k| {
                let out = x.clone();
                let step = Rational::pow2(-(k as i64) - 2) * q(rng.gen_range(-1..=1), 1);
                x = &x + step;
                out
            })
            .collect()
    } else {
        (0..len).map(|_| q(rng.gen_range(-8..=16), rng.gen_range(1..=8))).collect()
    }
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5005);
    let trials = 500;
    let (mut valid_tables, mut valid_codes) = (0, 0);
    for trial in 0..trials {
        let c = random_table(&mut rng);
        let r = repair_martingale(&c, c.root());
        ensure(r.is_valid(), || format!("trial {trial}: repaired table is not a martingale"))?;
        ensure(repair_martingale(&r, r.root()) == r, || format!("trial {trial}: martingale repair not idempotent"))?;
        if c.is_valid() {
            valid_tables += 1;
            ensure(r == c, || format!("trial {trial}: repair changed a valid martingale"))?;
        }

        let raw = random_stream(&mut rng);
        let len = raw.len() + 4;
        let code = FastCauchyCode::finite(raw.clone());
        let fixed = repair_fast_cauchy(&code);
        let prefix = fixed.prefix(len);
        let valid_out = (0..len).all(|n| (0..n).all(|m| (&prefix[n] - &prefix[m]).abs() <= Rational::pow2(-(m as i64))));
        ensure(valid_out && prefix.iter().all(|x| !x.is_negative()), || format!("trial {trial}: repaired code invalid"))?;
        ensure(repair_fast_cauchy(&FastCauchyCode::finite(prefix.clone())).prefix(len) == prefix, || {
            format!("trial {trial}: code repair not idempotent")
        })?;
        let input = code.prefix(len);
        let valid_in = input.iter().all(|x| !x.is_negative())
            && (0..len).all(|n| (0..n).all(|m| (&input[n] - &input[m]).abs() <= Rational::pow2(-(m as i64))));
        if valid_in {
            valid_codes += 1;
            ensure(prefix == input, || format!("trial {trial}: repair changed a valid code"))?;
        }
    }
    Ok(format!("{trials} tables ({valid_tables} valid) and {trials} codes ({valid_codes} valid)"))
}

// ---- criterion 6 -----------------------------------------------------------

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6006);
    let trials = 500;
    for trial in 0..trials {
        let t = fixtures::random_layered(&mut rng, 3, 5);
        let sum = t.sum();
        let values = sum
            .values()
            .iter()
            .map(|v| if rng.gen_bool(0.3) { (v + q(rng.gen_range(-4..=4), 8)).clamp_nonnegative() } else { v.clone() })
            .collect();
        let g = StepFunction::new(sum.depth(), values).unwrap();
        let cells = words(sum.depth());
        let scale = Rational::pow2(-(sum.depth() as i64));
        let l1: Rational = cells.iter().map(|w| (step_at(&sum, w) - step_at(&g, w)).abs()).sum::<Rational>() * &scale;
        let eps = q(rng.gen_range(1..=8), 8);
        let delta = &l1 / &eps + q(rng.gen_range(0..=2), 16);
        let a = q(rng.gen_range(0..=12), 4);
        let r = q(rng.gen_range(1..=12), 4);
        let report = lusin_sandwich(&t, &g, &a, &r, &eps, &delta).map_err(|e| format!("trial {trial}: {e}"))?;
        ensure(report.l1_distance == l1, || format!("trial {trial}: ‖t - g‖₁ differs"))?;
        let within = |f: &StepFunction, rad: &Rational| -> Rational {
            q(cells.iter().filter(|w| &(step_at(f, w) - &a).abs() < rad).count() as i64, 1) * &scale
        };
        let t_r = within(&sum, &r);
        let g_r = within(&g, &(&r - &eps));
        let t_2 = within(&sum, &(&r - &eps - &eps));
        ensure(t_r >= &g_r - &delta && g_r >= &t_2 - &delta, || format!("trial {trial}: brute-force sandwich fails"))?;
        ensure(report.all_hold(), || format!("trial {trial}: sandwich verdict false"))?;

        let f = fixtures::random_layered(&mut rng, 1, 5).sum();
        let c = q(rng.gen_range(1..=16), 8);
        let fc = words(f.depth());
        let tail = q(fc.iter().filter(|w| step_at(&f, w) > c).count() as i64, 1) * Rational::pow2(-(f.depth() as i64));
        ensure(tail <= f.integral() / &c, || format!("trial {trial}: brute-force Chebyshev fails"))?;
        ensure(check_chebyshev(&f, &c), || format!("trial {trial}: Chebyshev verdict false"))?;
    }
    Ok(format!("{trials} sandwich instances, {trials} Chebyshev instances"))
}

// ---- criterion 7 -----------------------------------------------------------

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7007);
    let trials = 100;
    let mut clamped = 0usize;
    for trial in 0..trials {
        let levels = rng.gen_range(1..=5);
        let test = fixtures::random_schnorr_test(&mut rng, levels, 6);
        let t = schnorr::schnorr_to_integral(&test);
        let grid = test.max_depth().max(t.body.depth());
        for w in words(grid) {
            let count = test.levels().iter().filter(|u| covers(u, &w)).count();
            ensure(t.body.evaluate(&bs(&w)).unwrap() == q(count as i64, 1), || format!("trial {trial}: t != level count"))?;
        }

        let depth = rng.gen_range(1..=6);
        let base = fixtures::positive_martingale(&mut rng, depth);
        let root = q(rng.gen_range(1..=4), 4);
        let d = Martingale::from_fn(depth, |n| base.value(n) * &root);
        let test = schnorr::martingale_to_test(&d, 5).map_err(|e| format!("trial {trial}: {e}"))?;
        for (n, u) in test.indexed_levels() {
            let mu = counted_measure(u);
            ensure(mu == test.measures()[n - 1], || format!("trial {trial}: recorded measure differs at level {n}"))?;
            ensure(mu <= Rational::pow2(-(n as i64)), || format!("trial {trial}: μ(U[{n}]) = {mu}"))?;
        }

        let family = UniformTest::new(
            TestKind::SchnorrTest,
            OracleFunctional::new(Program::RandomCylinders { seed: rng.gen(), max_len: 6 }),
        );
        let oracle = BitSource::Prng { seed: rng.gen() };
        for n in 0..=4u64 {
            let kept = clamp_ml_enumeration(&family, n, &oracle, 40);
            let mu = counted_measure(&kept);
            ensure(mu <= Rational::pow2(-(n as i64)), || format!("trial {trial}: clamped level {n} has measure {mu}"))?;
            clamped += 1;
        }
    }
    Ok(format!("{trials} tests, {trials} martingales, {clamped} clamped adversarial levels"))
}

// ---- criterion 8 -----------------------------------------------------------

fn golden(name: &str, text: &str) -> Result<(), String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("DESKRAND_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).map_err(|e| e.to_string())?;
        std::fs::write(&path, text).map_err(|e| e.to_string())?;
    }
    let stored = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    ensure(stored == text, || format!("{name} differs from the stored golden file"))
}

fn criterion_8() -> Outcome {
    let (split, whole) = fixtures::code_dependence_pair();
    ensure(split.sum() == whole.sum(), || "fixture pair denotes different functions".into())?;
    let horizon = layering::saturation_level(&split).max(layering::saturation_level(&whole));
    let a = layering::build_layering(&split, horizon).map_err(|e| e.to_string())?;
    let b = layering::build_layering(&whole, horizon).map_err(|e| e.to_string())?;
    let text_a = serde_json::to_string_pretty(&a).unwrap() + "\n";
    let text_b = serde_json::to_string_pretty(&b).unwrap() + "\n";
    golden("plan_two_layers.json", &text_a)?;
    golden("plan_one_layer.json", &text_b)?;
    let tests_a = serde_json::to_string(&a.emitted_test).unwrap();
    let tests_b = serde_json::to_string(&b.emitted_test).unwrap();
    ensure(tests_a != tests_b, || "the two decompositions emit the same test".into())?;
    check_plan(&split, &a).map_err(|e| format!("two-layer plan: {e}"))?;
    check_plan(&whole, &b).map_err(|e| format!("one-layer plan: {e}"))?;
    Ok(format!("U_0 = {} vs {}", serde_json::to_string(a.emitted_test.level(0).unwrap()).unwrap(), serde_json::to_string(b.emitted_test.level(0).unwrap()).unwrap()))
}

// ---- criterion 9 -----------------------------------------------------------

fn deskrand(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_deskrand")).args(args).output().expect("binary runs");
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap_or(-1), text)
}

fn run_ok(args: &[&str]) -> Result<(), String> {
    let (code, _) = deskrand(args);
    ensure(code == 0, || format!("`deskrand {}` exited {code}", args.join(" ")))
}

fn edit(src: &Path, dst: &Path, f: impl FnOnce(&mut Value)) -> Result<(), String> {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(src).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    f(&mut v);
    std::fs::write(dst, serde_json::to_string_pretty(&v).unwrap()).map_err(|e| e.to_string())
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();

    // Every producing command, twice.
    let producers: Vec<(&str, Vec<String>)> = vec![
        ("martingale", vec!["gen".into(), "martingale".into(), "--seed".into(), "7".into(), "--depth".into(), "6".into()]),
        ("schnorr-test", vec!["gen".into(), "schnorr-test".into(), "--seed".into(), "1".into(), "--levels".into(), "4".into()]),
        ("layered", vec!["gen".into(), "layered".into(), "--seed".into(), "3".into(), "--depth".into(), "4".into()]),
        ("source", vec!["gen".into(), "source".into(), "--seed".into(), "5".into()]),
    ];
    for (name, args) in &producers {
        for copy in ["a", "b"] {
            let mut a: Vec<&str> = args.iter().map(String::as_str).collect();
            let out = p(&format!("{name}.{copy}.json"));
            a.extend(["--out", &out]);
            run_ok(&a)?;
        }
    }
    let derived: Vec<(&str, Vec<String>)> = vec![
        ("multiplicative", vec!["convert".into(), p("martingale.a.json"), "--to".into(), "multiplicative".into()]),
        ("integral-test", vec!["convert".into(), p("schnorr-test.a.json"), "--to".into(), "integral-test".into()]),
        ("layering-plan", vec!["keylemma".into(), p("layered.a.json")]),
        ("trajectory", vec!["run".into(), p("martingale.a.json"), "--source".into(), "prng:seed=4".into(), "--steps".into(), "8".into()]),
    ];
    for (name, args) in &derived {
        for copy in ["a", "b"] {
            let mut a: Vec<&str> = args.iter().map(String::as_str).collect();
            let out = p(&format!("{name}.{copy}.json"));
            a.extend(["--out", &out]);
            run_ok(&a)?;
        }
    }
    let family = layering::assemble_uniform_family(&fixtures::layered(2, 4), 2, FamilyLevel::PerOracle).map_err(|e| e.to_string())?;
    #[derive(serde::Serialize)]
    struct Envelope {
        kind: &'static str,
        body: Value,
    }
    for copy in ["a", "b"] {
        let doc = Envelope { kind: "uniform-test", body: serde_json::to_value(&family).unwrap() };
        std::fs::write(p(&format!("uniform-test.{copy}.json")), serde_json::to_string_pretty(&doc).unwrap() + "\n").unwrap();
    }

    let kinds = ["martingale", "schnorr-test", "layered", "source", "multiplicative", "integral-test", "layering-plan", "trajectory", "uniform-test"];
    for kind in kinds {
        let (a, b) = (p(&format!("{kind}.a.json")), p(&format!("{kind}.b.json")));
        let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        ensure(ta == tb, || format!("{kind}: regeneration is not byte-identical"))?;
        // `check` includes the round-trip record: deserialize then serialize reproduces the bytes
        let (code, out) = deskrand(&["check", &a, "--format", "csv"]);
        ensure(code == 0 && out.contains("round-trip,identical,identical,pass"), || {
            format!("{kind}: check exited {code}\n{out}")
        })?;
    }

    // Corruptions of well-formed files must be invariant failures.
    let corruptions: Vec<Corruption> = vec![
        ("martingale", Box::new(|v: &mut Value| v["body"]["values"][1] = json!("5/1"))),
        ("schnorr-test", Box::new(|v: &mut Value| v["body"]["measures"][1] = json!("1/2"))),
        ("layered", Box::new(|v: &mut Value| v["body"]["declared_integral"] = json!("99/1"))),
        ("integral-test", Box::new(|v: &mut Value| v["body"]["layers"][0]["values"][0] = json!("-1/1"))),
        ("multiplicative", Box::new(|v: &mut Value| v["body"]["ratios"][0] = json!("3/1"))),
        ("layering-plan", Box::new(|v: &mut Value| v["body"]["cut_levels"][0] = json!("5/1"))),
        ("trajectory", Box::new(|v: &mut Value| v["body"]["points"][2][1] = json!("-1/2"))),
        (
            "uniform-test",
            Box::new(|v: &mut Value| {
                *v = json!({"kind": "uniform-test", "body": {"kind": "schnorr-test", "functional": {"use": [0], "program": {"rule": "listed-levels", "levels": [[], ["0", "10"]]}}}})
            }),
        ),
    ];
    let mut negatives = 0;
    for (kind, f) in corruptions {
        let bad = p(&format!("{kind}.bad.json"));
        edit(Path::new(&p(&format!("{kind}.a.json"))), Path::new(&bad), f)?;
        let (code, out) = deskrand(&["check", &bad, "--format", "csv"]);
        ensure(code == 3, || format!("corrupted {kind}: exit {code}, expected 3\n{out}"))?;
        // key order may change when re-serializing, so demand a failure beyond the round trip
        let substantive = out.lines().any(|l| l.ends_with(",fail") && !l.starts_with("round-trip,"))
            || (!out.contains(",fail") && out.contains("deskrand: "));
        ensure(substantive, || format!("corrupted {kind}: only the round trip failed\n{out}"))?;
        negatives += 1;
    }
    Ok(format!("{} kinds regenerate byte-exactly and round-trip; {negatives} corrupted files exit 3", kinds.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("key-lemma plans", criterion_1),
        ("van Lambalgen split", criterion_2),
        ("Fubini marginal", criterion_3),
        ("uniform integral family", criterion_4),
        ("repair operators", criterion_5),
        ("sandwich and Chebyshev", criterion_6),
        ("test conversions", criterion_7),
        ("code dependence", criterion_8),
        ("CLI round trip", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} [{name}]: PASS ({detail}; {secs:.1}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} [{name}]: FAIL ({why}; {secs:.1}s)", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
