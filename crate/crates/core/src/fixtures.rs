//! Deterministic seeded generators. Every output satisfies its type's invariants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cantor::{measure, BitSource, BitString, Cylinder, OpenSetCode};
use crate::exact::Rational;
use crate::martingale::{from_multiplicative, Martingale, MultiplicativeMartingale};
use crate::schnorr::SchnorrTest;
use crate::stepfn::{LayeredFunction, StepFunction};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_word(rng: &mut impl Rng, len: usize) -> BitString {
    BitString::from_bits((0..len).map(|_| rng.gen()).collect())
}

/// Strictly positive martingale with root 1 and step ratios `k/8`, `1 <= k <= 15`.
pub fn martingale(seed: u64, depth: usize) -> Martingale {
    positive_martingale(&mut rng(seed), depth)
}

pub fn positive_martingale(rng: &mut impl Rng, depth: usize) -> Martingale {
    let interior = (1usize << depth) - 1;
    let mut ratios = Vec::with_capacity(2 * interior);
    for _ in 0..interior {
        let k: i64 = rng.gen_range(1..=15);
        ratios.push(Rational::new(k, 8));
        ratios.push(Rational::new(16 - k, 8));
    }
    from_multiplicative(&MultiplicativeMartingale { depth, root: Rational::one(), ratios })
}

/// Levels `U_1..U_levels`; each gets random stems of length `n..=depth.max(n + 2)`
/// for as long as the bound `2^-n` allows.
pub fn schnorr_test(seed: u64, levels: usize, depth: usize) -> SchnorrTest {
    random_schnorr_test(&mut rng(seed), levels, depth)
}

pub fn random_schnorr_test(rng: &mut impl Rng, levels: usize, depth: usize) -> SchnorrTest {
    let mut out = Vec::with_capacity(levels);
    for n in 1..=levels {
        let bound = Rational::pow2(-(n as i64));
        let mut u = OpenSetCode::empty();
        for _ in 0..8 {
            let len = rng.gen_range(n..=depth.max(n + 2));
            let mut candidate = u.clone();
            candidate.push(Cylinder::Stem(random_word(rng, len)));
            if measure(&candidate, usize::MAX) <= bound {
                u = candidate;
            }
        }
        out.push(u);
    }
    SchnorrTest::new(1, out).expect("levels respect their bounds")
}

/// One to four layers of depth `<= depth` with values `k/4`, `0 <= k <= 5`.
pub fn layered(seed: u64, depth: usize) -> LayeredFunction {
    random_layered(&mut rng(seed), 4, depth)
}

pub fn random_layered(rng: &mut impl Rng, max_layers: usize, depth: usize) -> LayeredFunction {
    let count = rng.gen_range(1..=max_layers);
    let layers = (0..count)
        .map(|_| {
            let d = rng.gen_range(0..=depth);
            let values = (0..1usize << d).map(|_| Rational::new(rng.gen_range(0..=5), 4)).collect();
            StepFunction::new(d, values).expect("values are nonnegative")
        })
        .collect();
    LayeredFunction::new(layers)
}

pub fn source(seed: u64) -> BitSource {
    let mut rng = rng(seed);
    match rng.gen_range(0..3) {
        0 => {
            let len = rng.gen_range(1..=6);
            BitSource::Periodic(random_word(&mut rng, len))
        }
        1 => {
            let denom = rng.gen_range(2..=31u64);
            BitSource::RationalExpansion { numer: rng.gen_range(1..denom), denom }
        }
        _ => BitSource::Prng { seed: rng.gen() },
    }
}

/// Two layer decompositions of one function: `1_[1] + 2·1_[11111]` and its single-layer sum.
/// Their key-lemma plans emit different tests.
pub fn code_dependence_pair() -> (LayeredFunction, LayeredFunction) {
    let g0 = StepFunction::indicator(&OpenSetCode::from_stems(&["1"]), 1);
    let g1 = StepFunction::indicator(&OpenSetCode::from_stems(&["11111"]), 5).scale(&Rational::from_integer(2));
    let split = LayeredFunction::new(vec![g0, g1]);
    let whole = LayeredFunction::new(vec![split.sum()]);
    (split, whole)
}
