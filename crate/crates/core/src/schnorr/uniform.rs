//! Oracle functionals with declared use bounds, and the uniform tests built on them.
//!
//! A functional maps `(oracle prefix, query)` to a [`Token`]. It never reads more than
//! `use(query)` oracle bits; programs come from a fixed registry of rules.

use num_integer::Roots;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SchnorrError;
use crate::cantor::{interleave_word, measure, BitSource, BitString, Cylinder, OpenSetCode};
use crate::exact::{approximate_limit, repair_fast_cauchy, FastCauchyCode, Rational};
use crate::layering::UniformIntegralFamily;
use crate::martingale::{node_at, node_count, repair_martingale, Martingale, OrderFunction, Side};
use crate::stepfn::LayeredFunction;

pub const DEFAULT_PRECISION: usize = 16;

/// Cantor pairing `⟨a, b⟩`.
pub fn pair(a: u64, b: u64) -> u64 {
    let s = a + b;
    s * (s + 1) / 2 + b
}

pub fn unpair(z: u64) -> (u64, u64) {
    let mut w = ((8 * z as u128 + 1).sqrt() as u64 - 1) / 2;
    while w * (w + 1) / 2 > z {
        w -= 1;
    }
    let b = z - w * (w + 1) / 2;
    (w - b, b)
}

/// One output of a functional.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "token", content = "value", rename_all = "lowercase")]
pub enum Token {
    Cylinder(Cylinder),
    Rational(Rational),
    Natural(u64),
}

impl Token {
    /// Cylinders read as 0.
    pub fn as_rational(&self) -> Rational {
        match self {
            Token::Rational(q) => q.clone(),
            Token::Natural(n) => Rational::from_integer(*n as i64),
            Token::Cylinder(_) => Rational::zero(),
        }
    }

    /// Non-cylinders read as the empty cylinder.
    pub fn as_cylinder(&self) -> Cylinder {
        match self {
            Token::Cylinder(c) => c.clone(),
            _ => Cylinder::Empty,
        }
    }

    pub fn as_natural(&self) -> u64 {
        match self {
            Token::Natural(n) => *n,
            _ => 0,
        }
    }
}

/// A partial enumeration: query `m` halts at stage `halts_at` with `output`, or diverges.
/// Queries past the end diverge.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialEnumeration {
    pub entries: Vec<PartialEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialEntry {
    pub halts_at: Option<u64>,
    pub output: Cylinder,
}

impl PartialEnumeration {
    pub fn run(&self, query: u64, stage: u64) -> Option<&Cylinder> {
        let e = self.entries.get(query as usize)?;
        match e.halts_at {
            Some(h) if h <= stage => Some(&e.output),
            _ => None,
        }
    }

    /// Union of the outputs of all halting queries.
    pub fn denoted_set(&self) -> OpenSetCode {
        OpenSetCode::new(self.entries.iter().filter(|e| e.halts_at.is_some()).map(|e| e.output.clone()).collect())
    }
}

/// The registry of built-in rules.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum Program {
    /// `⟨n, s⟩ ↦ levels[n][s]`, or ∅ past the end. Ignores the oracle.
    ListedLevels { levels: Vec<Vec<Cylinder>> },
    /// Pseudo-random cylinders of length `<= max_len`, XORed with the oracle prefix.
    RandomCylinders { seed: u64, max_len: usize },
    /// Dispatch on the first oracle bit.
    OracleBranch { on_zero: Box<Program>, on_one: Box<Program> },
    /// `⟨node, k⟩ ↦ table(node)`: constant codes, flat beyond the table depth.
    NodeTable { table: Martingale },
    /// `⟨node, k⟩ ↦ table(node) + 2^-(k+1)`.
    ApproachingTable { table: Martingale },
    /// `⟨node, k⟩ ↦` one half of the split of `base`, relative to the oracle.
    SplitHalf { base: Martingale, side: Side },
    /// `k ↦ f(k)`.
    Order { f: OrderFunction },
    /// `⟨m, s⟩ ↦` the output of query `m` if it has halted by stage `s`, else ∅.
    Totalized { partial: PartialEnumeration },
    /// `⟨node, k⟩ ↦` the repaired martingale of `source` at `node`.
    RepairedMartingale { source: Box<OracleFunctional>, depth: usize, precision: usize },
    /// `⟨layer, cell⟩ ↦` the rescaled section of a layered function on interleaved bits.
    IntegralFamily { family: Box<UniformIntegralFamily> },
}

fn merge_use(a: &[usize], b: &[usize]) -> Vec<usize> {
    let len = a.len().max(b.len());
    let at = |t: &[usize], i: usize| t[i.min(t.len() - 1)];
    (0..len).map(|i| at(a, i).max(at(b, i))).collect()
}

impl Program {
    /// The use table this program honors; the last entry extends to all later queries.
    pub fn natural_use(&self) -> Vec<usize> {
        match self {
            Program::ListedLevels { .. }
            | Program::NodeTable { .. }
            | Program::ApproachingTable { .. }
            | Program::Order { .. }
            | Program::Totalized { .. } => vec![0],
            Program::RandomCylinders { max_len, .. } => vec![*max_len],
            Program::OracleBranch { on_zero, on_one } => merge_use(&on_zero.natural_use(), &on_one.natural_use())
                .into_iter()
                .map(|u| u.max(1))
                .collect(),
            Program::SplitHalf { base, .. } => vec![base.depth().div_ceil(2)],
            Program::RepairedMartingale { source, .. } => vec![source.use_table.iter().copied().max().unwrap_or(0)],
            Program::IntegralFamily { family } => vec![family.oracle_depth()],
        }
    }

    /// Evaluate on an oracle prefix of at least `use(query)` bits.
    pub fn eval(&self, oracle: &BitString, query: u64) -> Token {
        match self {
            Program::ListedLevels { levels } => {
                let (n, s) = unpair(query);
                let c = levels.get(n as usize).and_then(|l| l.get(s as usize)).cloned();
                Token::Cylinder(c.unwrap_or(Cylinder::Empty))
            }
            Program::RandomCylinders { seed, max_len } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(query);
                if rng.gen_ratio(1, 4) {
                    return Token::Cylinder(Cylinder::Empty);
                }
                let len = rng.gen_range(0..=*max_len);
                let bits = (0..len).map(|i| rng.gen::<bool>() ^ oracle.bit(i)).collect();
                Token::Cylinder(Cylinder::Stem(BitString::from_bits(bits)))
            }
            Program::OracleBranch { on_zero, on_one } => {
                if !oracle.is_empty() && oracle.bit(0) {
                    on_one.eval(oracle, query)
                } else {
                    on_zero.eval(oracle, query)
                }
            }
            Program::NodeTable { table } => {
                let (node, _) = unpair(query);
                Token::Rational(table.value(&node_at(node as usize)).clone())
            }
            Program::ApproachingTable { table } => {
                let (node, k) = unpair(query);
                Token::Rational(table.value(&node_at(node as usize)) + Rational::pow2(-(k as i64) - 1))
            }
            Program::SplitHalf { base, side } => {
                let (node, _) = unpair(query);
                Token::Rational(split_value(base, *side, oracle, &node_at(node as usize)))
            }
            Program::Order { f } => Token::Natural(f.apply(query)),
            Program::Totalized { partial } => {
                let (m, s) = unpair(query);
                Token::Cylinder(partial.run(m, s).cloned().unwrap_or(Cylinder::Empty))
            }
            Program::RepairedMartingale { source, depth, precision } => {
                let (node, _) = unpair(query);
                let table = repaired_table(source, oracle, *depth, *precision);
                Token::Rational(table.value(&node_at(node as usize)).clone())
            }
            Program::IntegralFamily { family } => {
                let (layer, cell) = unpair(query);
                let member = family.member(oracle).expect("oracle prefix covers the family depth");
                let value = member
                    .rescaled
                    .layers()
                    .get(layer as usize)
                    .and_then(|g| g.values().get(cell as usize))
                    .cloned()
                    .unwrap_or_else(Rational::zero);
                Token::Rational(value)
            }
        }
    }
}

/// Capital of one split half at `node`, reading only the oracle bits the base table can see.
fn split_value(base: &Martingale, side: Side, oracle: &BitString, node: &BitString) -> Rational {
    let Ok(mult) = base.to_multiplicative() else {
        return Rational::zero();
    };
    let mut value = match side {
        Side::Even => base.root().clone(),
        Side::Odd => Rational::one(),
    };
    for m in 1..=node.len() {
        let word = match side {
            Side::Even if 2 * m - 1 <= base.depth() => interleave_word(&node.prefix(m), &oracle.prefix(m - 1)),
            Side::Odd if 2 * m <= base.depth() => interleave_word(&oracle.prefix(m), &node.prefix(m)),
            _ => break,
        };
        value *= &mult.ratio(&word);
    }
    value
}

/// A functional: a registry program plus its declared use table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleFunctional {
    #[serde(rename = "use")]
    use_table: Vec<usize>,
    program: Program,
}

impl OracleFunctional {
    /// Declares the program's own use table.
    pub fn new(program: Program) -> Self {
        OracleFunctional { use_table: program.natural_use(), program }
    }

    /// Declares `use_table` instead; an empty table means use 0.
    pub fn with_use(program: Program, use_table: Vec<usize>) -> Self {
        let use_table = if use_table.is_empty() { vec![0] } else { use_table };
        OracleFunctional { use_table, program }
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn use_table(&self) -> &[usize] {
        &self.use_table
    }

    pub fn use_bound(&self, query: u64) -> usize {
        let i = (query as usize).min(self.use_table.len() - 1);
        self.use_table[i]
    }

    /// Evaluate on a finite oracle prefix, reading only its first `use(query)` bits.
    pub fn eval(&self, oracle: &BitString, query: u64) -> Result<Token, SchnorrError> {
        let needed = self.use_bound(query);
        if oracle.len() < needed {
            return Err(SchnorrError::OracleTooShort { needed, actual: oracle.len() });
        }
        Ok(self.program.eval(&oracle.prefix(needed), query))
    }

    pub fn apply(&self, oracle: &BitSource, query: u64) -> Token {
        self.program.eval(&oracle.prefix(self.use_bound(query)), query)
    }
}

/// Per-node repaired codes, read at `precision`, then repaired into a martingale.
pub fn repaired_table(source: &OracleFunctional, oracle: &BitString, depth: usize, precision: usize) -> Martingale {
    let values = (0..node_count(depth))
        .map(|i| {
            let raw: Vec<Rational> = (0..=precision)
                .map(|k| {
                    let q = pair(i as u64, k as u64);
                    let bits = oracle.prefix(source.use_bound(q).min(oracle.len()));
                    source.program.eval(&bits, q).as_rational()
                })
                .collect();
            let code = repair_fast_cauchy(&FastCauchyCode::finite(raw));
            approximate_limit(&code, precision).expect("repaired code is valid")
        })
        .collect();
    let candidate = Martingale::from_table(depth, values).expect("table has one value per node");
    let root = candidate.root().clone();
    repair_martingale(&candidate, &root)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    SchnorrTest,
    IntegralTest,
    Martingale,
}

/// A test for every oracle at once, decoded from one functional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformTest {
    pub kind: TestKind,
    pub functional: OracleFunctional,
}

impl UniformTest {
    pub fn new(kind: TestKind, functional: OracleFunctional) -> Self {
        UniformTest { kind, functional }
    }

    fn expect_kind(&self, expected: TestKind) -> Result<(), SchnorrError> {
        if self.kind == expected {
            Ok(())
        } else {
            Err(SchnorrError::WrongKind { expected, actual: self.kind })
        }
    }

    /// The first `budget` cylinders enumerated into level `n` under `oracle`.
    pub fn enumerated_level(&self, oracle: &BitSource, n: u64, budget: u64) -> Result<OpenSetCode, SchnorrError> {
        self.expect_kind(TestKind::SchnorrTest)?;
        Ok(OpenSetCode::new((0..budget).map(|s| self.functional.apply(oracle, pair(n, s)).as_cylinder()).collect()))
    }

    /// The martingale table at `depth`, each node read at `precision`.
    pub fn martingale_table(&self, oracle: &BitSource, depth: usize, precision: usize) -> Result<Martingale, SchnorrError> {
        self.expect_kind(TestKind::Martingale)?;
        if let Program::RepairedMartingale { source, precision: p, .. } = &self.functional.program {
            let bits = oracle.prefix(self.functional.use_bound(0));
            return Ok(repaired_table(source, &bits, depth, *p));
        }
        let values = (0..node_count(depth))
            .map(|i| self.functional.apply(oracle, pair(i as u64, precision as u64)).as_rational())
            .collect();
        Ok(Martingale::from_table(depth, values).expect("table has one value per node"))
    }

    /// The integral test for one oracle, given enough oracle bits.
    pub fn integral_member(&self, oracle: &BitString) -> Result<LayeredFunction, SchnorrError> {
        self.expect_kind(TestKind::IntegralTest)?;
        match &self.functional.program {
            Program::IntegralFamily { family } => Ok(family.member(oracle).map_err(Box::new)?.rescaled),
            _ => Err(SchnorrError::WrongKind { expected: TestKind::IntegralTest, actual: self.kind }),
        }
    }
}

/// Replay the enumeration of level `n`, skipping any cylinder that would push the
/// measure of what was kept above `2^-n`.
pub fn clamp_ml_enumeration(family: &UniformTest, n: u64, oracle: &BitSource, budget: u64) -> OpenSetCode {
    let bound = Rational::pow2(-(n as i64));
    let mut kept = OpenSetCode::empty();
    for s in 0..budget {
        let c = family.functional.apply(oracle, pair(n, s)).as_cylinder();
        let mut candidate = kept.clone();
        candidate.push(c);
        if measure(&candidate, usize::MAX) <= bound {
            kept = candidate;
        }
    }
    kept
}

/// `Ψ(⟨m, s⟩)` = the output of query `m` if it halted by stage `s`, else ∅.
pub fn totalize_code(partial: &PartialEnumeration) -> OracleFunctional {
    OracleFunctional::new(Program::Totalized { partial: partial.clone() })
}

/// Turn per-node code streams into a martingale that is valid for every oracle.
///
/// The order functional is returned unchanged.
pub fn uniformize_tt_martingale(
    phi: &OracleFunctional,
    order: &OracleFunctional,
    depth: usize,
    precision: usize,
) -> (UniformTest, OracleFunctional) {
    let program = Program::RepairedMartingale { source: Box::new(phi.clone()), depth, precision };
    (UniformTest::new(TestKind::Martingale, OracleFunctional::new(program)), order.clone())
}
