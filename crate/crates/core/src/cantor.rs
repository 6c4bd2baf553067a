//! Finite words, cylinders and open-set codes on Cantor space under the
//! fair-coin measure, plus the even/odd interleaving of sequences.
//!
//! The join `A ⊕ B` puts `A` on the even positions and `B` on the odd ones.
//! Every other module goes through [`join_sources`] / [`interleave`] instead
//! of re-deriving that parity.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::exact::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CantorError {
    #[error("invalid bit string {0:?}")]
    BitString(String),
    #[error("invalid bit source spec {0:?}")]
    SourceSpec(String),
}

/// A finite binary word; the empty word is allowed.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn empty() -> Self {
        BitString(Vec::new())
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    /// The word of length `len` whose bits spell `index` most-significant first.
    pub fn from_index(index: usize, len: usize) -> Self {
        BitString((0..len).map(|i| (index >> (len - 1 - i)) & 1 == 1).collect())
    }

    /// All `2^len` words of length `len` in lexicographic order.
    pub fn all(len: usize) -> impl Iterator<Item = BitString> {
        (0..1usize << len).map(move |i| BitString::from_index(i, len))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn bit(&self, i: usize) -> bool {
        self.0[i]
    }

    /// Lexicographic cell index among words of the same length.
    pub fn index(&self) -> usize {
        self.0.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn prefix(&self, len: usize) -> BitString {
        BitString(self.0[..len].to_vec())
    }

    pub fn child(&self, bit: bool) -> BitString {
        let mut bits = self.0.clone();
        bits.push(bit);
        BitString(bits)
    }

    pub fn parent(&self) -> Option<BitString> {
        if self.0.is_empty() {
            None
        } else {
            Some(BitString(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn push(&mut self, bit: bool) {
        self.0.push(bit);
    }

    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut bits = self.0.clone();
        bits.extend_from_slice(&other.0);
        BitString(bits)
    }

    /// Bits at even positions `0, 2, 4, ...`.
    pub fn even_bits(&self) -> BitString {
        BitString(self.0.iter().step_by(2).copied().collect())
    }

    /// Bits at odd positions `1, 3, 5, ...`.
    pub fn odd_bits(&self) -> BitString {
        BitString(self.0.iter().skip(1).step_by(2).copied().collect())
    }

    /// Fair-coin measure of the cylinder `[self]`.
    pub fn measure(&self) -> Rational {
        Rational::pow2(-(self.len() as i64))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl FromStr for BitString {
    type Err = CantorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(CantorError::BitString(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitString)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?.parse().map_err(serde::de::Error::custom)
    }
}

pub const EMPTY_MARKER: &str = "∅";

/// A basic open set: `[σ]` or the empty set.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Cylinder {
    Empty,
    Stem(BitString),
}

impl Cylinder {
    pub fn stem(s: &str) -> Cylinder {
        Cylinder::Stem(s.parse().expect("valid stem literal"))
    }

    pub fn measure(&self) -> Rational {
        match self {
            Cylinder::Empty => Rational::zero(),
            Cylinder::Stem(s) => s.measure(),
        }
    }
}

impl fmt::Display for Cylinder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cylinder::Empty => f.write_str(EMPTY_MARKER),
            Cylinder::Stem(s) => write!(f, "{s}"),
        }
    }
}

impl FromStr for Cylinder {
    type Err = CantorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == EMPTY_MARKER {
            Ok(Cylinder::Empty)
        } else {
            s.parse().map(Cylinder::Stem)
        }
    }
}

impl Serialize for Cylinder {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Cylinder {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?.parse().map_err(serde::de::Error::custom)
    }
}

/// A finite code for an open set: the union of its cylinders.
#[derive(Clone, Default, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OpenSetCode {
    pub cylinders: Vec<Cylinder>,
}

impl OpenSetCode {
    pub fn new(cylinders: Vec<Cylinder>) -> Self {
        OpenSetCode { cylinders }
    }

    pub fn empty() -> Self {
        OpenSetCode::default()
    }

    pub fn from_stems(stems: &[&str]) -> Self {
        OpenSetCode::new(stems.iter().map(|s| Cylinder::stem(s)).collect())
    }

    /// The union of the depth-`depth` cells flagged in `cells` (indexed lexicographically).
    pub fn from_cells(depth: usize, cells: &[bool]) -> Self {
        let cylinders = cells
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .map(|(i, _)| Cylinder::Stem(BitString::from_index(i, depth)))
            .collect();
        canonicalize(&OpenSetCode::new(cylinders), usize::MAX)
    }

    pub fn len(&self) -> usize {
        self.cylinders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cylinders.is_empty()
    }

    pub fn push(&mut self, c: Cylinder) {
        self.cylinders.push(c);
    }

    pub fn union(&self, other: &OpenSetCode) -> OpenSetCode {
        let mut cylinders = self.cylinders.clone();
        cylinders.extend(other.cylinders.iter().cloned());
        OpenSetCode::new(cylinders)
    }

    pub fn stems(&self) -> impl Iterator<Item = &BitString> {
        self.cylinders.iter().filter_map(|c| match c {
            Cylinder::Stem(s) => Some(s),
            Cylinder::Empty => None,
        })
    }

    pub fn max_stem_len(&self) -> usize {
        self.stems().map(BitString::len).max().unwrap_or(0)
    }

    /// Whether the cylinder `[word]` lies inside the union, i.e. some stem is a prefix of `word`.
    pub fn covers(&self, word: &BitString) -> bool {
        self.stems().any(|s| s.is_prefix_of(word))
    }

    /// Membership indicator of every depth-`depth` cell. Stems longer than `depth`
    /// only partially cover a cell and do not count.
    pub fn cell_indicator(&self, depth: usize) -> Vec<bool> {
        let mut cells = vec![false; 1 << depth];
        for stem in self.stems() {
            if stem.len() > depth {
                continue;
            }
            let span = depth - stem.len();
            let base = stem.index() << span;
            for c in &mut cells[base..base + (1 << span)] {
                *c = true;
            }
        }
        cells
    }
}

/// Normal form of the union of the first `inspected` cylinders: prefix-free,
/// complete sibling pairs merged into their parent, `Empty` dropped, sorted.
pub fn canonicalize(code: &OpenSetCode, inspected: usize) -> OpenSetCode {
    let mut stems: BTreeSet<BitString> = BTreeSet::new();
    for c in code.cylinders.iter().take(inspected) {
        if let Cylinder::Stem(s) = c {
            stems.insert(s.clone());
        }
    }
    // drop any stem that has a proper prefix in the set
    let kept: Vec<BitString> = stems
        .iter()
        .filter(|s| !(0..s.len()).any(|k| stems.contains(&s.prefix(k))))
        .cloned()
        .collect();
    let mut stems: BTreeSet<BitString> = kept.into_iter().collect();

    // merge siblings, deepest first; a merged parent may merge again one level up
    let max_len = stems.iter().map(BitString::len).max().unwrap_or(0);
    for len in (1..=max_len).rev() {
        let at_len: Vec<BitString> = stems.iter().filter(|s| s.len() == len && !s.bit(len - 1)).cloned().collect();
        for zero in at_len {
            let parent = zero.parent().expect("nonempty stem");
            let one = parent.child(true);
            if stems.contains(&one) {
                stems.remove(&zero);
                stems.remove(&one);
                stems.insert(parent);
            }
        }
    }
    OpenSetCode::new(stems.into_iter().map(Cylinder::Stem).collect())
}

/// Exact fair-coin measure of the union of the first `inspected` cylinders.
pub fn measure(code: &OpenSetCode, inspected: usize) -> Rational {
    canonicalize(code, inspected).stems().map(BitString::measure).sum()
}

/// A streamed open-set code; only its truncations denote sets.
#[derive(Clone)]
pub struct CylinderStream {
    rule: Arc<dyn Fn(usize) -> Cylinder + Send + Sync>,
}

impl CylinderStream {
    pub fn new<F>(rule: F) -> Self
    where
        F: Fn(usize) -> Cylinder + Send + Sync + 'static,
    {
        CylinderStream { rule: Arc::new(rule) }
    }

    pub fn get(&self, s: usize) -> Cylinder {
        (self.rule)(s)
    }

    pub fn truncate(&self, budget: usize) -> OpenSetCode {
        OpenSetCode::new((0..budget).map(|s| self.get(s)).collect())
    }
}

impl fmt::Debug for CylinderStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CylinderStream(<rule>)")
    }
}

/// The partial function `σ ⊕ τ` on positions: `2n ↦ σ(n)`, `2n+1 ↦ τ(n)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PartialInterleaving {
    pub assignments: BTreeMap<usize, bool>,
}

impl PartialInterleaving {
    pub fn get(&self, pos: usize) -> Option<bool> {
        self.assignments.get(&pos).copied()
    }

    /// The word when the domain is an initial segment of the naturals.
    pub fn as_word(&self) -> Option<BitString> {
        let len = self.assignments.len();
        if self.assignments.keys().copied().eq(0..len) {
            Some(BitString(self.assignments.values().copied().collect()))
        } else {
            None
        }
    }
}

pub fn interleave(sigma: &BitString, tau: &BitString) -> PartialInterleaving {
    let mut assignments = BTreeMap::new();
    for (n, &b) in sigma.bits().iter().enumerate() {
        assignments.insert(2 * n, b);
    }
    for (n, &b) in tau.bits().iter().enumerate() {
        assignments.insert(2 * n + 1, b);
    }
    PartialInterleaving { assignments }
}

/// `interleave` for the total case `|σ| ∈ {|τ|, |τ|+1}`.
pub fn interleave_word(sigma: &BitString, tau: &BitString) -> BitString {
    debug_assert!(sigma.len() == tau.len() || sigma.len() == tau.len() + 1);
    interleave(sigma, tau).as_word().expect("lengths make the interleaving total")
}

/// A total deterministic infinite bit sequence given by a named rule.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum BitSource {
    /// `word^ω`; the word is nonempty.
    Periodic(BitString),
    /// Binary expansion of `numer/denom` with `0 <= numer < denom`.
    RationalExpansion { numer: u64, denom: u64 },
    Prng { seed: u64 },
    Join(Box<BitSource>, Box<BitSource>),
    Even(Box<BitSource>),
    Odd(Box<BitSource>),
}

impl BitSource {
    pub fn periodic(word: &str) -> BitSource {
        let w: BitString = word.parse().expect("valid word literal");
        assert!(!w.is_empty(), "periodic word must be nonempty");
        BitSource::Periodic(w)
    }

    pub fn bit(&self, i: usize) -> bool {
        match self {
            BitSource::Periodic(w) => w.bit(i % w.len()),
            BitSource::RationalExpansion { numer, denom } => {
                let q = *denom as u128;
                let r = (*numer as u128 % q) * pow_mod(2, i as u128, q) % q;
                2 * r >= q
            }
            BitSource::Prng { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_word_pos((i / 32) as u128);
                (rng.next_u32() >> (i % 32)) & 1 == 1
            }
            BitSource::Join(a, b) => {
                if i.is_multiple_of(2) {
                    a.bit(i / 2)
                } else {
                    b.bit(i / 2)
                }
            }
            BitSource::Even(s) => s.bit(2 * i),
            BitSource::Odd(s) => s.bit(2 * i + 1),
        }
    }

    pub fn prefix(&self, len: usize) -> BitString {
        BitString((0..len).map(|i| self.bit(i)).collect())
    }
}

fn pow_mod(mut base: u128, mut exp: u128, modulus: u128) -> u128 {
    let mut acc = 1 % modulus;
    base %= modulus;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % modulus;
        }
        base = base * base % modulus;
        exp >>= 1;
    }
    acc
}

pub fn join_sources(a: &BitSource, b: &BitSource) -> BitSource {
    BitSource::Join(Box::new(a.clone()), Box::new(b.clone()))
}

pub fn even_part(s: &BitSource) -> BitSource {
    BitSource::Even(Box::new(s.clone()))
}

pub fn odd_part(s: &BitSource) -> BitSource {
    BitSource::Odd(Box::new(s.clone()))
}

impl fmt::Display for BitSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BitSource::Periodic(w) => write!(f, "periodic:{w}"),
            BitSource::RationalExpansion { numer, denom } => write!(f, "rational:{numer}/{denom}"),
            BitSource::Prng { seed } => write!(f, "prng:seed={seed}"),
            BitSource::Join(a, b) => write!(f, "join({a},{b})"),
            BitSource::Even(s) => write!(f, "even({s})"),
            BitSource::Odd(s) => write!(f, "odd({s})"),
        }
    }
}

impl FromStr for BitSource {
    type Err = CantorError;

    fn from_str(spec: &str) -> Result<Self, Self::Err> {
        let err = || CantorError::SourceSpec(spec.to_string());
        let s = spec.trim();
        if let Some(word) = s.strip_prefix("periodic:") {
            let w: BitString = word.parse().map_err(|_| err())?;
            if w.is_empty() {
                return Err(err());
            }
            return Ok(BitSource::Periodic(w));
        }
        if let Some(frac) = s.strip_prefix("rational:") {
            let (n, d) = frac.split_once('/').ok_or_else(err)?;
            let numer: u64 = n.trim().parse().map_err(|_| err())?;
            let denom: u64 = d.trim().parse().map_err(|_| err())?;
            if denom == 0 || numer >= denom {
                return Err(err());
            }
            return Ok(BitSource::RationalExpansion { numer, denom });
        }
        if let Some(seed) = s.strip_prefix("prng:seed=") {
            return Ok(BitSource::Prng { seed: seed.trim().parse().map_err(|_| err())? });
        }
        let inner = |prefix: &str| s.strip_prefix(prefix).and_then(|r| r.strip_suffix(')'));
        if let Some(args) = inner("join(") {
            let split = top_level_comma(args).ok_or_else(err)?;
            let a = args[..split].parse()?;
            let b = args[split + 1..].parse()?;
            return Ok(BitSource::Join(Box::new(a), Box::new(b)));
        }
        if let Some(arg) = inner("even(") {
            return Ok(BitSource::Even(Box::new(arg.parse()?)));
        }
        if let Some(arg) = inner("odd(") {
            return Ok(BitSource::Odd(Box::new(arg.parse()?)));
        }
        Err(err())
    }
}

fn top_level_comma(s: &str) -> Option<usize> {
    let mut depth = 0i32;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => return Some(i),
            _ => {}
        }
    }
    None
}

impl Serialize for BitSource {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitSource {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: &str) -> BitString {
        s.parse().unwrap()
    }

    /// Brute-force measure: count depth-`depth` cells lying inside some stem.
    fn grid_measure(code: &OpenSetCode, depth: usize) -> Rational {
        let hits = BitString::all(depth).filter(|x| code.covers(x)).count();
        Rational::new(hits as i64, 1 << depth)
    }

    #[test]
    fn canonicalize_examples() {
        assert_eq!(canonicalize(&OpenSetCode::from_stems(&["0", "01"]), 99), OpenSetCode::from_stems(&["0"]));
        assert_eq!(canonicalize(&OpenSetCode::from_stems(&["00", "01"]), 99), OpenSetCode::from_stems(&["0"]));
        assert_eq!(canonicalize(&OpenSetCode::empty(), 99), OpenSetCode::empty());
        // cascading merge up to the full space
        let full = canonicalize(&OpenSetCode::from_stems(&["00", "01", "1"]), 99);
        assert_eq!(full, OpenSetCode::from_stems(&[""]));
        let with_empty = OpenSetCode::new(vec![Cylinder::Empty, Cylinder::stem("10")]);
        assert_eq!(canonicalize(&with_empty, 99), OpenSetCode::from_stems(&["10"]));
    }

    #[test]
    fn canonicalize_respects_inspection_budget() {
        let code = OpenSetCode::from_stems(&["0", "1"]);
        assert_eq!(canonicalize(&code, 1), OpenSetCode::from_stems(&["0"]));
        assert_eq!(measure(&code, 1), Rational::new(1, 2));
    }

    #[test]
    fn measure_examples() {
        assert_eq!(measure(&OpenSetCode::from_stems(&["0", "10"]), 99), Rational::new(3, 4));
        assert_eq!(measure(&OpenSetCode::empty(), 99), Rational::zero());
        let code = OpenSetCode::from_stems(&["0", "01"]);
        assert_eq!(measure(&code, 99), Rational::new(1, 2));
        assert_eq!(grid_measure(&code, 2), Rational::new(1, 2));
    }

    #[test]
    fn interleave_examples() {
        assert_eq!(interleave(&w("01"), &w("1")).as_word(), Some(w("011")));
        assert!(interleave(&w(""), &w("")).assignments.is_empty());
        let p = interleave(&w("1"), &w("01"));
        assert_eq!(p.get(0), Some(true));
        assert_eq!(p.get(1), Some(false));
        assert_eq!(p.get(2), None);
        assert_eq!(p.get(3), Some(true));
        assert_eq!(p.as_word(), None);
    }

    #[test]
    fn source_join_and_parts() {
        let a = BitSource::periodic("0");
        let b = BitSource::periodic("1");
        assert_eq!(join_sources(&a, &b).prefix(6), w("010101"));
        let s = BitSource::periodic("011");
        let rejoined = join_sources(&even_part(&s), &odd_part(&s));
        assert_eq!(rejoined.prefix(64), s.prefix(64));
        let x = BitSource::Prng { seed: 3 };
        let y = BitSource::RationalExpansion { numer: 3, denom: 7 };
        let j = join_sources(&x, &y);
        assert_eq!(even_part(&j).prefix(65), x.prefix(65));
        assert_eq!(odd_part(&j).prefix(65), y.prefix(65));
    }

    #[test]
    fn rational_expansion_bits() {
        // 3/7 = 0.011011011...
        assert_eq!(BitSource::RationalExpansion { numer: 3, denom: 7 }.prefix(9), w("011011011"));
        // 1/2 = 0.1000...
        assert_eq!(BitSource::RationalExpansion { numer: 1, denom: 2 }.prefix(4), w("1000"));
    }

    #[test]
    fn prng_is_deterministic() {
        let s = BitSource::Prng { seed: 42 };
        assert_eq!(s.prefix(100), s.prefix(100));
        assert_ne!(s.prefix(100), BitSource::Prng { seed: 43 }.prefix(100));
    }

    #[test]
    fn source_spec_grammar() {
        for spec in ["periodic:011", "rational:3/7", "prng:seed=42", "join(periodic:0,odd(prng:seed=1))"] {
            let s: BitSource = spec.parse().unwrap();
            assert_eq!(s.to_string(), spec);
        }
        for bad in ["periodic:", "rational:7/3", "rational:1/0", "prng:seed=x", "walk:1", "join(periodic:0)"] {
            assert!(bad.parse::<BitSource>().is_err(), "{bad}");
        }
    }

    #[test]
    fn cylinder_wire_form() {
        let code = OpenSetCode::new(vec![Cylinder::stem("01"), Cylinder::stem(""), Cylinder::Empty]);
        let json = serde_json::to_string(&code).unwrap();
        assert_eq!(json, r#"["01","","∅"]"#);
        assert_eq!(serde_json::from_str::<OpenSetCode>(&json).unwrap(), code);
    }

    fn code_strategy() -> impl Strategy<Value = OpenSetCode> {
        prop::collection::vec(
            prop_oneof![
                1 => Just(Cylinder::Empty),
                8 => (0usize..=5).prop_flat_map(|len| (0usize..(1 << len)).prop_map(move |i| Cylinder::Stem(BitString::from_index(i, len)))),
            ],
            0..10,
        )
        .prop_map(OpenSetCode::new)
    }

    proptest! {
        #[test]
        fn canonical_measure_matches_grid(code in code_strategy()) {
            let canon = canonicalize(&code, usize::MAX);
            prop_assert_eq!(measure(&code, usize::MAX), grid_measure(&code, 5));
            prop_assert_eq!(grid_measure(&canon, 5), grid_measure(&code, 5));
            // prefix-free
            let stems: Vec<_> = canon.stems().cloned().collect();
            for (i, a) in stems.iter().enumerate() {
                for (j, b) in stems.iter().enumerate() {
                    prop_assert!(i == j || !a.is_prefix_of(b));
                }
            }
            prop_assert_eq!(canonicalize(&canon, usize::MAX), canon);
        }

        #[test]
        fn measure_bounded_and_monotone(code in code_strategy(), extra in code_strategy()) {
            let m = measure(&code, usize::MAX);
            prop_assert!(!m.is_negative() && m <= Rational::one());
            prop_assert!(measure(&code.union(&extra), usize::MAX) >= m);
        }

        #[test]
        fn interleave_parity(a in prop::collection::vec(any::<bool>(), 0..8), extra in any::<bool>()) {
            let sigma = BitString::from_bits(a.clone());
            let tau = BitString::from_bits(a.iter().map(|b| !b).collect());
            let sigma = if extra { sigma.child(true) } else { sigma };
            let word = interleave(&sigma, &tau).as_word().unwrap();
            prop_assert_eq!(word.len(), sigma.len() + tau.len());
            prop_assert_eq!(word.even_bits(), sigma);
            prop_assert_eq!(word.odd_bits(), tau);
        }
    }
}
