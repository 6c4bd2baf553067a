//! On-disk documents: `{"kind": ..., "provenance": ..., "body": ...}`.

use std::fmt;
use std::path::Path;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use deskrand::cantor::BitSource;
use deskrand::exact::Rational;
use deskrand::layering::LayeringPlan;
use deskrand::martingale::{CapitalTrajectory, Martingale, MultiplicativeMartingale};
use deskrand::schnorr::{IntegralTest, SchnorrTest, UniformTest};
use deskrand::stepfn::{LayeredFunction, StepFunction};

use super::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Martingale,
    Multiplicative,
    SchnorrTest,
    IntegralTest,
    Layered,
    Source,
    LayeringPlan,
    Trajectory,
    UniformTest,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.to_possible_value().expect("no skipped variants");
        f.write_str(v.get_name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Document {
    Martingale(Martingale),
    Multiplicative(MultiplicativeMartingale),
    SchnorrTest(SchnorrTest),
    IntegralTest(IntegralTest),
    Layered(LayeredFunction),
    Source(BitSource),
    LayeringPlan(Box<LayeringPlan>),
    Trajectory(CapitalTrajectory),
    UniformTest(UniformTest),
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    kind: Kind,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    provenance: Value,
    body: Value,
}

// Shapes without invariants, so that a well-formed but inconsistent body
// is reported as an invariant failure rather than a parse failure.
#[derive(Deserialize)]
struct WireTable {
    depth: usize,
    values: Vec<Rational>,
}

#[derive(Deserialize)]
struct WireLayered {
    layers: Vec<WireTable>,
    declared_integral: Rational,
}

fn invariant(e: impl fmt::Display) -> CliError {
    CliError::Invariant(e.to_string())
}

fn parse<T: serde::de::DeserializeOwned>(body: Value) -> Result<T, CliError> {
    serde_json::from_value(body).map_err(|e| CliError::Parse(e.to_string()))
}

fn layered_from_wire(body: Value) -> Result<LayeredFunction, CliError> {
    let wire: WireLayered = parse(body)?;
    let layers = wire
        .layers
        .into_iter()
        .map(|l| StepFunction::new(l.depth, l.values))
        .collect::<Result<Vec<_>, _>>()
        .map_err(invariant)?;
    LayeredFunction::with_declared(layers, wire.declared_integral).map_err(invariant)
}

impl Document {
    pub fn kind(&self) -> Kind {
        match self {
            Document::Martingale(_) => Kind::Martingale,
            Document::Multiplicative(_) => Kind::Multiplicative,
            Document::SchnorrTest(_) => Kind::SchnorrTest,
            Document::IntegralTest(_) => Kind::IntegralTest,
            Document::Layered(_) => Kind::Layered,
            Document::Source(_) => Kind::Source,
            Document::LayeringPlan(_) => Kind::LayeringPlan,
            Document::Trajectory(_) => Kind::Trajectory,
            Document::UniformTest(_) => Kind::UniformTest,
        }
    }

    fn body(&self) -> Value {
        let v = match self {
            Document::Martingale(x) => serde_json::to_value(x),
            Document::Multiplicative(x) => serde_json::to_value(x),
            Document::SchnorrTest(x) => serde_json::to_value(x),
            Document::IntegralTest(x) => serde_json::to_value(x),
            Document::Layered(x) => serde_json::to_value(x),
            Document::Source(x) => serde_json::to_value(x),
            Document::LayeringPlan(x) => serde_json::to_value(x),
            Document::Trajectory(x) => serde_json::to_value(x),
            Document::UniformTest(x) => serde_json::to_value(x),
        };
        v.expect("documents serialize")
    }

    pub fn to_text(&self, provenance: &Value) -> String {
        let env = Envelope { kind: self.kind(), provenance: provenance.clone(), body: self.body() };
        let mut s = serde_json::to_string_pretty(&env).expect("documents serialize");
        s.push('\n');
        s
    }

    /// Parse a document. Malformed text is a parse failure; a well-formed body
    /// violating its type's invariants is an invariant failure.
    pub fn from_text(text: &str) -> Result<(Document, Value), CliError> {
        let env: Envelope = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        let doc = match env.kind {
            Kind::Martingale => {
                let w: WireTable = parse(env.body)?;
                Document::Martingale(Martingale::from_table(w.depth, w.values).map_err(invariant)?)
            }
            Kind::Multiplicative => Document::Multiplicative(parse(env.body)?),
            Kind::SchnorrTest => Document::SchnorrTest(parse(env.body)?),
            Kind::IntegralTest => Document::IntegralTest(IntegralTest::new(layered_from_wire(env.body)?)),
            Kind::Layered => Document::Layered(layered_from_wire(env.body)?),
            Kind::Source => Document::Source(parse(env.body)?),
            Kind::LayeringPlan => Document::LayeringPlan(Box::new(parse(env.body)?)),
            Kind::Trajectory => Document::Trajectory(parse(env.body)?),
            Kind::UniformTest => Document::UniformTest(parse(env.body)?),
        };
        Ok((doc, env.provenance))
    }

    pub fn load(path: &Path) -> Result<(Document, Value), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Document::from_text(&text)
    }

    /// The layered function behind a layered or integral-test document.
    pub fn layered(&self) -> Option<&LayeredFunction> {
        match self {
            Document::Layered(t) => Some(t),
            Document::IntegralTest(t) => Some(&t.body),
            _ => None,
        }
    }
}
