pub mod document;
pub mod output;
pub mod workspace;

use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use thiserror::Error;

use deskrand::cantor::{BitSource, BitString};
use deskrand::exact::Rational;
use deskrand::fixtures;
use deskrand::layering::{self, LayeringError};
use deskrand::martingale::{self, check_split_product, from_multiplicative, Side};
use deskrand::report::Record;
use deskrand::schnorr::{self, uniform::DEFAULT_PRECISION, Program, TestKind, UniformTest};

use document::{Document, Kind};
use output::{Format, Table};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Parse(_) | CliError::Usage(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::Budget(_) => 4,
        }
    }
}

pub fn parse_source(spec: &str) -> Result<BitSource, CliError> {
    spec.parse().map_err(|e| CliError::Parse(format!("{spec}: {e}")))
}

/// Where a command writes the document it produces.
pub struct Destination {
    pub out: Option<PathBuf>,
    pub workspace: Option<PathBuf>,
}

impl Destination {
    pub fn write(&self, doc: &Document, provenance: Value, default_name: &str) -> Result<(), CliError> {
        let text = doc.to_text(&provenance);
        match (&self.workspace, &self.out) {
            (Some(dir), out) => {
                let name = out
                    .as_ref()
                    .and_then(|p| p.file_name())
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_else(|| default_name.to_string());
                workspace::store(dir, &name, doc.kind(), &provenance, &text)
            }
            (None, Some(path)) => write_file(path, &text),
            (None, None) => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn finish(records: &[Record], format: Format) -> Result<(), CliError> {
    Table::records(records).print(format).map_err(|e| CliError::Io(e.to_string()))?;
    match records.iter().find(|r| !r.verdict) {
        Some(r) => Err(CliError::Invariant(format!("{} (expected {}, got {})", r.name, r.expected, r.actual))),
        None => Ok(()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum GenKind {
    Martingale,
    SchnorrTest,
    Layered,
    Source,
}

pub fn cmd_gen(kind: GenKind, seed: u64, depth: Option<usize>, levels: usize, dest: &Destination) -> Result<(), CliError> {
    let (doc, provenance, name) = match kind {
        GenKind::Martingale => {
            let depth = depth.unwrap_or(4);
            let doc = Document::Martingale(fixtures::martingale(seed, depth));
            (doc, json!({"command": "gen", "seed": seed, "depth": depth}), format!("martingale-{seed}.json"))
        }
        GenKind::SchnorrTest => {
            let depth = depth.unwrap_or(6);
            let doc = Document::SchnorrTest(fixtures::schnorr_test(seed, levels, depth));
            let prov = json!({"command": "gen", "seed": seed, "depth": depth, "levels": levels});
            (doc, prov, format!("schnorr-test-{seed}.json"))
        }
        GenKind::Layered => {
            let depth = depth.unwrap_or(4);
            let doc = Document::Layered(fixtures::layered(seed, depth));
            (doc, json!({"command": "gen", "seed": seed, "depth": depth}), format!("layered-{seed}.json"))
        }
        GenKind::Source => {
            let doc = Document::Source(fixtures::source(seed));
            (doc, json!({"command": "gen", "seed": seed}), format!("source-{seed}.json"))
        }
    };
    dest.write(&doc, provenance, &name)
}

fn validity_record(name: &str, result: Result<(), impl std::fmt::Display>) -> Record {
    match result {
        Ok(()) => Record::new(name, "fair and nonnegative", "ok", true),
        Err(e) => Record::new(name, "fair and nonnegative", e, false),
    }
}

fn uniform_records(u: &UniformTest) -> Vec<Record> {
    let mut out = Vec::new();
    let oracles = ["periodic:0", "periodic:1", "prng:seed=1"];
    for spec in oracles {
        let x: BitSource = spec.parse().expect("literal source spec");
        match u.kind {
            TestKind::Martingale => {
                let r = u.martingale_table(&x, 4, DEFAULT_PRECISION).map(|d| d.validate());
                match r {
                    Ok(v) => out.push(validity_record(&format!("oracle[{spec}].martingale"), v)),
                    Err(e) => out.push(Record::new(format!("oracle[{spec}].martingale"), "decodes", e, false)),
                }
            }
            TestKind::IntegralTest => {
                let Program::IntegralFamily { family } = u.functional.program() else {
                    out.push(Record::new("program", "integral-family", "other rule", false));
                    break;
                };
                match family.member(&x.prefix(family.oracle_depth())) {
                    Ok(m) => out.push(Record::equal(format!("oracle[{spec}].integral"), &m.h, m.rescaled.declared_integral())),
                    Err(e) => out.push(Record::new(format!("oracle[{spec}].integral"), "decodes", e, false)),
                }
            }
            TestKind::SchnorrTest => {
                for n in 1..=3u64 {
                    let u_n = u.enumerated_level(&x, n, 32).expect("kind checked");
                    let mu = deskrand::cantor::measure(&u_n, usize::MAX);
                    let bound = Rational::pow2(-(n as i64));
                    out.push(Record::new(format!("oracle[{spec}].level[{n}]"), format!("<= {bound}"), &mu, mu <= bound));
                }
            }
        }
    }
    // Twiddling oracle bits past the declared use must not change any output.
    let base = BitSource::Prng { seed: 11 };
    let mut stable = true;
    for q in 0..32u64 {
        let k = u.functional.use_bound(q);
        let a = base.prefix(k + 8);
        let flipped: Vec<bool> = a.bits().iter().enumerate().map(|(i, &b)| if i < k { b } else { !b }).collect();
        let b = BitString::from_bits(flipped);
        if u.functional.eval(&a, q).ok() != u.functional.eval(&b, q).ok() {
            stable = false;
        }
    }
    out.push(Record::new("use-bound", "outputs fixed by declared use", if stable { "fixed" } else { "varies" }, stable));
    out
}

pub fn check_records(doc: &Document) -> Vec<Record> {
    match doc {
        Document::Martingale(d) => vec![validity_record("martingale", d.validate())],
        Document::Multiplicative(m) => vec![validity_record("multiplicative", m.validate())],
        Document::SchnorrTest(t) => t.check_records(),
        Document::IntegralTest(schnorr::IntegralTest { body: t }) | Document::Layered(t) => {
            let sum: Rational = t.layers().iter().map(|g| g.integral()).sum();
            vec![Record::equal("declared_integral", sum, t.declared_integral())]
        }
        Document::Source(s) => {
            let back: Result<BitSource, _> = s.to_string().parse();
            vec![Record::equal("spec", s, back.map(|b| b.to_string()).unwrap_or_default())]
        }
        Document::LayeringPlan(p) => {
            let mut r = vec![Record::new("saturated", "true", p.saturated(), p.saturated())];
            r.extend(p.verify());
            r
        }
        Document::Trajectory(t) => {
            let indexed = t.points.iter().enumerate().all(|(i, (k, _))| i == *k);
            let nonneg = t.points.iter().all(|(_, c)| !c.is_negative());
            vec![
                Record::new("points.indexed", "0, 1, 2, ...", if indexed { "ok" } else { "gap" }, indexed),
                Record::new("points.nonnegative", "true", nonneg, nonneg),
            ]
        }
        Document::UniformTest(u) => uniform_records(u),
    }
}

pub fn cmd_check(path: &Path, format: Format) -> Result<(), CliError> {
    if path.is_dir() {
        return workspace::check(path, format);
    }
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let (doc, provenance) = Document::from_text(&text)?;
    let same = doc.to_text(&provenance) == text;
    let mut records = vec![Record::new("round-trip", "identical", if same { "identical" } else { "differs" }, same)];
    records.extend(check_records(&doc));
    finish(&records, format)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    Keylemma,
    Indicator,
}

pub struct ConvertOptions {
    pub to: Kind,
    pub method: Method,
    pub horizon: Option<usize>,
    pub levels: usize,
}

fn require_valid(doc: &Document) -> Result<(), CliError> {
    let records = check_records(doc);
    match records.iter().find(|r| !r.verdict) {
        Some(r) => Err(CliError::Invariant(format!("input {}: expected {}, got {}", r.name, r.expected, r.actual))),
        None => Ok(()),
    }
}

fn layering_error(e: LayeringError) -> CliError {
    match e {
        LayeringError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
        other => CliError::Invariant(other.to_string()),
    }
}

pub fn cmd_convert(input: &Path, opts: &ConvertOptions, dest: &Destination) -> Result<(), CliError> {
    let (doc, _) = Document::load(input)?;
    require_valid(&doc)?;
    let horizon_for = |t: &deskrand::stepfn::LayeredFunction| opts.horizon.unwrap_or_else(|| layering::saturation_level(t));
    let out = match (&doc, opts.to) {
        (Document::SchnorrTest(t), Kind::IntegralTest) => Document::IntegralTest(schnorr::schnorr_to_integral(t)),
        (Document::SchnorrTest(t), Kind::Martingale) => Document::Martingale(schnorr::test_to_martingale(t)),
        (Document::Martingale(d), Kind::SchnorrTest) => Document::SchnorrTest(
            schnorr::martingale_to_test(d, opts.levels).map_err(|e| CliError::Invariant(e.to_string()))?,
        ),
        (Document::Martingale(d), Kind::Multiplicative) => {
            Document::Multiplicative(d.to_multiplicative().map_err(|e| CliError::Invariant(e.to_string()))?)
        }
        (Document::Multiplicative(m), Kind::Martingale) => Document::Martingale(from_multiplicative(m)),
        (Document::Layered(t), Kind::IntegralTest) => Document::IntegralTest(schnorr::IntegralTest::new(t.clone())),
        (Document::IntegralTest(t), Kind::Layered) => Document::Layered(t.body.clone()),
        (d, Kind::SchnorrTest) if d.layered().is_some() => {
            let t = d.layered().expect("checked");
            match opts.method {
                Method::Keylemma => {
                    let test = schnorr::IntegralTest::new(t.clone());
                    let out = schnorr::integral_to_schnorr(&test, horizon_for(t)).map_err(|e| CliError::Invariant(e.to_string()))?;
                    Document::SchnorrTest(out)
                }
                Method::Indicator => {
                    let test = schnorr::IntegralTest::new(t.clone());
                    let out = schnorr::indicator_layers_to_schnorr(&test)
                        .ok_or_else(|| CliError::Invariant("layers are not indicators of a test".into()))?;
                    Document::SchnorrTest(out)
                }
            }
        }
        (d, Kind::LayeringPlan) if d.layered().is_some() => {
            let t = d.layered().expect("checked");
            Document::LayeringPlan(Box::new(layering::build_layering(t, horizon_for(t)).map_err(layering_error)?))
        }
        (d, to) => return Err(CliError::Usage(format!("no conversion from {} to {to}", d.kind()))),
    };
    let from = input.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let provenance = json!({"command": "convert", "from": from, "to": opts.to.to_string()});
    let stem = input.file_stem().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    dest.write(&out, provenance, &format!("{stem}.{}.json", opts.to))
}

pub fn cmd_keylemma(input: &Path, horizon: Option<usize>, format: Format, dest: &Destination) -> Result<(), CliError> {
    let (doc, _) = Document::load(input)?;
    require_valid(&doc)?;
    let t = doc.layered().ok_or_else(|| CliError::Usage(format!("keylemma needs a layered function, got {}", doc.kind())))?;
    let horizon = horizon.unwrap_or_else(|| layering::saturation_level(t));
    let plan = layering::build_layering(t, horizon).map_err(layering_error)?;
    let mut table = Table::new(&["n", "k_n", "c_n", "mu(V_n)", "mu(U_n)"]);
    for n in 0..=plan.top() {
        let mu_u = plan.emitted_test.level(n).map(|u| deskrand::cantor::measure(u, usize::MAX).to_string()).unwrap_or_default();
        table.row(vec![
            n.to_string(),
            plan.partial_sum_indices[n].to_string(),
            plan.cut_levels[n].to_string(),
            deskrand::cantor::measure(&plan.exceedance_sets[n], usize::MAX).to_string(),
            mu_u,
        ]);
    }
    table.print(format).map_err(|e| CliError::Io(e.to_string()))?;
    if dest.out.is_some() || dest.workspace.is_some() {
        let from = input.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let stem = input.file_stem().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let provenance = json!({"command": "keylemma", "from": from, "horizon": horizon});
        dest.write(&Document::LayeringPlan(Box::new(plan.clone())), provenance, &format!("{stem}.plan.json"))?;
    }
    let mut records = vec![Record::new("saturated", "true", plan.saturated(), plan.saturated())];
    records.extend(plan.verify());
    match records.iter().find(|r| !r.verdict) {
        Some(r) => Err(CliError::Invariant(format!("{} (expected {}, got {})", r.name, r.expected, r.actual))),
        None => Ok(()),
    }
}

pub fn cmd_run(input: &Path, source: &str, steps: usize, format: Format, dest: &Destination) -> Result<(), CliError> {
    let (doc, _) = Document::load(input)?;
    let Document::Martingale(d) = &doc else {
        return Err(CliError::Usage(format!("run needs a martingale, got {}", doc.kind())));
    };
    require_valid(&doc)?;
    let x = parse_source(source)?;
    let traj = martingale::run(d, &x, steps);
    let bits = x.prefix(steps);
    let mut table = Table::new(&["k", "bit", "capital"]);
    for (k, c) in &traj.points {
        let bit = if *k == 0 { "-".to_string() } else { (bits.bit(k - 1) as u8).to_string() };
        table.row(vec![k.to_string(), bit, c.to_string()]);
    }
    table.print(format).map_err(|e| CliError::Io(e.to_string()))?;
    if dest.out.is_some() || dest.workspace.is_some() {
        let provenance = json!({"command": "run", "source": source, "steps": steps});
        dest.write(&Document::Trajectory(traj), provenance, "trajectory.json")?;
    }
    Ok(())
}

pub struct SplitOutputs {
    pub even_out: Option<PathBuf>,
    pub odd_out: Option<PathBuf>,
}

pub fn cmd_split(input: &Path, oracle: &str, depth: Option<usize>, format: Format, outs: &SplitOutputs) -> Result<(), CliError> {
    let (doc, _) = Document::load(input)?;
    let Document::Martingale(d) = &doc else {
        return Err(CliError::Usage(format!("split needs a martingale, got {}", doc.kind())));
    };
    require_valid(&doc)?;
    let x = parse_source(oracle)?;
    let n = depth.unwrap_or(d.depth() / 2);
    let mut records = Vec::new();
    let mut halves = Vec::new();
    for (side, name) in [(Side::Even, "even"), (Side::Odd, "odd")] {
        match martingale::split_van_lambalgen(d, side, &x, n) {
            Ok(h) => {
                records.push(validity_record(&format!("{name}.valid"), h.validate()));
                halves.push((name, h));
            }
            Err(e) => records.push(Record::new(format!("{name}.valid"), "fair and nonnegative", e, false)),
        }
    }
    let pairs = 1usize << (2 * n);
    match check_split_product(d, n) {
        Ok(report) => records.push(Record::equal("product identity", format!("pass ({pairs}/{pairs} pairs)"), report)),
        Err(e) => records.push(Record::new("product identity", format!("pass ({pairs}/{pairs} pairs)"), e, false)),
    }
    for (name, h) in &halves {
        let path = if *name == "even" { &outs.even_out } else { &outs.odd_out };
        if let Some(p) = path {
            let provenance = json!({"command": "split", "side": name, "oracle": oracle, "depth": n});
            write_file(p, &Document::Martingale(h.clone()).to_text(&provenance))?;
        }
    }
    finish(&records, format)
}

pub fn cmd_evaluate(input: &Path, source: &str, budget: usize, format: Format) -> Result<(), CliError> {
    let (doc, _) = Document::load(input)?;
    require_valid(&doc)?;
    let t = doc.layered().ok_or_else(|| CliError::Usage(format!("evaluate needs a layered function, got {}", doc.kind())))?;
    let x = parse_source(source)?;
    let e = layering::evaluate(t, &x, budget).map_err(layering_error)?;
    let mut table = Table::new(&["source", "value", "level"]);
    table.row(vec![x.to_string(), e.value.to_string(), e.level.to_string()]);
    table.print(format).map_err(|e| CliError::Io(e.to_string()))
}
