//! A directory of documents with a `manifest.json` listing kind and provenance per file.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use deskrand::report::Record;

use super::document::{Document, Kind};
use super::output::{Format, Table};
use super::{check_records, write_file, CliError};

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub objects: Vec<Entry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Entry {
    pub file: String,
    pub kind: Kind,
    #[serde(default)]
    pub provenance: Value,
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, CliError> {
    let path = dir.join(MANIFEST);
    if !path.exists() {
        return Ok(Manifest::default());
    }
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

/// Write `text` as `dir/name` and record it in the manifest.
pub fn store(dir: &Path, name: &str, kind: Kind, provenance: &Value, text: &str) -> Result<(), CliError> {
    write_file(&dir.join(name), text)?;
    let mut manifest = read_manifest(dir)?;
    manifest.objects.retain(|e| e.file != name);
    manifest.objects.push(Entry { file: name.to_string(), kind, provenance: provenance.clone() });
    manifest.objects.sort_by(|a, b| a.file.cmp(&b.file));
    let mut out = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    out.push('\n');
    write_file(&dir.join(MANIFEST), &out)
}

/// Check every listed file: it loads, has the listed kind, round-trips byte for byte
/// and passes its own checks. The worst failure decides the error.
pub fn check(dir: &Path, format: Format) -> Result<(), CliError> {
    let manifest = read_manifest(dir)?;
    let mut records = Vec::new();
    let mut worst: Option<CliError> = None;
    let note = |e: CliError, worst: &mut Option<CliError>| {
        if worst.as_ref().is_none_or(|w| e.exit_code() > w.exit_code()) {
            *worst = Some(e);
        }
    };
    for entry in &manifest.objects {
        let path = dir.join(&entry.file);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => {
                records.push(Record::new(format!("{}.load", entry.file), "readable", &e, false));
                note(CliError::Io(format!("{}: {e}", path.display())), &mut worst);
                continue;
            }
        };
        let (doc, provenance) = match Document::from_text(&text) {
            Ok(d) => d,
            Err(e) => {
                records.push(Record::new(format!("{}.load", entry.file), "valid document", &e, false));
                note(e, &mut worst);
                continue;
            }
        };
        records.push(Record::equal(format!("{}.kind", entry.file), entry.kind, doc.kind()));
        let same = doc.to_text(&provenance) == text;
        records.push(Record::new(format!("{}.round-trip", entry.file), "identical", if same { "identical" } else { "differs" }, same));
        for r in check_records(&doc) {
            records.push(Record { name: format!("{}.{}", entry.file, r.name), ..r });
        }
    }
    Table::records(&records).print(format).map_err(|e| CliError::Io(e.to_string()))?;
    if let Some(e) = worst {
        return Err(e);
    }
    match records.iter().find(|r| !r.verdict) {
        Some(r) => Err(CliError::Invariant(format!("{} (expected {}, got {})", r.name, r.expected, r.actual))),
        None => Ok(()),
    }
}
