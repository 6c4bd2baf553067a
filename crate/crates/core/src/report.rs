//! Assertion records shared by every checker.

use std::fmt::Display;

use serde::{Deserialize, Serialize};

/// One checked assertion: what was expected, what was found, and the verdict.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub name: String,
    pub expected: String,
    pub actual: String,
    pub verdict: bool,
}

impl Record {
    pub fn new(name: impl Into<String>, expected: impl Display, actual: impl Display, verdict: bool) -> Self {
        Record { name: name.into(), expected: expected.to_string(), actual: actual.to_string(), verdict }
    }

    /// A record whose verdict is `expected == actual` on the displayed forms.
    pub fn equal(name: impl Into<String>, expected: impl Display, actual: impl Display) -> Self {
        let (e, a) = (expected.to_string(), actual.to_string());
        let verdict = e == a;
        Record { name: name.into(), expected: e, actual: a, verdict }
    }
}

pub fn all_pass(records: &[Record]) -> bool {
    records.iter().all(|r| r.verdict)
}

pub fn first_failure(records: &[Record]) -> Option<&Record> {
    records.iter().find(|r| !r.verdict)
}
