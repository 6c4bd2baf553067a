//! Tables and CSV on stdout. All cells are exact strings.

use std::io::{self, Write};

use clap::ValueEnum;

use deskrand::report::Record;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Csv,
}

pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    pub fn records(records: &[Record]) -> Self {
        let mut t = Table::new(&["name", "expected", "actual", "verdict"]);
        for r in records {
            let verdict = if r.verdict { "pass" } else { "fail" };
            t.row(vec![r.name.clone(), r.expected.clone(), r.actual.clone(), verdict.to_string()]);
        }
        t
    }

    pub fn print(&self, format: Format) -> io::Result<()> {
        let stdout = io::stdout();
        let mut out = stdout.lock();
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&self.header)?;
                for r in &self.rows {
                    w.write_record(r)?;
                }
                w.flush()
            }
            Format::Table => {
                let mut widths: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
                for r in &self.rows {
                    for (w, c) in widths.iter_mut().zip(r) {
                        *w = (*w).max(c.chars().count());
                    }
                }
                let line = |cells: &[String]| {
                    let padded: Vec<String> = cells
                        .iter()
                        .zip(&widths)
                        .map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
                        .collect();
                    padded.join("  ").trim_end().to_string()
                };
                writeln!(out, "{}", line(&self.header))?;
                for r in &self.rows {
                    writeln!(out, "{}", line(r))?;
                }
                Ok(())
            }
        }
    }
}
