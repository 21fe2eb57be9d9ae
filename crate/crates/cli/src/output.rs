use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Jsonl,
    Csv,
}

/// One result line. `pass` is absent for informational values.
#[derive(Debug, Clone, Serialize)]
pub struct Record {
    pub cmd: &'static str,
    pub params: BTreeMap<&'static str, Value>,
    pub quantity: String,
    pub value: f64,
    pub expected: Option<f64>,
    pub tolerance: Option<f64>,
    pub source: &'static str,
    pub pass: Option<bool>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    cmd: &'a str,
    params: String,
    quantity: &'a str,
    value: f64,
    expected: Option<f64>,
    tolerance: Option<f64>,
    source: &'a str,
    pass: Option<bool>,
}

/// Collects records for one command invocation.
pub struct Report {
    cmd: &'static str,
    params: BTreeMap<&'static str, Value>,
    records: Vec<Record>,
}

impl Report {
    pub fn new(cmd: &'static str) -> Self {
        Report {
            cmd,
            params: BTreeMap::new(),
            records: Vec::new(),
        }
    }

    /// Sets a parameter echoed on every record added afterwards.
    pub fn param(&mut self, key: &'static str, value: impl Into<Value>) -> &mut Self {
        self.params.insert(key, value.into());
        self
    }

    pub fn unset(&mut self, key: &'static str) -> &mut Self {
        self.params.remove(key);
        self
    }

    /// A value with no reference to compare against.
    pub fn info(&mut self, quantity: impl Into<String>, value: f64, source: &'static str) {
        self.push(quantity.into(), value, None, None, source, None);
    }

    /// Passes iff `|value - expected| <= tolerance`.
    pub fn check(
        &mut self,
        quantity: impl Into<String>,
        value: f64,
        expected: f64,
        tolerance: f64,
        source: &'static str,
    ) {
        let pass = (value - expected).abs() <= tolerance;
        self.push(
            quantity.into(),
            value,
            Some(expected),
            Some(tolerance),
            source,
            Some(pass),
        );
    }

    /// A check whose pass condition is not a symmetric tolerance band.
    pub fn check_with(
        &mut self,
        quantity: impl Into<String>,
        value: f64,
        expected: f64,
        tolerance: f64,
        source: &'static str,
        pass: bool,
    ) {
        self.push(
            quantity.into(),
            value,
            Some(expected),
            Some(tolerance),
            source,
            Some(pass),
        );
    }

    fn push(
        &mut self,
        quantity: String,
        value: f64,
        expected: Option<f64>,
        tolerance: Option<f64>,
        source: &'static str,
        pass: Option<bool>,
    ) {
        self.records.push(Record {
            cmd: self.cmd,
            params: self.params.clone(),
            quantity,
            value,
            expected,
            tolerance,
            source,
            pass,
        });
    }

    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass != Some(false))
    }

    pub fn write(&self, format: Format, path: Option<&Path>) -> Result<()> {
        let out: Box<dyn Write> = match path {
            Some(p) => {
                Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)
            }
            None => Box::new(io::stdout().lock()),
        };
        let mut out = BufWriter::new(out);
        match format {
            Format::Jsonl => {
                for r in &self.records {
                    serde_json::to_writer(&mut out, r)?;
                    out.write_all(b"\n")?;
                }
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(&mut out);
                for r in &self.records {
                    w.serialize(CsvRow {
                        cmd: r.cmd,
                        params: serde_json::to_string(&r.params)?,
                        quantity: &r.quantity,
                        value: r.value,
                        expected: r.expected,
                        tolerance: r.tolerance,
                        source: r.source,
                        pass: r.pass,
                    })?;
                }
                w.flush()?;
            }
        }
        out.flush()?;
        Ok(())
    }
}
