//! Report and table serialization, and the exit-code contract.

use std::io::{self, Write};
use std::path::Path;

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;
use torusdet::{Status, VerificationReport};

use crate::args::Format;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// 0 if every report passes, 1 if any fails, 3 if some are inconclusive
/// and none fail.
pub fn exit_code(reports: &[VerificationReport]) -> i32 {
    if reports.iter().any(|r| r.status == Status::Fail) {
        EXIT_FAIL
    } else if reports.iter().any(|r| r.status == Status::Inconclusive) {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_PASS
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Num(x) => s.serialize_f64(*x),
            Cell::Int(k) => s.serialize_i64(*k),
            Cell::Text(t) => s.serialize_str(t),
        }
    }
}

impl Cell {
    fn csv_text(&self) -> String {
        match self {
            Cell::Num(x) => serde_json::to_string(x).unwrap_or_else(|_| "NaN".into()),
            Cell::Int(k) => k.to_string(),
            Cell::Text(t) => t.clone(),
        }
    }
}

/// One output row with a fixed column order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Record(pub Vec<(&'static str, Cell)>);

impl Record {
    pub fn new() -> Self {
        Record(Vec::new())
    }

    pub fn num(mut self, key: &'static str, v: f64) -> Self {
        self.0.push((key, Cell::Num(v)));
        self
    }

    pub fn int(mut self, key: &'static str, v: i64) -> Self {
        self.0.push((key, Cell::Int(v)));
        self
    }

    pub fn text(mut self, key: &'static str, v: impl Into<String>) -> Self {
        self.0.push((key, Cell::Text(v.into())));
        self
    }
}

impl Serialize for Record {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

pub fn write_reports<W: Write>(reports: &[VerificationReport], format: Format, mut w: W) -> io::Result<()> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, reports).map_err(io::Error::other)?;
            writeln!(w)
        }
        Format::Csv => {
            let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
            wtr.write_record(["check", "inputs", "residual", "tolerance", "status", "notes"])?;
            for r in reports {
                wtr.write_record([
                    r.check.clone(),
                    r.inputs.clone(),
                    Cell::Num(r.residual).csv_text(),
                    Cell::Num(r.tolerance).csv_text(),
                    r.status.to_string(),
                    r.notes.clone(),
                ])?;
            }
            wtr.flush()
        }
    }
}

pub fn write_records<W: Write>(records: &[Record], format: Format, mut w: W) -> io::Result<()> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, records).map_err(io::Error::other)?;
            writeln!(w)
        }
        Format::Csv => {
            let mut wtr = csv::WriterBuilder::new().flexible(true).from_writer(w);
            if let Some(first) = records.first() {
                wtr.write_record(first.0.iter().map(|(k, _)| *k))?;
            }
            for r in records {
                wtr.write_record(r.0.iter().map(|(_, v)| v.csv_text()))?;
            }
            wtr.flush()
        }
    }
}

/// Writes to `path`, or to standard output when absent.
pub fn with_sink<F>(path: Option<&Path>, f: F) -> io::Result<()>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    match path {
        Some(p) => {
            let mut file = io::BufWriter::new(std::fs::File::create(p)?);
            f(&mut file)?;
            file.flush()
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
            lock.flush()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rep(status: Status) -> VerificationReport {
        let mut r = VerificationReport::new("x.y", "a=1", 1e-3, 1e-2);
        r.status = status;
        r
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&[]), 0);
        assert_eq!(exit_code(&[rep(Status::Pass), rep(Status::Pass)]), 0);
        assert_eq!(exit_code(&[rep(Status::Pass), rep(Status::Inconclusive)]), 3);
        assert_eq!(exit_code(&[rep(Status::Inconclusive), rep(Status::Fail)]), 1);
    }

    #[test]
    fn json_and_csv_layout() {
        let r = VerificationReport::new("a.b", "tau=0+1i", 1.5e-12, 1e-10).note("x, \"y\"");
        let mut buf = Vec::new();
        write_reports(std::slice::from_ref(&r), Format::Json, &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        let obj = v[0].as_object().unwrap();
        let keys: Vec<&str> = obj.keys().map(|k| k.as_str()).collect();
        assert_eq!(keys.len(), 6);
        for k in ["check", "inputs", "residual", "tolerance", "status", "notes"] {
            assert!(obj.contains_key(k));
        }
        assert_eq!(obj["status"], "pass");
        let mut buf = Vec::new();
        write_reports(&[r], Format::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("check,inputs,residual,tolerance,status,notes"));
        assert_eq!(lines.next(), Some("a.b,tau=0+1i,1.5e-12,1e-10,pass,\"x, \"\"y\"\"\""));
    }

    #[test]
    fn records_keep_column_order() {
        let rows = vec![Record::new().num("z", 1.0).int("a", 2).text("m", "q")];
        let mut buf = Vec::new();
        write_records(&rows, Format::Json, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.find("\"z\"").unwrap() < s.find("\"a\"").unwrap());
        let mut buf = Vec::new();
        write_records(&rows, Format::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "z,a,m\n1.0,2,q\n");
    }
}
