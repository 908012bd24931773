//! CSV and JSON rendering of count tables and of the volume and ergodic
//! sweeps.

use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiment::{CountRow, CountTable};

pub const CSV_HEADER: &str = "T,region,basepoint,count,boundary_hits,ratio,m_omega,deviation,covolume_est";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::invalid(format!("unknown format {other}, expected csv or json"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    /// SHA-256 of the resolved configuration text.
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub config: String,
}

impl RunMetadata {
    pub fn new(config_text: &str, seed: u64) -> Self {
        Self {
            config_hash: config_hash(config_text),
            seed,
            version: env!("CARGO_PKG_VERSION").to_owned(),
            config: config_text.to_owned(),
        }
    }
}

pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JsonReport {
    pub metadata: RunMetadata,
    pub rows: Vec<CountRow>,
}

pub fn write_csv<W: Write>(mut out: W, table: &CountTable) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in &table.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.t,
            r.region,
            r.basepoint,
            r.count,
            r.boundary_hits,
            r.ratio,
            r.m_omega,
            r.deviation,
            r.covolume_est.map(|v| v.to_string()).unwrap_or_default()
        )?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(input: R) -> Result<CountTable> {
    let mut lines = input.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(Error::parse(1, "empty input"));
    };
    if header?.trim_end() != CSV_HEADER {
        return Err(Error::parse(1, "unexpected CSV header"));
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != 9 {
            return Err(Error::parse(lineno, format!("expected 9 fields, found {}", f.len())));
        }
        let float = |k: usize| -> Result<f64> {
            f[k].parse()
                .map_err(|_| Error::parse(lineno, format!("bad number {:?}", f[k])))
        };
        let int = |k: usize| -> Result<u64> {
            f[k].parse()
                .map_err(|_| Error::parse(lineno, format!("bad count {:?}", f[k])))
        };
        rows.push(CountRow {
            t: float(0)?,
            region: f[1].to_owned(),
            basepoint: f[2].to_owned(),
            count: int(3)?,
            boundary_hits: int(4)?,
            ratio: float(5)?,
            m_omega: float(6)?,
            deviation: float(7)?,
            covolume_est: if f[8].is_empty() { None } else { Some(float(8)?) },
        });
    }
    Ok(CountTable { rows })
}

pub fn write_json<W: Write>(out: W, table: &CountTable, metadata: &RunMetadata) -> Result<()> {
    let report = JsonReport {
        metadata: metadata.clone(),
        rows: table.rows.clone(),
    };
    serde_json::to_writer_pretty(out, &report)?;
    Ok(())
}

pub fn read_json<R: std::io::Read>(input: R) -> Result<JsonReport> {
    Ok(serde_json::from_reader(input)?)
}

/// Writes the table in the requested format. JSON carries `metadata`.
pub fn emit_report<W: Write>(out: W, table: &CountTable, format: ReportFormat, metadata: &RunMetadata) -> Result<()> {
    match format {
        ReportFormat::Csv => write_csv(out, table),
        ReportFormat::Json => write_json(out, table, metadata),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeRow {
    pub n: usize,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub value: f64,
    pub error: f64,
}

pub fn write_volume_csv<W: Write>(mut out: W, rows: &[VolumeRow]) -> Result<()> {
    writeln!(out, "n,T,C,value,error")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.n, r.t, r.c, r.value, r.error)?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErgodicRow {
    #[serde(rename = "T")]
    pub t: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub nu_value: f64,
}

pub fn write_ergodic_csv<W: Write>(mut out: W, rows: &[ErgodicRow]) -> Result<()> {
    writeln!(out, "T,estimate,std_error,nu_value")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.t, r.estimate, r.std_error, r.nu_value)?;
    }
    Ok(())
}

/// Writes any serialisable rows as a JSON report with metadata.
pub fn write_rows_json<W: Write, T: Serialize>(out: W, rows: &[T], metadata: &RunMetadata) -> Result<()> {
    #[derive(Serialize)]
    struct Doc<'a, T> {
        metadata: &'a RunMetadata,
        rows: &'a [T],
    }
    serde_json::to_writer_pretty(out, &Doc { metadata, rows })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64, region: &str, count: u64) -> CountRow {
        CountRow {
            t,
            region: region.into(),
            basepoint: "1/3".into(),
            count,
            boundary_hits: 2,
            ratio: 0.1 + 0.2,
            m_omega: 1.0 / 3.0,
            deviation: (0.1 + 0.2 - 1.0 / 3.0f64).abs(),
            covolume_est: if count == 0 { None } else { Some(1.0 / 7.0) },
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &CountTable::default()).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn csv_round_trip() {
        let table = CountTable {
            rows: vec![row(2.0, "X", 20), row(2.5, "upper", 7), row(1e-3, "a", 0)],
        };
        let mut buf = Vec::new();
        write_csv(&mut buf, &table).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn json_round_trip() {
        let table = CountTable {
            rows: vec![row(2.0, "X", 20), row(3.0, "a", 0)],
        };
        let meta = RunMetadata::new("n = 2\n", 7);
        assert_eq!(meta.config_hash.len(), 64);
        let mut buf = Vec::new();
        write_json(&mut buf, &table, &meta).unwrap();
        let back = read_json(buf.as_slice()).unwrap();
        assert_eq!(back.metadata, meta);
        assert_eq!(back.rows, table.rows);
    }

    #[test]
    fn bad_csv() {
        assert!(read_csv("nope\n".as_bytes()).is_err());
        let text = format!("{CSV_HEADER}\n1,X,inf,3\n");
        assert!(matches!(read_csv(text.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }
}
