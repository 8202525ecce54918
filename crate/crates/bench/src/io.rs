//! CSV records, dense instance files and flat `key = value` config files.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use coordesc::Matrix;

use crate::error::{BenchError, Result};
use crate::experiment::{ConvergenceRecord, EpochRow};

pub const RECORD_HEADER: [&str; 6] = [
    "epoch",
    "objective",
    "grad_map_norm",
    "dist_to_ref",
    "flops",
    "elapsed_ns",
];

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::File {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> BenchError + '_ {
    move |source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Metadata as `# key=value` lines, then the header and one row per epoch.
pub fn export_records(record: &ConvergenceRecord, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(file_err(path))?;
    let mut out = BufWriter::new(file);
    for (k, v) in &record.metadata {
        writeln!(out, "# {k}={v}").map_err(file_err(path))?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_HEADER).map_err(csv_err(path))?;
    for r in &record.rows {
        w.write_record([
            r.epoch.to_string(),
            r.objective.to_string(),
            r.grad_map_norm.to_string(),
            r.dist_to_ref.to_string(),
            r.flops.to_string(),
            r.elapsed_ns.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(file_err(path))?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<ConvergenceRecord> {
    let text = std::fs::read_to_string(path).map_err(file_err(path))?;
    let metadata = text
        .lines()
        .filter_map(|l| l.strip_prefix("# "))
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let parse_err = |line: usize, message: String| BenchError::Parse {
        path: path.display().to_string(),
        line,
        message,
    };
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let f = |k: usize| -> Result<f64> {
            rec.get(k)
                .ok_or_else(|| parse_err(i + 2, format!("missing column {k}")))?
                .parse::<f64>()
                .map_err(|e| parse_err(i + 2, e.to_string()))
        };
        let u = |k: usize| -> Result<u64> {
            rec.get(k)
                .ok_or_else(|| parse_err(i + 2, format!("missing column {k}")))?
                .parse::<u64>()
                .map_err(|e| parse_err(i + 2, e.to_string()))
        };
        rows.push(EpochRow {
            epoch: u(0)? as usize,
            objective: f(1)?,
            grad_map_norm: f(2)?,
            dist_to_ref: f(3)?,
            flops: u(4)?,
            elapsed_ns: u(5)?,
        });
    }
    Ok(ConvergenceRecord { rows, metadata })
}

/// First line `rows,cols`, then the rows.
pub fn write_matrix(m: &Matrix, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(file_err(path))?;
    let mut w = csv::WriterBuilder::new()
        .flexible(true)
        .from_writer(BufWriter::new(file));
    w.write_record([m.rows().to_string(), m.cols().to_string()])
        .map_err(csv_err(path))?;
    for i in 0..m.rows() {
        w.write_record(m.row(i).iter().map(|v| v.to_string()))
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(file_err(path))?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let file = File::open(path).map_err(file_err(path))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(file);
    let parse_err = |line: usize, message: String| BenchError::Parse {
        path: path.display().to_string(),
        line,
        message,
    };
    let mut records = rdr.records();
    let shape = records
        .next()
        .ok_or_else(|| parse_err(1, "empty file".into()))?
        .map_err(csv_err(path))?;
    let dim = |k: usize| -> Result<usize> {
        shape
            .get(k)
            .ok_or_else(|| parse_err(1, "shape header needs rows,cols".into()))?
            .trim()
            .parse()
            .map_err(|e: std::num::ParseIntError| parse_err(1, e.to_string()))
    };
    let (rows, cols) = (dim(0)?, dim(1)?);
    let mut data = Vec::with_capacity(rows * cols);
    for (i, rec) in records.enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        if rec.len() != cols {
            return Err(parse_err(
                i + 2,
                format!("expected {cols} values, found {}", rec.len()),
            ));
        }
        for v in rec.iter() {
            data.push(
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| parse_err(i + 2, e.to_string()))?,
            );
        }
    }
    if data.len() != rows * cols {
        return Err(parse_err(
            1,
            format!(
                "header says {rows} rows, found {}",
                data.len() / cols.max(1)
            ),
        ));
    }
    Ok(Matrix::from_row_major(rows, cols, data)?)
}

/// `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_config(text: &str, origin: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| BenchError::Parse {
            path: origin.to_string(),
            line: i + 1,
            message: format!("expected key=value, got '{line}'"),
        })?;
        map.insert(
            k.trim().trim_start_matches("--").to_string(),
            v.trim().to_string(),
        );
    }
    Ok(map)
}

pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(file_err(path))?;
    parse_config(&text, &path.display().to_string())
}
