use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use std::collections::BTreeMap;

use super::{EvalCell, Tally};
use crate::error::{Error, Result};
use crate::shapes::ObjectKey;

/// One line of a results CSV. `run` is empty on rows pooled over all runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub variation: String,
    pub object_set: String,
    pub object: String,
    pub policy: String,
    pub run: Option<usize>,
    pub n: usize,
    pub successes: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub step: usize,
    pub object_set: String,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub cells: Vec<EvalCell>,
    pub horizon: usize,
    pub base_seed: u64,
}

fn row(c: &EvalCell, object: String, run: Option<usize>, t: Tally) -> CsvRow {
    CsvRow {
        variation: c.variation.to_string(),
        object_set: c.object_set.to_string(),
        object,
        policy: c.policy.clone(),
        run,
        n: t.n,
        successes: t.successes,
        rate: t.rate(),
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows written by [`EvalReport::write_csv`] or
/// [`EvalReport::write_objects_csv`].
pub fn parse_csv<R: Read>(r: R) -> Result<Vec<CsvRow>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| row.map_err(csv_err))
        .collect()
}

pub fn write_curve_csv(path: &Path, rows: &[CurveRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(["step", "object_set", "rate"])
        .map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

impl EvalReport {
    /// One row per cell with object `all`, pooled over runs.
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.cells
            .iter()
            .map(|c| {
                let t = c.pooled();
                row(c, "all".into(), None, t)
            })
            .collect()
    }

    /// One row per (cell, run) with object `all`.
    pub fn run_rows(&self) -> Vec<CsvRow> {
        self.cells
            .iter()
            .flat_map(|c| {
                c.runs
                    .iter()
                    .map(move |r| row(c, "all".into(), Some(r.run), r.total))
            })
            .collect()
    }

    /// One row per (cell, object), pooled over runs.
    pub fn object_rows(&self) -> Vec<CsvRow> {
        let mut rows = Vec::new();
        for c in &self.cells {
            let mut per: BTreeMap<ObjectKey, Tally> = BTreeMap::new();
            for r in &c.runs {
                for (k, t) in &r.per_object {
                    let e = per.entry(*k).or_default();
                    e.n += t.n;
                    e.successes += t.successes;
                }
            }
            rows.extend(per.into_iter().map(|(k, t)| row(c, k.to_string(), None, t)));
        }
        rows
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_rows(path, &self.csv_rows())
    }

    pub fn write_runs_csv(&self, path: &Path) -> Result<()> {
        write_rows(path, &self.run_rows())
    }

    pub fn write_objects_csv(&self, path: &Path) -> Result<()> {
        write_rows(path, &self.object_rows())
    }

    /// Aligned plain-text summary: mean ± std per cell, then per object.
    pub fn text_table(&self) -> String {
        let header = [
            "variation",
            "object_set",
            "object",
            "policy",
            "runs",
            "n",
            "mean",
            "std",
        ];
        let mut rows: Vec<[String; 8]> = Vec::new();
        for c in &self.cells {
            let (m, s) = c.mean_std();
            let n = c.runs.first().map_or(0, |r| r.total.n);
            rows.push([
                c.variation.to_string(),
                c.object_set.to_string(),
                "all".into(),
                c.policy.clone(),
                c.runs.len().to_string(),
                n.to_string(),
                format!("{m:.3}"),
                format!("{s:.3}"),
            ]);
            for (k, rate) in c.object_means() {
                let n = c
                    .runs
                    .first()
                    .and_then(|r| r.per_object.get(&k))
                    .map_or(0, |t| t.n);
                rows.push([
                    String::new(),
                    String::new(),
                    k.to_string(),
                    String::new(),
                    String::new(),
                    n.to_string(),
                    format!("{rate:.3}"),
                    String::new(),
                ]);
            }
        }
        let mut widths = header.map(str::len);
        for r in &rows {
            for (w, cell) in widths.iter_mut().zip(r) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, cells: &[&str]| {
            let parts: Vec<String> = cells
                .iter()
                .zip(widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&mut out, &header);
        let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
        line(
            &mut out,
            &rule.iter().map(String::as_str).collect::<Vec<_>>(),
        );
        for r in &rows {
            line(&mut out, &r.iter().map(String::as_str).collect::<Vec<_>>());
        }
        let _ = writeln!(
            out,
            "horizon {}  base seed {}",
            self.horizon, self.base_seed
        );
        out
    }

    pub fn write_text(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.text_table())?;
        Ok(())
    }
}
