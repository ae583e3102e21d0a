//! Tab-separated tables and JSON documents.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! table read back reproduces the in-memory values exactly.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sigfactor_core::dataset::{DesignMatrix, EffectKind, ExpressionDataset};
use sigfactor_core::linalg::Matrix;
use sigfactor_core::survival::{SurvivalData, SurvivalRecord};

use crate::error::{CliError, Result};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn parse_f64(path: &Path, line: usize, field: &str) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| CliError::parse(path, line, format!("`{field}` is not a number")))
}

/// Non-empty lines split on tabs, with 1-based line numbers.
fn rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r').split('\t').collect()))
}

/// A labeled numeric table: first header cell is a corner label, the rest are
/// column ids; each row starts with its row id.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub corner: String,
    pub row_ids: Vec<String>,
    pub col_ids: Vec<String>,
    pub values: Matrix,
}

pub fn read_table(path: &Path) -> Result<Table> {
    let text = read_text(path)?;
    let mut it = rows(&text);
    let (_, header) = it.next().ok_or_else(|| CliError::parse(path, 1, "empty table"))?;
    let corner = header[0].to_string();
    let col_ids: Vec<String> = header[1..].iter().map(|s| s.to_string()).collect();
    let mut row_ids = Vec::new();
    let mut data = Vec::new();
    for (line, fields) in it {
        if fields.len() != col_ids.len() + 1 {
            return Err(CliError::parse(
                path,
                line,
                format!("{} fields, expected {}", fields.len(), col_ids.len() + 1),
            ));
        }
        row_ids.push(fields[0].to_string());
        for f in &fields[1..] {
            data.push(parse_f64(path, line, f)?);
        }
    }
    let values = Matrix::from_vec(row_ids.len(), col_ids.len(), data)?;
    Ok(Table { corner, row_ids, col_ids, values })
}

pub fn write_table(path: &Path, corner: &str, row_ids: &[String], col_ids: &[String], values: &Matrix) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut body = || -> std::io::Result<()> {
        write!(w, "{corner}")?;
        for c in col_ids {
            write!(w, "\t{c}")?;
        }
        writeln!(w)?;
        for (r, id) in row_ids.iter().enumerate() {
            write!(w, "{id}")?;
            for v in values.row(r) {
                write!(w, "\t{v}")?;
            }
            writeln!(w)?;
        }
        w.flush()
    };
    body().map_err(|e| CliError::io(path, e))
}

/// Writes rows of already formatted cells.
pub fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>], sep: char) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(&sep.to_string()));
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(&sep.to_string()));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| CliError::io(path, e))
}

/// Expression matrix: header `id<TAB>sample...`, one variable per row.
/// Variables whose id starts with `control_prefix` are flagged as controls.
pub fn read_expression(path: &Path, control_prefix: &str) -> Result<ExpressionDataset> {
    let t = read_table(path)?;
    Ok(ExpressionDataset::with_control_prefix(t.values, t.row_ids, t.col_ids, control_prefix)?)
}

pub fn write_expression(path: &Path, ds: &ExpressionDataset) -> Result<()> {
    write_table(path, "id", ds.variable_ids(), ds.sample_ids(), ds.values())
}

/// Design matrix: header `effect<TAB>kind<TAB>sample...`. Columns are
/// reordered to `sample_ids`.
pub fn read_design(path: &Path, sample_ids: &[String]) -> Result<DesignMatrix> {
    let text = read_text(path)?;
    let mut it = rows(&text);
    let (_, header) = it.next().ok_or_else(|| CliError::parse(path, 1, "empty design"))?;
    if header.len() < 2 || header[1] != "kind" {
        return Err(CliError::parse(path, 1, "header must start with `effect<TAB>kind`"));
    }
    let cols: BTreeMap<&str, usize> = header[2..].iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let order = sample_ids
        .iter()
        .map(|s| {
            cols.get(s.as_str())
                .copied()
                .ok_or_else(|| CliError::parse(path, 1, format!("sample `{s}` missing from design")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut names = Vec::new();
    let mut kinds = Vec::new();
    let mut data = Vec::new();
    for (line, f) in it {
        if f.len() != header.len() {
            return Err(CliError::parse(path, line, format!("{} fields, expected {}", f.len(), header.len())));
        }
        names.push(f[0].to_string());
        kinds.push(
            EffectKind::parse(f[1])
                .ok_or_else(|| CliError::parse(path, line, format!("unknown effect kind `{}`", f[1])))?,
        );
        let vals = f[2..].iter().map(|v| parse_f64(path, line, v)).collect::<Result<Vec<_>>>()?;
        data.extend(order.iter().map(|&c| vals[c]));
    }
    let values = Matrix::from_vec(names.len(), sample_ids.len(), data)?;
    Ok(DesignMatrix::new(values, names, kinds)?)
}

pub fn write_design(path: &Path, design: &DesignMatrix, sample_ids: &[String]) -> Result<()> {
    let mut header = vec!["effect", "kind"];
    header.extend(sample_ids.iter().map(String::as_str));
    let rows: Vec<Vec<String>> = (0..design.n_effects())
        .map(|e| {
            let mut r = vec![design.effect_names()[e].clone(), design.kinds()[e].as_str().to_string()];
            r.extend(design.values().row(e).iter().map(|v| v.to_string()));
            r
        })
        .collect();
    write_rows(path, &header, &rows, '\t')
}

/// Survival table: header `id<TAB>time<TAB>event<TAB>covariate...`; event is 1 or 0.
pub fn read_survival(path: &Path) -> Result<SurvivalData> {
    let text = read_text(path)?;
    let mut it = rows(&text);
    let (_, header) = it.next().ok_or_else(|| CliError::parse(path, 1, "empty survival table"))?;
    if header.len() < 3 || header[1] != "time" || header[2] != "event" {
        return Err(CliError::parse(path, 1, "header must start with `id<TAB>time<TAB>event`"));
    }
    let names: Vec<String> = header[3..].iter().map(|s| s.to_string()).collect();
    let mut records = Vec::new();
    for (line, f) in it {
        if f.len() != header.len() {
            return Err(CliError::parse(path, line, format!("{} fields, expected {}", f.len(), header.len())));
        }
        let event = match f[2].trim() {
            "1" | "true" => true,
            "0" | "false" => false,
            other => return Err(CliError::parse(path, line, format!("event must be 0 or 1, got `{other}`"))),
        };
        let covariates = f[3..].iter().map(|v| parse_f64(path, line, v)).collect::<Result<Vec<_>>>()?;
        records.push(SurvivalRecord { id: f[0].to_string(), time: parse_f64(path, line, f[1])?, event, covariates });
    }
    Ok(SurvivalData::new(names, records)?)
}

pub fn write_survival(path: &Path, data: &SurvivalData) -> Result<()> {
    let mut header = vec!["id", "time", "event"];
    header.extend(data.covariate_names().iter().map(String::as_str));
    let rows: Vec<Vec<String>> = data
        .records()
        .iter()
        .map(|r| {
            let mut row = vec![r.id.clone(), r.time.to_string(), if r.event { "1" } else { "0" }.to_string()];
            row.extend(r.covariates.iter().map(|v| v.to_string()));
            row
        })
        .collect();
    write_rows(path, &header, &rows, '\t')
}

/// Appends covariates from a table whose rows are covariates and columns are
/// record ids. Every record must have a column.
pub fn join_covariates(data: &SurvivalData, table: &Table, path: &Path) -> Result<SurvivalData> {
    let cols: BTreeMap<&str, usize> = table.col_ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut names = data.covariate_names().to_vec();
    names.extend(table.row_ids.iter().cloned());
    let records = data
        .records()
        .iter()
        .map(|r| {
            let &c = cols
                .get(r.id.as_str())
                .ok_or_else(|| CliError::parse(path, 1, format!("record `{}` has no covariate column", r.id)))?;
            let mut cov = r.covariates.clone();
            cov.extend((0..table.row_ids.len()).map(|k| table.values[(k, c)]));
            Ok(SurvivalRecord { covariates: cov, ..r.clone() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SurvivalData::new(names, records)?)
}

/// One id per non-empty line, or a comma-separated inline list.
pub fn read_id_list(path: &Path) -> Result<Vec<String>> {
    Ok(read_text(path)?.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Json { path: path.into(), source: e })?;
    s.push('\n');
    fs::write(path, s).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Json { path: path.into(), source: e })
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}
