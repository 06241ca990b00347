use super::manifest::{parse_manifest, Manifest};
use super::{apply_transform, DataError, Panel, Quarter, Result, MIN_WINDOW};
use crate::numeric::Matrix;
use std::io::Read;
use std::path::Path;

/// Raw quarterly table as read from CSV; missing cells are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub dates: Vec<Quarter>,
    pub names: Vec<String>,
    /// One vector per column, each of length `dates.len()`.
    pub columns: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    /// Fill an isolated single missing quarter with the previous value.
    pub forward_fill: bool,
    pub min_window: usize,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self { forward_fill: false, min_window: MIN_WINDOW }
    }
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c.eq_ignore_ascii_case("na") || c.eq_ignore_ascii_case("nan") || c == "."
}

/// Rows of FRED-QD files that carry metadata rather than observations.
fn is_metadata_row(first: &str) -> bool {
    let f = first.trim().to_ascii_lowercase();
    matches!(f.as_str(), "factors" | "transform" | "transform:" | "tcode")
}

/// Parses a CSV whose first column holds dates and whose remaining columns
/// hold one series each.
pub fn parse_raw_csv<R: Read>(input: R) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(input);
    let csv_err = |e: csv::Error| DataError::Csv(e.to_string());
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.len() < 2 {
        return Err(DataError::Csv("need a date column and at least one series".into()));
    }
    let names: Vec<String> = header.iter().skip(1).map(|h| h.trim().to_string()).collect();
    let mut dates: Vec<Quarter> = Vec::new();
    let mut columns = vec![Vec::new(); names.len()];
    for rec in reader.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let first = rec.get(0).unwrap_or("");
        if is_metadata_row(first) || rec.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        let date: Quarter = first.parse().map_err(|source| DataError::BadDate { line, source })?;
        if let Some(prev) = dates.last() {
            if prev.next() != date {
                return Err(DataError::Csv(format!("line {line}: {date} does not follow {prev}")));
            }
        }
        dates.push(date);
        for (j, cell) in rec.iter().skip(1).enumerate() {
            let v =
                if is_missing(cell) {
                    f64::NAN
                } else {
                    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                        DataError::NonNumericCell { line, column: names[j].clone(), value: cell.to_string() }
                    })?
                };
            columns[j].push(v);
        }
    }
    Ok(RawTable { dates, names, columns })
}

fn forward_fill_single_gaps(series: &mut [f64]) {
    for t in 1..series.len().saturating_sub(1) {
        if series[t].is_nan() && series[t - 1].is_finite() && series[t + 1].is_finite() {
            series[t] = series[t - 1];
        }
    }
}

/// Transforms, aligns to the common window and standardizes.
pub fn build_panel(raw: &RawTable, manifest: &Manifest, opts: LoadOptions) -> Result<Panel> {
    manifest.validate()?;
    let t = raw.dates.len();
    let mut aligned = Vec::with_capacity(manifest.variables.len());
    for spec in &manifest.variables {
        let j = raw
            .names
            .iter()
            .position(|n| *n == spec.name)
            .ok_or_else(|| DataError::MissingVariable(spec.name.clone()))?;
        let mut series = raw.columns[j].clone();
        if opts.forward_fill {
            forward_fill_single_gaps(&mut series);
        }
        let out = apply_transform(&series, spec.tcode)?;
        let mut full = vec![f64::NAN; t];
        full[t - out.len()..].copy_from_slice(&out);
        aligned.push(full);
    }
    let mut start = 0;
    let mut end = t;
    for col in &aligned {
        let first = col.iter().position(|v| v.is_finite()).unwrap_or(t);
        let last = col.iter().rposition(|v| v.is_finite()).map(|i| i + 1).unwrap_or(0);
        start = start.max(first);
        end = end.min(last);
    }
    let len = end.saturating_sub(start);
    if len < opts.min_window.max(1) {
        return Err(DataError::WindowTooShort { len, min: opts.min_window.max(1) });
    }
    for (spec, col) in manifest.variables.iter().zip(&aligned) {
        if let Some(r) = (start..end).find(|&r| col[r].is_nan()) {
            return Err(DataError::MissingValue { variable: spec.name.clone(), date: raw.dates[r] });
        }
    }
    let m = Matrix::from_fn(len, aligned.len(), |r, c| aligned[c][start + r]);
    Panel::from_transformed(m, manifest.variables.clone(), raw.dates[start..end].to_vec())
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| DataError::Io { path: path.display().to_string(), source })
}

pub fn load_panel(csv_path: &Path, manifest_path: &Path, opts: LoadOptions) -> Result<Panel> {
    let manifest = parse_manifest(&read_file(manifest_path)?)?;
    let raw = parse_raw_csv(read_file(csv_path)?.as_bytes())?;
    build_panel(&raw, &manifest, opts)
}
