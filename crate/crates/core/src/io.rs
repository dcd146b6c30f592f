//! File formats: CSV data matrices, JSON artifacts, flat key-value config
//! files and the CV trace table.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{LoveError, Result};
use crate::linalg;
use crate::model::{Dataset, FactorModel};
use crate::pipeline::FitConfig;
use crate::tuning::{log_spaced, CvPoint, DEFAULT_GRID_MAX, DEFAULT_GRID_MIN, DEFAULT_GRID_SIZE};

/// Largest variable count accepted without an explicit override. The
/// covariance is stored densely, so memory grows as p².
pub const MAX_VARIABLES: usize = 20_000;

pub fn check_variable_count(p: usize, allow_large: bool) -> Result<()> {
    if p > MAX_VARIABLES && !allow_large {
        return Err(LoveError::Config(format!(
            "{p} variables exceeds the limit of {MAX_VARIABLES}; pass the large-input override to proceed"
        )));
    }
    Ok(())
}

/// Reads a numeric CSV file into a dataset. With `has_header`, the first
/// record supplies column names.
pub fn load_csv(path: &Path, has_header: bool) -> Result<Dataset> {
    let file = File::open(path)?;
    parse_csv(BufReader::new(file), has_header)
}

/// Parses CSV text. Blank lines are skipped; rows of the wrong length and
/// cells that are not finite numbers are reported with 1-based row and
/// column positions counted in file lines.
pub fn parse_csv<R: Read>(reader: R, has_header: bool) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut names: Option<Vec<String>> = None;
    let mut width: Option<usize> = None;
    let mut values: Vec<f64> = Vec::new();
    let mut rows = 0;
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        if has_header && names.is_none() {
            names = Some(record.iter().map(str::to_string).collect());
            width = Some(record.len());
            continue;
        }
        match width {
            Some(w) if w != record.len() => {
                return Err(LoveError::Parse {
                    row: line,
                    column: record.len().min(w) + 1,
                    message: format!("expected {w} fields, found {}", record.len()),
                })
            }
            None => width = Some(record.len()),
            _ => {}
        }
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| LoveError::Parse {
                row: line,
                column: c + 1,
                message: format!("`{cell}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(LoveError::Parse {
                    row: line,
                    column: c + 1,
                    message: format!("`{cell}` is not finite"),
                });
            }
            values.push(v);
        }
        rows += 1;
    }
    let p = width.unwrap_or(0);
    if rows == 0 || p == 0 {
        return Err(LoveError::Dimension("no data rows".into()));
    }
    let samples = Array2::from_shape_vec((rows, p), values).map_err(|e| LoveError::Dimension(e.to_string()))?;
    let data = Dataset::new(samples)?;
    match names {
        Some(n) => data.with_names(n),
        None => Ok(data),
    }
}

/// Writes a data matrix as CSV, with a header line when names are present.
pub fn write_csv_matrix<W: Write>(data: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if let Some(names) = &data.names {
        w.write_record(names)?;
    }
    for row in data.samples.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// JSON form of a ground-truth model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "Gamma")]
    pub gamma: Vec<f64>,
}

impl ModelFile {
    pub fn from_model(model: &FactorModel) -> Self {
        Self {
            a: linalg::rows_of(model.a.view()),
            c: linalg::rows_of(model.c.view()),
            gamma: model.gamma.to_vec(),
        }
    }

    pub fn to_model(&self) -> Result<FactorModel> {
        let a = linalg::from_rows(&self.a)?;
        let c = linalg::from_rows(&self.c)?;
        FactorModel::new(a, c, Array1::from(self.gamma.clone()))
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path)?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Parses flat `key = value` text. `#` and `;` start comment lines and
/// `[section]` headers are accepted but carry no meaning. Later keys
/// replace earlier ones.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| LoveError::Config(format!("line {}: expected `key = value`", i + 1)))?;
        let key = k.trim().to_ascii_lowercase();
        if key.is_empty() {
            return Err(LoveError::Config(format!("line {}: empty key", i + 1)));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

pub fn load_config(path: &Path) -> Result<BTreeMap<String, String>> {
    parse_config(&std::fs::read_to_string(path)?)
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| LoveError::Config(format!("`{key}`: cannot parse `{v}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(LoveError::Config(format!("`{key}`: expected a boolean, got `{v}`"))),
    }
}

/// Fit keys understood by [`apply_fit_config`].
pub const FIT_KEYS: [&str; 13] = [
    "center",
    "delta",
    "lambda",
    "mu",
    "lambda_mode",
    "lambda_grid_points",
    "grid",
    "grid_min",
    "grid_max",
    "grid_size",
    "split_seed",
    "row_method",
    "zero_tol",
];

/// Applies the fit-related keys of a parsed config. Keys outside
/// [`FIT_KEYS`] are left for the caller.
pub fn apply_fit_config(map: &BTreeMap<String, String>, cfg: &mut FitConfig) -> Result<()> {
    let get = |k: &str| map.get(k).map(String::as_str);
    if let Some(v) = get("center") {
        cfg.center = parse_bool("center", v)?;
    }
    if let Some(v) = get("delta") {
        cfg.delta = Some(parse_value("delta", v)?);
    }
    if let Some(v) = get("lambda") {
        cfg.lambda = Some(parse_value("lambda", v)?);
    }
    if let Some(v) = get("mu") {
        cfg.mu = Some(parse_value("mu", v)?);
    }
    if let Some(v) = get("lambda_mode") {
        cfg.lambda_mode = v.parse()?;
    }
    if let Some(v) = get("lambda_grid_points") {
        cfg.lambda_grid_points = parse_value("lambda_grid_points", v)?;
    }
    if let Some(v) = get("split_seed") {
        cfg.split_seed = parse_value("split_seed", v)?;
    }
    if let Some(v) = get("row_method") {
        cfg.row_method = v.parse()?;
    }
    if let Some(v) = get("zero_tol") {
        cfg.zero_tol = parse_value("zero_tol", v)?;
    }
    if let Some(v) = get("grid") {
        cfg.grid_constants = parse_list(v)?;
    } else if get("grid_min").is_some() || get("grid_max").is_some() || get("grid_size").is_some() {
        let lo = get("grid_min").map_or(Ok(DEFAULT_GRID_MIN), |v| parse_value("grid_min", v))?;
        let hi = get("grid_max").map_or(Ok(DEFAULT_GRID_MAX), |v| parse_value("grid_max", v))?;
        let size = get("grid_size").map_or(Ok(DEFAULT_GRID_SIZE), |v| parse_value("grid_size", v))?;
        cfg.grid_constants = grid_from_range(lo, hi, size)?;
    }
    cfg.validate()
}

/// Comma-separated list of numbers.
pub fn parse_list(v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value("list", s))
        .collect()
}

pub fn grid_from_range(lo: f64, hi: f64, size: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0) || !(hi >= lo) || size == 0 {
        return Err(LoveError::Config(format!(
            "grid range needs 0 < min <= max and a positive size, got [{lo}, {hi}] x {size}"
        )));
    }
    Ok(log_spaced(lo, hi, size))
}

/// One row per δ grid value: `c, delta, K_hat, I_size, cv_value`. Infinite
/// CV values are written as `inf`.
pub fn write_cv_trace_csv<W: Write>(trace: &[CvPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["c", "delta", "K_hat", "I_size", "cv_value"])?;
    for pt in trace {
        w.write_record([
            pt.c.to_string(),
            pt.delta.to_string(),
            pt.k_hat.to_string(),
            pt.i_size.to_string(),
            pt.cv_value.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_csv() {
        let d = parse_csv("1,2\n3,4\n".as_bytes(), false).unwrap();
        assert_eq!(d.samples, ndarray::array![[1.0, 2.0], [3.0, 4.0]]);
        assert!(d.names.is_none());
    }

    #[test]
    fn header_and_blank_trailing_line() {
        let d = parse_csv("g1,g2\n1,2\n3,4\n\n".as_bytes(), true).unwrap();
        assert_eq!(d.names.as_deref(), Some(&["g1".to_string(), "g2".to_string()][..]));
        assert_eq!(d.n(), 2);
    }

    #[test]
    fn ragged_row_is_located() {
        match parse_csv("1,2\n3\n".as_bytes(), false) {
            Err(LoveError::Parse { row, .. }) => assert_eq!(row, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_cell_is_located() {
        match parse_csv("a,b\n1,2\n3,x\n".as_bytes(), true) {
            Err(LoveError::Parse { row, column, .. }) => assert_eq!((row, column), (3, 2)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_csv("1,NaN\n".as_bytes(), false).is_err());
    }

    #[test]
    fn empty_input_rejected() {
        assert!(parse_csv("".as_bytes(), false).is_err());
        assert!(parse_csv("a,b\n".as_bytes(), true).is_err());
    }

    #[test]
    fn config_parsing() {
        let text = "# comment\n[fit]\ndelta = 0.1\nrow_method = hard\ncenter = no\ngrid = 0.5, 1, 2\n";
        let map = parse_config(text).unwrap();
        let mut cfg = FitConfig::default();
        apply_fit_config(&map, &mut cfg).unwrap();
        assert_eq!(cfg.delta, Some(0.1));
        assert!(!cfg.center);
        assert_eq!(cfg.grid_constants, vec![0.5, 1.0, 2.0]);
        assert_eq!(cfg.row_method, crate::rows::RowMethod::HardThreshold);
        assert!(parse_config("novalue\n").is_err());
        let bad = parse_config("mu = -1").unwrap();
        assert!(apply_fit_config(&bad, &mut FitConfig::default()).is_err());
    }

    #[test]
    fn grid_range_keys() {
        let map = parse_config("grid_min = 1\ngrid_max = 4\ngrid_size = 3").unwrap();
        let mut cfg = FitConfig::default();
        apply_fit_config(&map, &mut cfg).unwrap();
        assert_eq!(cfg.grid_constants.len(), 3);
        assert!((cfg.grid_constants[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn variable_cap() {
        assert!(check_variable_count(MAX_VARIABLES, false).is_ok());
        assert!(check_variable_count(MAX_VARIABLES + 1, false).is_err());
        assert!(check_variable_count(MAX_VARIABLES + 1, true).is_ok());
    }

    #[test]
    fn model_file_round_trip() {
        let m = crate::fixtures::overlap_example(1.0);
        let f = ModelFile::from_model(&m);
        let text = serde_json::to_string(&f).unwrap();
        let back: ModelFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_model().unwrap(), m);
    }

    #[test]
    fn csv_write_read() {
        let d = Dataset::new(ndarray::array![[0.1, -2.5], [1e-17, 3.0]])
            .unwrap()
            .with_names(vec!["x".into(), "y".into()])
            .unwrap();
        let mut buf = Vec::new();
        write_csv_matrix(&d, &mut buf).unwrap();
        let back = parse_csv(buf.as_slice(), true).unwrap();
        assert_eq!(back.samples, d.samples);
        assert_eq!(back.names, d.names);
    }
}
