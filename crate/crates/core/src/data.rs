//! Survey datasets: ingestion from delimited text, validation, and row
//! subsetting.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scale::ResponseScale;

pub const INCOME: &str = "ln_income";
pub const EDUCATION: &str = "education4";

/// Indicator columns created by [`SurveyDataset::with_education_indicators`];
/// the omitted level is "less than high school".
pub const EDUCATION_INDICATORS: [&str; 3] = ["high_school", "post_secondary", "university"];

/// Responses, named covariates and observation weights on a response scale.
#[derive(Debug, Clone, PartialEq)]
pub struct SurveyDataset {
    responses: Vec<i32>,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    numeracy: Vec<String>,
    weights: Vec<f64>,
    scale: ResponseScale,
    indicator: Option<Vec<u8>>,
}

impl SurveyDataset {
    /// Builds a dataset from column vectors. `weights = None` means unit weights.
    /// The numeracy design defaults to every covariate.
    pub fn new(
        responses: Vec<i32>,
        names: Vec<String>,
        columns: Vec<Vec<f64>>,
        weights: Option<Vec<f64>>,
        scale: ResponseScale,
    ) -> Result<Self> {
        let n = responses.len();
        if n == 0 {
            return Err(Error::InvalidData("dataset has no rows".into()));
        }
        if names.len() != columns.len() {
            return Err(Error::InvalidData("column names and columns differ in count".into()));
        }
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(Error::InvalidData(format!("duplicate column `{name}`")));
            }
        }
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != n {
                return Err(Error::InvalidData(format!("column `{name}` has wrong length")));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidData(format!("column `{name}` has non-finite entries")));
            }
        }
        if let Some(&bad) = responses.iter().find(|&&s| !scale.contains(s)) {
            return Err(Error::OutOfScale {
                value: bad,
                min: scale.min_value(),
                max: scale.max_value(),
            });
        }
        let weights = weights.unwrap_or_else(|| vec![1.0; n]);
        if weights.len() != n {
            return Err(Error::InvalidData("weights have wrong length".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidData("weights must be finite and nonnegative".into()));
        }
        if weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidData("weights sum to zero".into()));
        }
        let numeracy = names.clone();
        Ok(Self { responses, names, columns, numeracy, weights, scale, indicator: None })
    }

    /// Selects which covariates form the numeracy (`z`) design.
    pub fn with_numeracy_covariates<S: AsRef<str>>(mut self, names: &[S]) -> Result<Self> {
        let mut z = Vec::with_capacity(names.len());
        for n in names {
            let n = n.as_ref();
            if !self.names.iter().any(|c| c == n) {
                return Err(Error::UnknownCovariate(n.to_string()));
            }
            z.push(n.to_string());
        }
        self.numeracy = z;
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.responses.len()
    }

    pub fn n_covariates(&self) -> usize {
        self.names.len()
    }

    pub fn responses(&self) -> &[i32] {
        &self.responses
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.names
    }

    pub fn numeracy_covariates(&self) -> &[String] {
        &self.numeracy
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn scale(&self) -> &ResponseScale {
        &self.scale
    }

    /// 0/1 "chose the higher response" indicator attached by a pair selector.
    pub fn indicator(&self) -> Option<&[u8]> {
        self.indicator.as_deref()
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| Error::UnknownCovariate(name.to_string()))
    }

    /// Copy with every weight set to one.
    pub fn without_weights(&self) -> Self {
        let mut out = self.clone();
        out.weights = vec![1.0; self.n_rows()];
        out
    }

    /// Weights rescaled to mean one, for variance formulas.
    pub(crate) fn normalized_weights(&self) -> Vec<f64> {
        let scale = self.n_rows() as f64 / self.total_weight();
        self.weights.iter().map(|w| w * scale).collect()
    }

    /// N x K design matrix of the named columns, optionally with a leading
    /// column of ones.
    pub fn design<S: AsRef<str>>(&self, names: &[S], intercept: bool) -> Result<DMatrix<f64>> {
        let cols: Vec<&[f64]> = names.iter().map(|n| self.column(n.as_ref())).collect::<Result<_>>()?;
        let k = cols.len() + usize::from(intercept);
        let n = self.n_rows();
        Ok(DMatrix::from_fn(n, k, |i, j| {
            if intercept {
                if j == 0 { 1.0 } else { cols[j - 1][i] }
            } else {
                cols[j][i]
            }
        }))
    }

    /// Row-major N x K copy of the named columns.
    pub(crate) fn row_major<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<f64>> {
        let cols: Vec<&[f64]> = names.iter().map(|n| self.column(n.as_ref())).collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(self.n_rows() * cols.len());
        for i in 0..self.n_rows() {
            out.extend(cols.iter().map(|c| c[i]));
        }
        Ok(out)
    }

    /// New dataset with the given rows, in the given order (repeats allowed).
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptySelection);
        }
        let weights: Vec<f64> = rows.iter().map(|&r| self.weights[r]).collect();
        if weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::EmptySelection);
        }
        Ok(Self {
            responses: rows.iter().map(|&r| self.responses[r]).collect(),
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| rows.iter().map(|&r| c[r]).collect()).collect(),
            numeracy: self.numeracy.clone(),
            weights,
            scale: self.scale,
            indicator: self.indicator.as_ref().map(|ind| rows.iter().map(|&r| ind[r]).collect()),
        })
    }

    /// Same covariates and weights with new responses.
    pub(crate) fn with_responses(&self, responses: Vec<i32>) -> Self {
        debug_assert_eq!(responses.len(), self.n_rows());
        Self { responses, indicator: None, ..self.clone() }
    }

    pub fn subset(&self, selector: Selector) -> Result<Self> {
        let scale = self.scale;
        let check = |s: i32| {
            if scale.contains(s) {
                Ok(())
            } else {
                Err(Error::OutOfScale { value: s, min: scale.min_value(), max: scale.max_value() })
            }
        };
        let keep: Box<dyn Fn(i32) -> bool> = match selector {
            Selector::DropFocal => Box::new(move |s| !scale.is_focal(s)),
            Selector::Range(a, b) => {
                check(a)?;
                check(b)?;
                if a > b {
                    return Err(Error::InvalidConfig(format!("empty response range [{a}, {b}]")));
                }
                Box::new(move |s| (a..=b).contains(&s))
            }
            Selector::Pair(j) => {
                check(j)?;
                check(j + 1)?;
                Box::new(move |s| s == j || s == j + 1)
            }
        };
        let rows: Vec<usize> = (0..self.n_rows()).filter(|&i| keep(self.responses[i])).collect();
        let mut out = self.select_rows(&rows)?;
        if let Selector::Pair(j) = selector {
            out.indicator = Some(out.responses.iter().map(|&s| u8::from(s == j + 1)).collect());
        }
        Ok(out)
    }

    /// Adds one-hot columns for education levels 2, 3, 4 of an ordinal 1-4 column.
    pub fn with_education_indicators(&self, column: &str) -> Result<Self> {
        let edu = self.column(column)?.to_vec();
        let mut out = self.clone();
        for (level, name) in (2..=4).zip(EDUCATION_INDICATORS) {
            if out.names.iter().any(|n| n == name) {
                return Err(Error::InvalidData(format!("column `{name}` already exists")));
            }
            out.names.push(name.to_string());
            out.columns.push(edu.iter().map(|&e| f64::from(u8::from(e.round() as i32 == level))).collect());
        }
        Ok(out)
    }

    /// Keeps rows where `pred(row)` holds.
    pub fn filter_rows(&self, pred: impl Fn(usize) -> bool) -> Result<Self> {
        let rows: Vec<usize> = (0..self.n_rows()).filter(|&i| pred(i)).collect();
        self.select_rows(&rows)
    }
}

/// Row selectors for subset models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Selector {
    /// Drop every respondent who gave a focal value.
    DropFocal,
    /// Keep responses in the inclusive range.
    Range(i32, i32),
    /// Keep responses `j` and `j + 1`, attaching a chose-higher indicator.
    Pair(i32),
}

/// Column mapping for delimited input. `covariates` maps model names to file
/// column names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub response: String,
    #[serde(default)]
    pub weight: Option<String>,
    pub covariates: BTreeMap<String, String>,
    /// Model names forming the numeracy design; empty means all covariates.
    #[serde(default)]
    pub numeracy: Vec<String>,
    /// Extra file columns kept for filtering (e.g. age); rows missing them are dropped.
    #[serde(default)]
    pub extra: BTreeMap<String, String>,
}

impl Default for Schema {
    fn default() -> Self {
        let covariates = [INCOME, EDUCATION].iter().map(|c| (c.to_string(), c.to_string())).collect();
        Self {
            response: "swl".into(),
            weight: None,
            covariates,
            numeracy: Vec::new(),
            extra: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dataset: SurveyDataset,
    pub dropped: usize,
    pub extra: BTreeMap<String, Vec<f64>>,
}

fn is_missing(field: &str) -> bool {
    let f = field.trim();
    f.is_empty() || f.eq_ignore_ascii_case("na") || f.eq_ignore_ascii_case("nan") || f == "."
}

fn parse_real(field: &str) -> Option<f64> {
    if is_missing(field) {
        return None;
    }
    field.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a comma-separated file with a header row. Rows with a missing
/// response, a missing or non-finite mapped value, or a response outside
/// the scale are dropped and counted.
pub fn load_dataset(path: &Path, schema: &Schema, scale: ResponseScale) -> Result<LoadedDataset> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    read_dataset(text.as_bytes(), schema, scale)
}

/// [`load_dataset`] over any reader.
pub fn read_dataset<R: Read>(reader: R, schema: &Schema, scale: ResponseScale) -> Result<LoadedDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |col: &str| {
        headers
            .iter()
            .position(|h| h == col)
            .ok_or_else(|| Error::MissingColumn(col.to_string()))
    };
    let response_idx = find(&schema.response)?;
    let weight_idx = schema.weight.as_deref().map(find).transpose()?;
    // covariates keep the file's column order
    let mut cov: Vec<(String, usize)> =
        schema.covariates.iter().map(|(name, col)| Ok((name.clone(), find(col)?))).collect::<Result<_>>()?;
    cov.sort_by_key(|(_, idx)| *idx);
    let extra: Vec<(String, usize)> =
        schema.extra.iter().map(|(name, col)| Ok((name.clone(), find(col)?))).collect::<Result<_>>()?;

    let mut responses = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); cov.len()];
    let mut extra_cols: Vec<Vec<f64>> = vec![Vec::new(); extra.len()];
    let mut weights = Vec::new();
    let mut dropped = 0usize;
    let mut row_values = Vec::with_capacity(cov.len());
    let mut extra_values = Vec::with_capacity(extra.len());

    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let raw = record.get(response_idx).unwrap_or("");
        if is_missing(raw) {
            dropped += 1;
            continue;
        }
        let s: i32 = match raw.trim().parse::<i32>() {
            Ok(s) => s,
            Err(_) => match raw.trim().parse::<f64>() {
                Ok(v) if v.fract() == 0.0 && v.abs() < 1e6 => v as i32,
                _ => {
                    return Err(Error::InvalidData(format!(
                        "record {}: response `{raw}` is not an integer",
                        line + 1
                    )))
                }
            },
        };
        if !scale.contains(s) {
            dropped += 1;
            continue;
        }
        row_values.clear();
        row_values.extend(cov.iter().map(|(_, idx)| parse_real(record.get(*idx).unwrap_or(""))));
        extra_values.clear();
        extra_values.extend(extra.iter().map(|(_, idx)| parse_real(record.get(*idx).unwrap_or(""))));
        let w = match weight_idx {
            Some(idx) => parse_real(record.get(idx).unwrap_or("")),
            None => Some(1.0),
        };
        if row_values.iter().chain(&extra_values).any(Option::is_none) || w.is_none() {
            dropped += 1;
            continue;
        }
        let w = w.unwrap();
        if w < 0.0 {
            return Err(Error::InvalidData(format!("record {}: negative weight", line + 1)));
        }
        responses.push(s);
        weights.push(w);
        for (c, v) in columns.iter_mut().zip(&row_values) {
            c.push(v.unwrap());
        }
        for (c, v) in extra_cols.iter_mut().zip(&extra_values) {
            c.push(v.unwrap());
        }
    }
    if responses.is_empty() || weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::NoRows { dropped });
    }
    let names: Vec<String> = cov.iter().map(|(n, _)| n.clone()).collect();
    let mut dataset = SurveyDataset::new(responses, names, columns, Some(weights), scale)?;
    if !schema.numeracy.is_empty() {
        dataset = dataset.with_numeracy_covariates(&schema.numeracy)?;
    }
    let extra = extra.into_iter().map(|(n, _)| n).zip(extra_cols).collect();
    Ok(LoadedDataset { dataset, dropped, extra })
}

/// Writes the dataset as comma-separated text: response column `swl`,
/// then covariates, then `weight`.
pub fn write_dataset<W: std::io::Write>(dataset: &SurveyDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["swl".to_string()];
    header.extend(dataset.names.iter().cloned());
    header.push("weight".into());
    w.write_record(&header)?;
    let mut rec = Vec::with_capacity(header.len());
    for i in 0..dataset.n_rows() {
        rec.clear();
        rec.push(dataset.responses[i].to_string());
        rec.extend(dataset.columns.iter().map(|c| format_real(c[i])));
        rec.push(format_real(dataset.weights[i]));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|source| Error::Io { path: "<output>".into(), source })?;
    Ok(())
}

/// Shortest representation that round-trips through `f64` parsing.
pub fn format_real(v: f64) -> String {
    let s = format!("{v}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}
