//! Time-series containers, CSV ingestion and the seeded simulators.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, BoxMuller, ChaCha8Rng};

/// An immutable sequence of `n ≥ 1` observations in `ℝ^p`.
///
/// Rows are stored contiguously. Public indices are 0-based except in
/// [`lag_window`], which follows the usual `t = 1..=n` time convention.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    dim: usize,
    labels: Option<Vec<String>>,
    row_labels: Option<Vec<String>>,
}

impl TimeSeries {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).ok_or(Error::EmptySeries)?;
        if dim == 0 {
            return Err(Error::invalid("observations must have dimension ≥ 1"));
        }
        let mut values = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            values.extend(row);
        }
        Self::from_flat(values, dim)
    }

    pub fn from_scalars(values: Vec<f64>) -> Result<Self> {
        Self::from_flat(values, 1)
    }

    pub fn from_flat(values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("observations must have dimension ≥ 1"));
        }
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        if values.len() % dim != 0 {
            return Err(Error::invalid("value count is not a multiple of the dimension"));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value at observation {}",
                pos / dim + 1
            )));
        }
        Ok(Self {
            values,
            dim,
            labels: None,
            row_labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_row_labels(mut self, row_labels: Vec<String>) -> Result<Self> {
        if row_labels.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: row_labels.len(),
            });
        }
        self.row_labels = Some(row_labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn row_labels(&self) -> Option<&[String]> {
        self.row_labels.as_deref()
    }

    /// Observation at 0-based row `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }

    /// Rows `start..end` (0-based, half-open) as a new series.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::OutOfRange(format!(
                "slice {start}..{end} of a series of length {}",
                self.len()
            )));
        }
        Ok(Self {
            values: self.values[start * self.dim..end * self.dim].to_vec(),
            dim: self.dim,
            labels: self.labels.clone(),
            row_labels: self.row_labels.as_ref().map(|r| r[start..end].to_vec()),
        })
    }
}

/// `(X_{t-1}, …, X_{t-k})`, most recent first, for 1-based `t` with `k < t ≤ n`.
pub fn lag_window(series: &TimeSeries, t: usize, k: usize) -> Result<Vec<&[f64]>> {
    if t <= k || t > series.len() {
        return Err(Error::OutOfRange(format!(
            "lag window needs k < t ≤ n, got t={t}, k={k}, n={}",
            series.len()
        )));
    }
    // X_{t-j} lives at 0-based row t-1-j
    Ok((1..=k).map(|j| series.row(t - 1 - j)).collect())
}

/// Sample variance with divisor `n` of a scalar series.
pub fn empirical_variance(series: &TimeSeries) -> Result<f64> {
    if series.dim() != 1 {
        return Err(Error::invalid("empirical variance needs a scalar series"));
    }
    variance(series.as_flat())
}

pub(crate) fn variance(xs: &[f64]) -> Result<f64> {
    if xs.len() < 2 {
        return Err(Error::invalid("variance needs at least two observations"));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    Ok(xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n)
}

// ---------------------------------------------------------------------------
// CSV

/// Which CSV columns become the series, in order.
#[derive(Debug, Clone, Default)]
pub struct CsvSchema {
    pub columns: Vec<String>,
    /// Optional column kept verbatim as row labels (e.g. quarter names).
    pub date_column: Option<String>,
}

impl CsvSchema {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            date_column: None,
        }
    }

    pub fn with_date_column(mut self, name: impl Into<String>) -> Self {
        self.date_column = Some(name.into());
        self
    }
}

/// Reads a headed CSV; rows are reported 1-based, counting data rows only.
pub fn load_csv<R: Read>(source: R, schema: &CsvSchema) -> Result<TimeSeries> {
    if schema.columns.is_empty() {
        return Err(Error::invalid("schema maps no columns"));
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    let headers = reader.headers()?.clone();
    let position = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let indices = schema
        .columns
        .iter()
        .map(|c| position(c))
        .collect::<Result<Vec<_>>>()?;
    let date_index = schema.date_column.as_deref().map(position).transpose()?;

    let mut values = Vec::new();
    let mut dates = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = r + 1;
        for (name, &i) in schema.columns.iter().zip(&indices) {
            let cell = record.get(i).unwrap_or("").trim();
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: name.clone(),
                message: format!("cannot parse '{cell}' as a decimal"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: name.clone(),
                    message: format!("non-finite value '{cell}'"),
                });
            }
            values.push(v);
        }
        if let Some(i) = date_index {
            dates.push(record.get(i).unwrap_or("").trim().to_string());
        }
    }
    if values.is_empty() {
        return Err(Error::EmptySeries);
    }
    let series = TimeSeries::from_flat(values, schema.columns.len())?
        .with_labels(schema.columns.clone())?;
    if date_index.is_some() {
        series.with_row_labels(dates)
    } else {
        Ok(series)
    }
}

/// Reads every column except `date_column` (kept as row labels), in file
/// order.
pub fn load_csv_all<R: Read>(mut source: R, date_column: Option<&str>) -> Result<TimeSeries> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let columns: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .filter(|h| Some(h.as_str()) != date_column)
        .collect();
    let mut schema = CsvSchema::new(columns);
    if let Some(d) = date_column {
        schema = schema.with_date_column(d);
    }
    load_csv(text.as_bytes(), &schema)
}

/// Column names used by [`save_csv`]: the series labels, or `x1..xp`.
pub fn column_names(series: &TimeSeries) -> Vec<String> {
    series
        .labels()
        .map(<[String]>::to_vec)
        .unwrap_or_else(|| (1..=series.dim()).map(|j| format!("x{j}")).collect())
}

/// Writes the series with a header; row labels, if any, go in a leading `date` column.
pub fn save_csv<W: Write>(series: &TimeSeries, sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    let mut header = Vec::new();
    if series.row_labels().is_some() {
        header.push("date".to_string());
    }
    header.extend(column_names(series));
    writer.write_record(&header)?;
    for (i, row) in series.rows().enumerate() {
        let mut record = Vec::with_capacity(header.len());
        if let Some(dates) = series.row_labels() {
            record.push(dates[i].clone());
        }
        record.extend(row.iter().map(|v| v.to_string()));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Simulation

/// Autoregressive recursions used by the simulation studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// `X_t = 0.5 X_{t-1} + ε_t`
    Ar1,
    /// `X_t = 0.5 sin(X_{t-1}) + ε_t`
    SinAr1,
    /// `X_t = 0.5 X_{t-1} + 0.1 X_{t-2} + ε_t`
    Ar2,
    /// `X_t = 0.6 X_{t-4} + 0.1 X_{t-8} + ε_t`
    Sparse48,
    /// `X_t = cos(X_{t-1}) sin(X_{t-2}) + ε_t`
    CosSin,
}

impl Model {
    pub fn max_lag(self) -> usize {
        match self {
            Model::Ar1 | Model::SinAr1 => 1,
            Model::Ar2 | Model::CosSin => 2,
            Model::Sparse48 => 8,
        }
    }

    /// Conditional mean given `lags[j-1] = X_{t-j}`.
    pub fn step(self, lags: &[f64]) -> f64 {
        match self {
            Model::Ar1 => 0.5 * lags[0],
            Model::SinAr1 => 0.5 * lags[0].sin(),
            Model::Ar2 => 0.5 * lags[0] + 0.1 * lags[1],
            Model::Sparse48 => 0.6 * lags[3] + 0.1 * lags[7],
            Model::CosSin => lags[0].cos() * lags[1].sin(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::Ar1 => "ar1",
            Model::SinAr1 => "sinar1",
            Model::Ar2 => "ar2",
            Model::Sparse48 => "sparse48",
            Model::CosSin => "cossin",
        }
    }
}

/// Innovation law of the simulators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum Innovation {
    /// Uniform on `[-a, a]`.
    Uniform { a: f64 },
    /// Centered Gaussian with standard deviation `sigma`.
    Gaussian { sigma: f64 },
}

impl Innovation {
    pub fn scale(self) -> f64 {
        match self {
            Innovation::Uniform { a } => a,
            Innovation::Gaussian { sigma } => sigma,
        }
    }

    pub fn variance(self) -> f64 {
        match self {
            Innovation::Uniform { a } => a * a / 3.0,
            Innovation::Gaussian { sigma } => sigma * sigma,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Innovation::Uniform { .. } => "uniform",
            Innovation::Gaussian { .. } => "gaussian",
        }
    }
}

pub const DEFAULT_BURN_IN: usize = 1000;
/// Uniform half-width and Gaussian deviation of the simulation studies.
pub const UNIFORM_A: f64 = 0.70;
pub const GAUSSIAN_SIGMA: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub model: Model,
    pub innovation: Innovation,
    pub n: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(model: Model, innovation: Innovation, n: usize, seed: u64) -> Self {
        Self {
            model,
            innovation,
            n,
            burn_in: DEFAULT_BURN_IN,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("series length must be ≥ 1"));
        }
        let scale = self.innovation.scale();
        // scale 0 is accepted: it gives the noise-free recursion
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(Error::invalid(format!("innovation scale must be ≥ 0, got {scale}")));
        }
        Ok(())
    }
}

/// Draws iid innovations from a private, seeded stream.
#[derive(Debug, Clone)]
pub struct InnovationSampler {
    law: Innovation,
    rng: ChaCha8Rng,
    normal: BoxMuller,
}

impl InnovationSampler {
    pub fn new(law: Innovation, seed: u64) -> Self {
        Self {
            law,
            rng: rng::seeded(seed),
            normal: BoxMuller::new(),
        }
    }

    pub fn sample(&mut self) -> f64 {
        match self.law {
            Innovation::Uniform { a } => rng::uniform_symmetric(&mut self.rng, a),
            Innovation::Gaussian { sigma } => sigma * self.normal.sample(&mut self.rng),
        }
    }
}

pub fn generate(spec: &GeneratorSpec) -> Result<TimeSeries> {
    generate_with_innovations(spec).map(|(s, _)| s)
}

/// Runs the recursion from a zero state, dropping `burn_in` leading samples.
/// Also returns the innovations that drove the retained observations.
pub fn generate_with_innovations(spec: &GeneratorSpec) -> Result<(TimeSeries, Vec<f64>)> {
    spec.validate()?;
    let p = spec.model.max_lag();
    let total = spec.burn_in + spec.n;
    let mut sampler = InnovationSampler::new(spec.innovation, spec.seed);
    // history[j] = X_{t-1-j}
    let mut history = vec![0.0; p];
    let mut values = Vec::with_capacity(spec.n);
    let mut innovations = Vec::with_capacity(spec.n);
    for t in 0..total {
        let eps = sampler.sample();
        let x = spec.model.step(&history) + eps;
        history.rotate_right(1);
        history[0] = x;
        if t >= spec.burn_in {
            values.push(x);
            innovations.push(eps);
        }
    }
    Ok((TimeSeries::from_scalars(values)?, innovations))
}

/// Synthetic two-column stand-in for the growth/climate-indicator data set.
///
/// Columns are `gdp` (quarterly growth, in percent) and `climate` (a business
/// climate indicator centered near 100). The indicator is an AR(1) around 100;
/// growth responds to last quarter's growth, the indicator level and its
/// signed squared change, with skewed uniform shocks.
pub fn gdp_standin(n: usize, seed: u64) -> Result<TimeSeries> {
    if n < 3 {
        return Err(Error::invalid("stand-in series needs n ≥ 3"));
    }
    let mut rng = rng::seeded(seed);
    let mut normal = BoxMuller::new();
    let burn = 200;
    let mut climate = vec![100.0, 100.0];
    let mut gdp = vec![0.5, 0.5];
    for t in 2..burn + n {
        let i_prev = climate[t - 1];
        let i_new = 100.0 + 0.85 * (i_prev - 100.0) + 3.0 * normal.sample(&mut rng);
        let change = climate[t - 1] - climate[t - 2];
        let shock = rng::uniform_symmetric(&mut rng, 0.5);
        // left-skewed shocks: occasional large negative surprises
        let shock = if shock < -0.35 { 2.0 * shock } else { shock };
        let g = -2.6 + 0.2 * gdp[t - 1] + 0.03 * i_prev + 0.005 * change * change.abs() + shock;
        climate.push(i_new);
        gdp.push(g);
    }
    let rows = (burn..burn + n).map(|t| vec![gdp[t], climate[t]]).collect();
    TimeSeries::from_rows(rows)?.with_labels(vec!["gdp".into(), "climate".into()])
}
