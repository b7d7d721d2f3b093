//! CSV ingestion, train/test splitting and time-axis normalization.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::grid::{QuantileForecast, QuantileGrid};

/// Ordered observations with the affine map between raw and normalized time,
/// `t_norm = (t_raw - offset) / scale`.
///
/// After `split_and_normalize` against a training span, training times lie
/// in [0, 1] and test times beyond 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    raw_times: Vec<f64>,
    values: Vec<f64>,
    norm_offset: f64,
    norm_scale: f64,
}

impl TimeSeries {
    /// Series with explicit raw times; normalization starts as the identity.
    pub fn new(raw_times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if raw_times.len() != values.len() {
            return Err(Error::invalid(format!(
                "{} times but {} values",
                raw_times.len(),
                values.len()
            )));
        }
        if raw_times.is_empty() {
            return Err(Error::invalid("time series is empty"));
        }
        for (i, &t) in raw_times.iter().enumerate() {
            if !t.is_finite() {
                return Err(Error::invalid(format!("time at index {i} is not finite")));
            }
            if i > 0 && raw_times[i - 1] >= t {
                return Err(Error::invalid(format!(
                    "times must be strictly increasing; index {i} has {t} after {}",
                    raw_times[i - 1]
                )));
            }
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("value at index {i} is not finite")));
        }
        Ok(TimeSeries { raw_times, values, norm_offset: 0.0, norm_scale: 1.0 })
    }

    /// Series over the implicit index 0..N-1.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let times = (0..values.len()).map(|i| i as f64).collect();
        Self::new(times, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn raw_times(&self) -> &[f64] {
        &self.raw_times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm_offset(&self) -> f64 {
        self.norm_offset
    }

    pub fn norm_scale(&self) -> f64 {
        self.norm_scale
    }

    pub fn normalized_times(&self) -> Vec<f64> {
        self.raw_times.iter().map(|&t| self.normalize_time(t)).collect()
    }

    pub fn normalize_time(&self, raw: f64) -> f64 {
        (raw - self.norm_offset) / self.norm_scale
    }

    pub fn denormalize_time(&self, normalized: f64) -> f64 {
        self.norm_offset + normalized * self.norm_scale
    }

    /// Mean spacing of the raw time axis; the cadence used to extend the
    /// series past its end.
    pub fn mean_step(&self) -> f64 {
        if self.len() < 2 {
            return 1.0;
        }
        (self.raw_times[self.len() - 1] - self.raw_times[0]) / (self.len() - 1) as f64
    }

    /// Replace values, keeping times and normalization constants.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.len() {
            return Err(Error::invalid("replacement values have different length"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("value at index {i} is not finite")));
        }
        Ok(TimeSeries { values, ..self.clone() })
    }
}

/// Split at `floor(N * train_fraction)` and normalize both parts against the
/// training span: offset is the first training time, scale the training
/// span, so training times map into [0, 1] and test times beyond 1.
pub fn split_and_normalize(
    series: &TimeSeries,
    train_fraction: f64,
) -> Result<(TimeSeries, TimeSeries)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let n = series.len();
    let n_train = (n as f64 * train_fraction).floor() as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::invalid(format!(
            "split at {n_train} of {n} leaves an empty partition"
        )));
    }
    let offset = series.raw_times[0];
    let scale = series.raw_times[n_train - 1] - offset;
    if scale <= 0.0 {
        return Err(Error::invalid("training span has zero time extent"));
    }
    let make = |range: std::ops::Range<usize>| TimeSeries {
        raw_times: series.raw_times[range.clone()].to_vec(),
        values: series.values[range].to_vec(),
        norm_offset: offset,
        norm_scale: scale,
    };
    Ok((make(0..n_train), make(n_train..n)))
}

/// Opt-in min-max scaling of the value axis, fitted on training values and
/// inverted on forecast output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueScaler {
    pub offset: f64,
    pub scale: f64,
}

impl ValueScaler {
    pub fn identity() -> Self {
        ValueScaler { offset: 0.0, scale: 1.0 }
    }

    pub fn fit(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("cannot fit value scaler on empty data"));
        }
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = max - min;
        // constant series scale to a constant zero
        let scale = if span > 0.0 { span } else { 1.0 };
        Ok(ValueScaler { offset: min, scale })
    }

    pub fn apply(&self, v: f64) -> f64 {
        (v - self.offset) / self.scale
    }

    pub fn invert(&self, v: f64) -> f64 {
        self.offset + v * self.scale
    }

    pub fn apply_series(&self, series: &TimeSeries) -> Result<TimeSeries> {
        series.with_values(series.values.iter().map(|&v| self.apply(v)).collect())
    }

    pub fn invert_forecast(&self, forecast: &QuantileForecast) -> QuantileForecast {
        let values = forecast.values.mapv(|v| self.invert(v));
        QuantileForecast { times: forecast.times.clone(), grid: forecast.grid.clone(), values }
    }
}

/// Column selector: a 0-based index, or a header name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Column {
    Index(usize),
    Name(String),
}

impl Column {
    /// Digits parse as an index; anything else is a header name.
    pub fn parse(s: &str) -> Column {
        match s.parse::<usize>() {
            Ok(i) => Column::Index(i),
            Err(_) => Column::Name(s.to_string()),
        }
    }

    fn resolve(&self, headers: Option<&csv::StringRecord>, path: &str) -> Result<usize> {
        match self {
            Column::Index(i) => Ok(*i),
            Column::Name(name) => {
                let headers = headers.ok_or_else(|| {
                    Error::invalid(format!(
                        "{path}: column {name:?} requested by name but the file has no header"
                    ))
                })?;
                headers
                    .iter()
                    .position(|h| h.trim() == name)
                    .ok_or_else(|| Error::invalid(format!("{path}: no column named {name:?}")))
            }
        }
    }
}

/// Load a `time,value` CSV (or a single-column value file, in which case the
/// row index is the time axis). Decimal parsing is locale-independent.
pub fn load_csv(
    path: impl AsRef<Path>,
    time_column: Option<&Column>,
    value_column: Option<&Column>,
    has_header: bool,
) -> Result<TimeSeries> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::invalid(format!("{shown}: cannot open: {e}")),
            _ => Error::invalid(format!("{shown}: {e}")),
        })?;

    let headers = if has_header {
        let h = reader
            .headers()
            .map_err(|e| Error::invalid(format!("{shown}: bad header: {e}")))?;
        Some(h.clone())
    } else {
        None
    };

    // Peek the records to learn the width for the default column layout.
    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            path: shown.clone(),
            row: i + 1,
            message: e.to_string(),
        })?;
        records.push(rec);
    }
    if records.is_empty() {
        return Err(Error::invalid(format!("{shown}: file has no data rows")));
    }
    let width = records[0].len();

    let value_idx = match value_column {
        Some(c) => c.resolve(headers.as_ref(), &shown)?,
        None => match &headers {
            Some(h) if h.iter().any(|c| c.trim() == "value") => {
                h.iter().position(|c| c.trim() == "value").unwrap()
            }
            _ => {
                if width == 1 {
                    0
                } else {
                    1
                }
            }
        },
    };
    let time_idx = match time_column {
        Some(c) => Some(c.resolve(headers.as_ref(), &shown)?),
        None => match &headers {
            Some(h) if h.iter().any(|c| c.trim() == "time") => {
                h.iter().position(|c| c.trim() == "time")
            }
            _ => {
                if width == 1 {
                    None
                } else {
                    Some(0)
                }
            }
        },
    };

    let mut times = Vec::with_capacity(records.len());
    let mut values = Vec::with_capacity(records.len());
    for (i, rec) in records.iter().enumerate() {
        let row = i + 1;
        let cell = |idx: usize, what: &str| -> Result<f64> {
            let raw = rec.get(idx).ok_or_else(|| Error::Parse {
                path: shown.clone(),
                row,
                message: format!("missing {what} column {idx}"),
            })?;
            raw.trim().parse::<f64>().map_err(|_| Error::Parse {
                path: shown.clone(),
                row,
                message: format!("cannot parse {what} {raw:?} as a number"),
            })
        };
        values.push(cell(value_idx, "value")?);
        times.push(match time_idx {
            Some(idx) => cell(idx, "time")?,
            None => i as f64,
        });
    }
    for i in 1..times.len() {
        if times[i - 1] >= times[i] {
            return Err(Error::Parse {
                path: shown,
                row: i + 1,
                message: format!(
                    "times must be strictly increasing; {} follows {}",
                    times[i], times[i - 1]
                ),
            });
        }
    }
    TimeSeries::new(times, values)
}

/// Write a `time,value` CSV with lossless shortest-representation decimals.
pub fn write_series_csv(path: impl AsRef<Path>, series: &TimeSeries) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "time,value")?;
    for (t, v) in series.raw_times.iter().zip(series.values.iter()) {
        writeln!(out, "{t},{v}")?;
    }
    out.flush()?;
    Ok(())
}

/// Forecast CSV schema: header `time,tau_<level>,...`, one row per horizon
/// step, all numbers in shortest round-trip decimal form.
pub fn write_forecast_csv(path: impl AsRef<Path>, forecast: &QuantileForecast) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let mut header = String::from("time");
    for tau in forecast.grid.taus() {
        write!(header, ",tau_{tau}").expect("writing to string");
    }
    writeln!(out, "{header}")?;
    for (i, t) in forecast.times.iter().enumerate() {
        let mut line = format!("{t}");
        for m in 0..forecast.grid.len() {
            write!(line, ",{}", forecast.values[[i, m]]).expect("writing to string");
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

/// Read a forecast CSV written by `write_forecast_csv`, reconstructing the
/// grid from the header labels.
pub fn read_forecast_csv(path: impl AsRef<Path>) -> Result<QuantileForecast> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::invalid(format!("{shown}: cannot open: {e}")))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::invalid(format!("{shown}: bad header: {e}")))?
        .clone();
    let mut taus = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        if i == 0 {
            if h != "time" {
                return Err(Error::invalid(format!(
                    "{shown}: first column must be \"time\", got {h:?}"
                )));
            }
            continue;
        }
        let level = h.strip_prefix("tau_").ok_or_else(|| {
            Error::invalid(format!("{shown}: column {h:?} is not a tau_<level> label"))
        })?;
        let tau = level.parse::<f64>().map_err(|_| {
            Error::invalid(format!("{shown}: cannot parse level from column {h:?}"))
        })?;
        taus.push(tau);
    }
    let grid = QuantileGrid::new(taus)?;
    let mut times = Vec::new();
    let mut rows: Vec<f64> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            path: shown.clone(),
            row: i + 1,
            message: e.to_string(),
        })?;
        if rec.len() != grid.len() + 1 {
            return Err(Error::Parse {
                path: shown.clone(),
                row: i + 1,
                message: format!("expected {} cells, found {}", grid.len() + 1, rec.len()),
            });
        }
        for (j, cell) in rec.iter().enumerate() {
            let v = cell.trim().parse::<f64>().map_err(|_| Error::Parse {
                path: shown.clone(),
                row: i + 1,
                message: format!("cannot parse {cell:?} as a number"),
            })?;
            if j == 0 {
                times.push(v);
            } else {
                rows.push(v);
            }
        }
    }
    let n = times.len();
    let values = Array2::from_shape_vec((n, grid.len()), rows)
        .expect("row-major layout matches shape");
    QuantileForecast::new(times, grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write as _;

    fn tmp(name: &str, contents: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("qfnn-data-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(name);
        let mut f = File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    #[test]
    fn loads_headerless_two_column_file() {
        let p = tmp("two_col.csv", "0,1.5\n1,2.5\n");
        let s = load_csv(&p, None, None, false).unwrap();
        assert_eq!(s.raw_times(), &[0.0, 1.0]);
        assert_eq!(s.values(), &[1.5, 2.5]);
    }

    #[test]
    fn loads_named_columns() {
        let p = tmp("named.csv", "value,time\n1.5,0\n2.5,1\n");
        let s = load_csv(
            &p,
            Some(&Column::parse("time")),
            Some(&Column::parse("value")),
            true,
        )
        .unwrap();
        assert_eq!(s.raw_times(), &[0.0, 1.0]);
        assert_eq!(s.values(), &[1.5, 2.5]);
        // default name resolution finds the same columns
        let d = load_csv(&p, None, None, true).unwrap();
        assert_eq!(d, s);
    }

    #[test]
    fn single_column_file_uses_row_index() {
        let p = tmp("single.csv", "5.0\n6.0\n7.0\n");
        let s = load_csv(&p, None, None, false).unwrap();
        assert_eq!(s.raw_times(), &[0.0, 1.0, 2.0]);
        assert_eq!(s.values(), &[5.0, 6.0, 7.0]);
    }

    #[test]
    fn parse_error_names_the_row() {
        let p = tmp("bad.csv", "0,1.5\n1,abc\n");
        let err = load_csv(&p, None, None, false).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2"), "{msg}");
        assert!(msg.contains("abc"), "{msg}");
    }

    #[test]
    fn non_increasing_times_are_rejected() {
        let p = tmp("dup.csv", "0,1.0\n0,2.0\n");
        let err = load_csv(&p, None, None, false).unwrap_err();
        assert!(err.to_string().contains("strictly increasing"));
    }

    #[test]
    fn empty_and_missing_files_error() {
        let p = tmp("empty.csv", "");
        assert!(load_csv(&p, None, None, false).is_err());
        assert!(load_csv("/nonexistent/nope.csv", None, None, false).is_err());
    }

    #[test]
    fn split_and_normalize_maps_train_to_unit_interval() {
        let s = TimeSeries::from_values((0..100).map(|i| i as f64).collect()).unwrap();
        let (train, test) = split_and_normalize(&s, 0.8).unwrap();
        assert_eq!(train.len(), 80);
        assert_eq!(test.len(), 20);
        let tn = train.normalized_times();
        assert_eq!(tn[0], 0.0);
        assert_eq!(tn[79], 1.0);
        assert_eq!(test.norm_offset(), 0.0);
        assert_eq!(test.norm_scale(), 79.0);
        let first_test = test.normalized_times()[0];
        assert!((first_test - 80.0 / 79.0).abs() < 1e-15);
        assert!(test.normalized_times().iter().all(|&t| t > 1.0));
    }

    #[test]
    fn two_point_train_gives_unit_constants() {
        let s = TimeSeries::new(vec![0.0, 1.0, 2.0], vec![5.0, 6.0, 7.0]).unwrap();
        let (train, _) = split_and_normalize(&s, 0.67).unwrap();
        assert_eq!(train.norm_offset(), 0.0);
        assert_eq!(train.norm_scale(), 1.0);
    }

    #[test]
    fn degenerate_span_errors() {
        // a single training point has zero span
        let s = TimeSeries::new(vec![0.0, 1.0], vec![1.0, 2.0]).unwrap();
        assert!(split_and_normalize(&s, 0.5).is_err());
    }

    #[test]
    fn value_scaler_round_trips_and_handles_constants() {
        let sc = ValueScaler::fit(&[2.0, 4.0, 10.0]).unwrap();
        assert_eq!(sc.apply(2.0), 0.0);
        assert_eq!(sc.apply(10.0), 1.0);
        assert!((sc.invert(sc.apply(7.3)) - 7.3).abs() < 1e-12);
        let c = ValueScaler::fit(&[5.0, 5.0]).unwrap();
        assert_eq!(c.apply(5.0), 0.0);
        assert_eq!(c.invert(0.0), 5.0);
    }

    #[test]
    fn forecast_csv_round_trips_exactly() {
        let grid = QuantileGrid::new(vec![0.25, 0.75]).unwrap();
        let values =
            Array2::from_shape_vec((2, 2), vec![1.5, 2.5, -0.125, std::f64::consts::PI]).unwrap();
        let f = QuantileForecast::new(vec![10.0, 11.0], grid, values).unwrap();
        let p = std::env::temp_dir().join("qfnn-data-tests").join("fc.csv");
        std::fs::create_dir_all(p.parent().unwrap()).unwrap();
        write_forecast_csv(&p, &f).unwrap();
        let back = read_forecast_csv(&p).unwrap();
        assert_eq!(back.times, f.times);
        assert_eq!(back.grid.taus(), f.grid.taus());
        assert_eq!(back.values, f.values);
    }

    #[test]
    fn empty_forecast_writes_header_only() {
        let grid = QuantileGrid::new(vec![0.5]).unwrap();
        let f = QuantileForecast::new(vec![], grid, Array2::zeros((0, 1))).unwrap();
        let p = std::env::temp_dir().join("qfnn-data-tests").join("fc_empty.csv");
        std::fs::create_dir_all(p.parent().unwrap()).unwrap();
        write_forecast_csv(&p, &f).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text, "time,tau_0.5\n");
        let back = read_forecast_csv(&p).unwrap();
        assert!(back.is_empty());
    }

    proptest! {
        #[test]
        fn normalization_round_trips(
            start in -1000.0..1000.0f64,
            steps in prop::collection::vec(0.001..10.0f64, 4..40),
            frac in 0.3..0.9f64,
        ) {
            let mut t = start;
            let mut times = vec![t];
            for s in &steps {
                t += s;
                times.push(t);
            }
            let values = vec![1.0; times.len()];
            let series = TimeSeries::new(times.clone(), values).unwrap();
            if let Ok((train, test)) = split_and_normalize(&series, frac) {
                prop_assert_eq!(train.len() + test.len(), series.len());
                for (part, raws) in [(&train, train.raw_times()), (&test, test.raw_times())] {
                    for (&raw, &norm) in raws.iter().zip(part.normalized_times().iter()) {
                        let back = part.denormalize_time(norm);
                        prop_assert!((back - raw).abs() <= 1e-12 * raw.abs().max(1.0));
                    }
                }
                // same constants when applied twice
                let (train2, _) = split_and_normalize(&series, frac).unwrap();
                prop_assert_eq!(train.norm_offset(), train2.norm_offset());
                prop_assert_eq!(train.norm_scale(), train2.norm_scale());
            }
        }
    }
}
