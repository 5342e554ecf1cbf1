//! Multivariate time-series panels, CSV ingestion and MAD scales.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{s, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// An `n × p` panel of observations: rows are time points, columns are
/// variables. Entries are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelSeries {
    values: Array2<f64>,
    names: Vec<String>,
}

impl PanelSeries {
    pub fn new(values: Array2<f64>, names: Vec<String>) -> Result<Self> {
        let (n, p) = values.dim();
        if p == 0 {
            return Err(Error::InvalidArgument("panel needs at least one column".into()));
        }
        if n < 2 {
            return Err(Error::InsufficientData {
                what: "panel rows",
                needed: 2,
                available: n,
            });
        }
        if names.len() != p {
            return Err(Error::dims(format!("{p} names"), format!("{} names", names.len())));
        }
        if let Some(((t, i), v)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: t + 1,
                column: i + 1,
                value: v.to_string(),
            });
        }
        Ok(Self { values, names })
    }

    /// Panel with generated column names `V1..Vp`.
    pub fn from_values(values: Array2<f64>) -> Result<Self> {
        let names = default_names(values.ncols());
        Self::new(values, names)
    }

    /// Same column names, new values of identical shape.
    pub fn with_values(&self, values: Array2<f64>) -> Result<Self> {
        if values.dim() != self.values.dim() {
            return Err(Error::dims(
                format!("{:?}", self.values.dim()),
                format!("{:?}", values.dim()),
            ));
        }
        Self::new(values, self.names.clone())
    }

    /// Rows `start..end` as a new panel.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end > self.n() {
            return Err(Error::InvalidArgument(format!(
                "row range {start}..{end} outside 0..{}",
                self.n()
            )));
        }
        Self::new(self.values.slice(s![start..end, ..]).to_owned(), self.names.clone())
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn row(&self, t: usize) -> ArrayView1<'_, f64> {
        self.values.row(t)
    }

    pub fn column(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.column(i)
    }
}

pub(crate) fn default_names(p: usize) -> Vec<String> {
    (1..=p).map(|i| format!("V{i}")).collect()
}

/// Reads a panel from a CSV file.
pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<PanelSeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, has_header)
}

/// Reads a panel from any CSV source. Row and column numbers in errors are
/// 1-based and count data rows only.
pub fn read_csv<R: Read>(reader: R, has_header: bool) -> Result<PanelSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let names = if has_header {
        let headers = rdr.headers().map_err(|e| Error::Csv(e.to_string()))?;
        Some(headers.iter().map(str::to_owned).collect::<Vec<_>>())
    } else {
        None
    };

    let mut data = Vec::new();
    let mut width = names.as_ref().map(Vec::len);
    let mut rows = 0;
    for (r, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        let row = r + 1;
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        match width {
            Some(w) if w != record.len() => {
                return Err(Error::Ragged {
                    row,
                    expected: w,
                    found: record.len(),
                })
            }
            None => width = Some(record.len()),
            _ => {}
        }
        for (c, field) in record.iter().enumerate() {
            let column = c + 1;
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row,
                column,
                value: field.to_owned(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row,
                    column,
                    value: field.to_owned(),
                });
            }
            data.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::EmptyInput);
    }
    let p = width.unwrap_or(0);
    let values = Array2::from_shape_vec((rows, p), data).map_err(|e| Error::Csv(e.to_string()))?;
    let names = names.unwrap_or_else(|| default_names(p));
    PanelSeries::new(values, names)
}

/// Writes a panel as CSV with a header row. Values use the shortest
/// representation that parses back to the identical `f64`.
pub fn write_csv_to<W: Write>(panel: &PanelSeries, writer: W) -> Result<()> {
    write_matrix_csv(writer, panel.names(), panel.values())
}

pub fn write_csv(panel: &PanelSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv_to(panel, std::io::BufWriter::new(file))
}

/// Writes any matrix as CSV under the given header.
pub fn write_matrix_csv<W: Write, S: AsRef<str>>(
    writer: W,
    header: &[S],
    values: ArrayView2<f64>,
) -> Result<()> {
    if header.len() != values.ncols() {
        return Err(Error::dims(
            format!("{} header fields", values.ncols()),
            header.len(),
        ));
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header.iter().map(|h| h.as_ref()))
        .map_err(|e| Error::Csv(e.to_string()))?;
    for row in values.rows() {
        w.write_record(row.iter().map(|v| format_value(*v)))
            .map_err(|e| Error::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}

pub(crate) fn format_value(v: f64) -> String {
    // Rust's Display for f64 is the shortest round-trip representation.
    format!("{v}")
}

/// Per-variable robust scales σ̂ᵢ (raw median absolute deviation, no
/// Gaussian consistency constant).
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleVector {
    sigma: Vec<f64>,
}

impl ScaleVector {
    pub fn new(sigma: Vec<f64>) -> Result<Self> {
        if sigma.is_empty() {
            return Err(Error::InvalidArgument("empty scale vector".into()));
        }
        if let Some((i, s)) = sigma.iter().enumerate().find(|(_, s)| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::InvalidArgument(format!("scale {} is {s}, must be positive", i + 1)));
        }
        Ok(Self { sigma })
    }

    /// All-ones scales; leaves data untouched under [`standardise`].
    pub fn unit(p: usize) -> Self {
        Self { sigma: vec![1.0; p] }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.sigma
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn method(&self) -> &'static str {
        "mad"
    }
}

/// Median with the even-length convention: mean of the two central order
/// statistics. Reorders `values`.
pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Median absolute deviation of a single series.
pub fn mad(values: ArrayView1<f64>) -> f64 {
    let mut buf: Vec<f64> = values.to_vec();
    let med = median(&mut buf);
    for v in buf.iter_mut() {
        *v = (*v - med).abs();
    }
    median(&mut buf)
}

pub fn mad_scales(x: &PanelSeries) -> Result<ScaleVector> {
    let sigma = x
        .values()
        .columns()
        .into_iter()
        .zip(x.names())
        .map(|(col, name)| {
            let m = mad(col);
            if m > 0.0 {
                Ok(m)
            } else {
                Err(Error::ZeroScale { column: name.clone() })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    ScaleVector::new(sigma)
}

/// Divides column `i` by σ̂ᵢ.
pub fn standardise(x: &PanelSeries, s: &ScaleVector) -> Result<PanelSeries> {
    if s.len() != x.p() {
        return Err(Error::dims(format!("{} scales", x.p()), s.len()));
    }
    let mut values = x.values().to_owned();
    for (mut col, sigma) in values.columns_mut().into_iter().zip(s.as_slice()) {
        col.mapv_inplace(|v| v / sigma);
    }
    x.with_values(values)
}

/// Inverse of [`standardise`].
pub fn unstandardise(x: &PanelSeries, s: &ScaleVector) -> Result<PanelSeries> {
    if s.len() != x.p() {
        return Err(Error::dims(format!("{} scales", x.p()), s.len()));
    }
    let mut values = x.values().to_owned();
    for (mut col, sigma) in values.columns_mut().into_iter().zip(s.as_slice()) {
        col.mapv_inplace(|v| v * sigma);
    }
    x.with_values(values)
}
