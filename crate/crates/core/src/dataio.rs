//! CSV dataset ingestion, min-max normalization, and model persistence.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::granulation::LabeledDataset;
use crate::multiclass::{TrainedModel, MODEL_FORMAT_VERSION};
use crate::numerics::Matrix;

/// Which column of the CSV carries the class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    /// Header name (requires `has_header`).
    Name(String),
    /// Zero-based column index.
    Index(usize),
    /// The last column (the default).
    Last,
}

#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub path: PathBuf,
    pub label_column: LabelColumn,
    pub has_header: bool,
    pub delimiter: u8,
}

impl DatasetSpec {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            label_column: LabelColumn::Last,
            has_header: true,
            delimiter: b',',
        }
    }
}

/// A loaded dataset: dense-labeled features plus the decoding tables.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub data: LabeledDataset,
    /// Original label text per dense class id, in first-appearance order.
    pub label_names: Vec<String>,
    pub feature_names: Vec<String>,
}

impl Dataset {
    pub fn decode(&self, class: usize) -> &str {
        &self.label_names[class]
    }
}

/// Load a delimited text file into a feature matrix and dense labels.
/// Labels are remapped to `0..K-1` in order of first appearance.
pub fn load_csv(spec: &DatasetSpec) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(spec.has_header)
        .delimiter(spec.delimiter)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_path(&spec.path)?;

    let headers: Vec<String> = if spec.has_header {
        reader
            .headers()
            .map_err(|e| Error::ParseError {
                row: 0,
                col: 0,
                message: e.to_string(),
            })?
            .iter()
            .map(str::to_string)
            .collect()
    } else {
        Vec::new()
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut label_names: Vec<String> = Vec::new();
    let mut label_idx: Option<usize> = match &spec.label_column {
        LabelColumn::Index(i) => Some(*i),
        LabelColumn::Name(name) => {
            let idx = headers.iter().position(|h| h == name);
            Some(idx.ok_or_else(|| Error::MissingLabelColumn(name.clone()))?)
        }
        LabelColumn::Last => None,
    };

    for (row_no, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::ParseError {
            row: row_no + 1,
            col: 0,
            message: e.to_string(),
        })?;
        let width = record.len();
        if width < 2 {
            return Err(Error::ParseError {
                row: row_no + 1,
                col: 0,
                message: format!("need at least 2 columns, found {width}"),
            });
        }
        let li = *label_idx.get_or_insert(width - 1);
        if li >= width {
            return Err(Error::MissingLabelColumn(format!("index {li}")));
        }
        let mut features = Vec::with_capacity(width - 1);
        for (col, field) in record.iter().enumerate() {
            if col == li {
                let name = field.to_string();
                let id = match label_names.iter().position(|l| *l == name) {
                    Some(id) => id,
                    None => {
                        label_names.push(name);
                        label_names.len() - 1
                    }
                };
                labels.push(id);
            } else {
                let v: f64 = field.parse().map_err(|_| Error::ParseError {
                    row: row_no + 1,
                    col,
                    message: format!("not a number: {field:?}"),
                })?;
                if !v.is_finite() {
                    return Err(Error::ParseError {
                        row: row_no + 1,
                        col,
                        message: format!("non-finite value {v}"),
                    });
                }
                features.push(v);
            }
        }
        rows.push(features);
    }

    if rows.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no data rows in {}",
            spec.path.display()
        )));
    }
    let li = label_idx.expect("set on first row");
    let feature_names = if spec.has_header {
        headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != li)
            .map(|(_, h)| h.clone())
            .collect()
    } else {
        (0..rows[0].len()).map(|i| format!("f{i}")).collect()
    };

    Ok(Dataset {
        data: LabeledDataset::new(Matrix::from_rows(&rows)?, labels)?,
        label_names,
        feature_names,
    })
}

/// Per-feature (min, max) over the rows of `train`.
pub fn fit_minmax(train: &Matrix) -> Vec<(f64, f64)> {
    let d = train.cols();
    let mut stats = vec![(f64::INFINITY, f64::NEG_INFINITY); d];
    for i in 0..train.rows() {
        for (s, &v) in stats.iter_mut().zip(train.row(i)) {
            s.0 = s.0.min(v);
            s.1 = s.1.max(v);
        }
    }
    stats
}

/// Map each feature to [0, 1] with train statistics; constant features map
/// to 0, values outside the training range extrapolate beyond [0, 1].
pub fn apply_minmax(m: &Matrix, stats: &[(f64, f64)]) -> Result<Matrix> {
    if m.cols() != stats.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} feature columns vs {} normalization stats",
            m.cols(),
            stats.len()
        )));
    }
    let rows: Vec<Vec<f64>> = (0..m.rows())
        .map(|i| normalize_point(m.row(i), stats).expect("width checked"))
        .collect();
    if rows.is_empty() {
        return Ok(Matrix::zeros(0, m.cols()));
    }
    Matrix::from_rows(&rows)
}

pub fn normalize_point(z: &[f64], stats: &[(f64, f64)]) -> Result<Vec<f64>> {
    if z.len() != stats.len() {
        return Err(Error::DimensionMismatch(format!(
            "point has {} features, normalization expects {}",
            z.len(),
            stats.len()
        )));
    }
    Ok(z.iter()
        .zip(stats)
        .map(|(&v, &(lo, hi))| {
            let range = hi - lo;
            if range > 0.0 {
                (v - lo) / range
            } else {
                0.0
            }
        })
        .collect())
}

/// Convenience wrapper fitting on `train` and mapping both matrices.
pub fn normalize_fit_apply(
    train: &Matrix,
    other: &Matrix,
) -> Result<(Matrix, Matrix, Vec<(f64, f64)>)> {
    if train.rows() == 0 {
        return Err(Error::EmptyInput("normalization fit on empty matrix".into()));
    }
    let stats = fit_minmax(train);
    Ok((
        apply_minmax(train, &stats)?,
        apply_minmax(other, &stats)?,
        stats,
    ))
}

/// Whole-file atomic write: temp file in the same directory, then rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "out".into())
    ));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    let json = serde_json::to_vec_pretty(model)?;
    atomic_write(path, &json)
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let bytes = fs::read(path)?;
    let model: TrainedModel = serde_json::from_slice(&bytes)?;
    if model.version != MODEL_FORMAT_VERSION {
        return Err(Error::InvalidParameter(format!(
            "unsupported model version {:?}, expected {MODEL_FORMAT_VERSION:?}",
            model.version
        )));
    }
    Ok(model)
}
