//! JSON file formats.
//!
//! Metrics are stored as either
//! `{"kind":"matrix","n":N,"d":[[...],...]}` or
//! `{"kind":"euclidean","dim":D,"points":[[...],...]}`; graphs as
//! `{"m":M,"edges":[[u,v],...]}`. Indices are 0-based.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{FiniteMetric, MetricForm};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MetricFile {
    Matrix { n: usize, d: Vec<Vec<f64>> },
    Euclidean { dim: usize, points: Vec<Vec<f64>> },
}

impl MetricFile {
    /// Builds the metric. Matrices are validated unless `check` is off;
    /// Euclidean input only has its shape and distinctness checked.
    pub fn into_metric(self, check: bool) -> Result<FiniteMetric> {
        match self {
            MetricFile::Matrix { n, d } => {
                if d.len() != n {
                    return Err(Error::InvalidMetric(format!(
                        "declared n = {n} but found {} rows",
                        d.len()
                    )));
                }
                if check {
                    FiniteMetric::from_matrix(d)
                } else {
                    FiniteMetric::from_matrix_unchecked(d)
                }
            }
            MetricFile::Euclidean { dim, points } => {
                if let Some(i) = points.iter().position(|p| p.len() != dim) {
                    return Err(Error::InvalidMetric(format!(
                        "point {i} has dimension {}, declared {dim}",
                        points[i].len()
                    )));
                }
                FiniteMetric::from_points(points)
            }
        }
    }

    pub fn from_metric(metric: &FiniteMetric) -> Self {
        match metric.form() {
            MetricForm::Matrix => MetricFile::Matrix {
                n: metric.len(),
                d: metric.to_rows(),
            },
            MetricForm::Euclidean => MetricFile::Euclidean {
                dim: metric.dimension().unwrap_or(0),
                points: (0..metric.len()).map(|i| metric.coords(i).unwrap().to_vec()).collect(),
            },
        }
    }
}

/// Parses a metric document.
pub fn parse_metric(text: &str, check: bool) -> Result<FiniteMetric> {
    let file: MetricFile =
        serde_json::from_str(text).map_err(|e| Error::InvalidMetric(format!("malformed metric JSON: {e}")))?;
    file.into_metric(check)
}

/// Serializes a metric in the same format [`parse_metric`] reads.
pub fn metric_to_json(metric: &FiniteMetric) -> String {
    serde_json::to_string(&MetricFile::from_metric(metric)).expect("metrics serialize")
}
