//! Kernel evaluation and Gram-matrix construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dot, Matrix};

/// Kernel choice. The Gaussian width enters as `exp(-||x - y||^2 / p^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    Gaussian { p: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Gaussian { p } if *p > 0.0 => Ok(()),
            KernelSpec::Gaussian { p } => Err(Error::InvalidParameter(format!(
                "Gaussian width must be positive, got {p}"
            ))),
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            KernelSpec::Linear => dot(x, y),
            KernelSpec::Gaussian { p } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (p * p)).exp()
            }
        }
    }
}

/// Entry (i, j) of the result is `k(x_i, y_j)` over the rows of `x` and `y`.
pub fn gram(x: &Matrix, y: &Matrix, spec: KernelSpec) -> Result<Matrix> {
    if x.cols() != y.cols() {
        return Err(Error::DimensionMismatch(format!(
            "gram: {} vs {} feature columns",
            x.cols(),
            y.cols()
        )));
    }
    spec.validate()?;
    let mut out = Matrix::zeros(x.rows(), y.rows());
    for i in 0..x.rows() {
        let xi = x.row(i);
        for j in 0..y.rows() {
            out.set(i, j, spec.eval(xi, y.row(j)));
        }
    }
    Ok(out)
}
