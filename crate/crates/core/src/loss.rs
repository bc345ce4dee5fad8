//! Quantization losses on rotated, normalized embeddings.
//!
//! Every loss averages a per-row term over the rows of `Z` and sums over
//! coordinates. `sign(0) = +1` throughout and `sign` is treated as locally
//! constant when differentiating.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::RowMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    /// Squared distance to the nearest hypercube vertex.
    L2,
    /// Absolute distance to the nearest hypercube vertex.
    L1,
    /// `LSE(-z^2)`, a smooth maximum of the negated squared entries.
    MinEntry,
    /// `sum_j F(z_j)(1 - F(z_j))` with the logistic CDF `F`.
    BitVar,
}

impl LossKind {
    pub const ALL: [LossKind; 4] = [LossKind::L2, LossKind::L1, LossKind::MinEntry, LossKind::BitVar];

    /// Default learning rate for rotation training with this loss.
    pub fn default_learning_rate(self) -> f64 {
        match self {
            LossKind::BitVar => 0.01,
            _ => 0.1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LossKind::L2 => "l2",
            LossKind::L1 => "l1",
            LossKind::MinEntry => "min-entry",
            LossKind::BitVar => "bit-var",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2" => Ok(LossKind::L2),
            "l1" => Ok(LossKind::L1),
            "min-entry" => Ok(LossKind::MinEntry),
            "bit-var" => Ok(LossKind::BitVar),
            other => Err(Error::InvalidConfig(format!("unknown loss '{other}'"))),
        }
    }
}

/// Hash sign: non-negative values map to `+1`.
#[inline]
pub fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Logistic CDF.
#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn loss_value(kind: LossKind, z: &RowMatrix) -> Result<f64> {
    z.check_finite()?;
    Ok(evaluate(kind, z.as_slice(), z.cols(), None))
}

/// Gradient of [`loss_value`] with respect to `z`.
pub fn loss_grad(kind: LossKind, z: &RowMatrix) -> Result<RowMatrix> {
    z.check_finite()?;
    let mut grad = RowMatrix::zeros(z.rows(), z.cols());
    evaluate(kind, z.as_slice(), z.cols(), Some(grad.as_mut_slice()));
    Ok(grad)
}

/// Mean loss over the rows of the flat row-major `z`; when `grad` is given it
/// is overwritten with the gradient of that mean.
pub(crate) fn evaluate(kind: LossKind, z: &[f64], k: usize, mut grad: Option<&mut [f64]>) -> f64 {
    if k == 0 || z.is_empty() {
        if let Some(g) = grad {
            g.fill(0.0);
        }
        return 0.0;
    }
    let n = z.len() / k;
    let inv_n = 1.0 / n as f64;
    let mut total = 0.0;
    for (i, row) in z.chunks_exact(k).enumerate() {
        let g = grad.as_deref_mut().map(|g| &mut g[i * k..(i + 1) * k]);
        total += row_term(kind, row, g, inv_n);
    }
    total * inv_n
}

fn row_term(kind: LossKind, z: &[f64], grad: Option<&mut [f64]>, inv_n: f64) -> f64 {
    match kind {
        LossKind::L2 => {
            let mut acc = 0.0;
            for &x in z {
                let d = x - sign(x);
                acc += d * d;
            }
            if let Some(g) = grad {
                for (gj, &x) in g.iter_mut().zip(z) {
                    *gj = 2.0 * inv_n * (x - sign(x));
                }
            }
            acc
        }
        LossKind::L1 => {
            let mut acc = 0.0;
            for &x in z {
                acc += (x - sign(x)).abs();
            }
            if let Some(g) = grad {
                for (gj, &x) in g.iter_mut().zip(z) {
                    let d = x - sign(x);
                    *gj = if d > 0.0 {
                        inv_n
                    } else if d < 0.0 {
                        -inv_n
                    } else {
                        0.0
                    };
                }
            }
            acc
        }
        LossKind::MinEntry => {
            let max = z.iter().map(|x| -x * x).fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = z.iter().map(|x| (-x * x - max).exp()).sum();
            let lse = max + sum.ln();
            if let Some(g) = grad {
                for (gj, &x) in g.iter_mut().zip(z) {
                    let softmax = (-x * x - max).exp() / sum;
                    *gj = inv_n * softmax * (-2.0 * x);
                }
            }
            lse
        }
        LossKind::BitVar => {
            let mut acc = 0.0;
            for &x in z {
                let f = logistic(x);
                acc += f * (1.0 - f);
            }
            if let Some(g) = grad {
                for (gj, &x) in g.iter_mut().zip(z) {
                    let f = logistic(x);
                    *gj = inv_n * f * (1.0 - f) * (1.0 - 2.0 * f);
                }
            }
            acc
        }
    }
}
