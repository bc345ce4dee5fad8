//! Continuous embeddings with optional multi-hot labels.

use crate::error::{Error, Result};
use crate::householder::NORM_FLOOR;
use crate::matrix::{norm_sq, RowMatrix};

/// `n x k` embedding matrix plus, optionally, one label set per row.
///
/// An empty label set means the item is unlabeled; evaluation rejects it.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    data: RowMatrix,
    labels: Option<Vec<Vec<u32>>>,
}

impl EmbeddingSet {
    pub fn new(data: RowMatrix) -> Self {
        Self { data, labels: None }
    }

    pub fn with_labels(data: RowMatrix, labels: Vec<Vec<u32>>) -> Result<Self> {
        if labels.len() != data.rows() {
            return Err(Error::DimensionMismatch {
                expected: data.rows(),
                actual: labels.len(),
            });
        }
        Ok(Self {
            data,
            labels: Some(labels),
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Ok(Self::new(RowMatrix::from_rows(rows)?))
    }

    /// Number of items.
    #[inline]
    pub fn len(&self) -> usize {
        self.data.rows()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.rows() == 0
    }

    /// Embedding width.
    #[inline]
    pub fn dim(&self) -> usize {
        self.data.cols()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        self.data.row(i)
    }

    pub fn data(&self) -> &RowMatrix {
        &self.data
    }

    pub fn into_data(self) -> RowMatrix {
        self.data
    }

    pub fn labels(&self) -> Option<&[Vec<u32>]> {
        self.labels.as_deref()
    }

    pub fn set_labels(&mut self, labels: Vec<Vec<u32>>) -> Result<()> {
        if labels.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(())
    }

    /// Checks finiteness and that every row norm exceeds the norm floor.
    pub fn validate(&self) -> Result<()> {
        self.data.check_finite()?;
        for (row, r) in self.data.iter_rows().enumerate() {
            if !(norm_sq(r).sqrt() > NORM_FLOOR) {
                return Err(Error::ZeroRow { row });
            }
        }
        Ok(())
    }

    /// Column means.
    pub fn column_means(&self) -> Vec<f64> {
        let k = self.dim();
        let mut mean = vec![0.0; k];
        for r in self.data.iter_rows() {
            for (m, x) in mean.iter_mut().zip(r) {
                *m += x;
            }
        }
        let n = self.len().max(1) as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    /// Subtracts `offset` from every row. Labels are kept.
    pub fn subtract(&self, offset: &[f64]) -> Result<Self> {
        if offset.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: offset.len(),
            });
        }
        let mut data = self.data.clone();
        for i in 0..data.rows() {
            for (x, m) in data.row_mut(i).iter_mut().zip(offset) {
                *x -= m;
            }
        }
        Ok(Self {
            data,
            labels: self.labels.clone(),
        })
    }
}

/// Rescales every row onto the sphere of radius `sqrt(k)`, the sphere that
/// contains all of `{-1, +1}^k`.
pub fn normalize(e: &EmbeddingSet) -> Result<EmbeddingSet> {
    e.data.check_finite()?;
    let radius = (e.dim() as f64).sqrt();
    let mut data = e.data.clone();
    for i in 0..data.rows() {
        let row = data.row_mut(i);
        let norm = norm_sq(row).sqrt();
        if !(norm > NORM_FLOOR) {
            return Err(Error::ZeroRow { row: i });
        }
        let scale = radius / norm;
        row.iter_mut().for_each(|x| *x *= scale);
    }
    Ok(EmbeddingSet {
        data,
        labels: e.labels.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_examples() {
        let e = EmbeddingSet::from_rows(&[[2.0, 0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(normalize(&e).unwrap().row(0), &[2.0, 0.0, 0.0, 0.0]);

        let e = EmbeddingSet::from_rows(&[[3.0, 4.0], [1.0, 1.0]]).unwrap();
        let n = normalize(&e).unwrap();
        let s2 = 2f64.sqrt();
        assert!((n.row(0)[0] - 3.0 * s2 / 5.0).abs() < 1e-12);
        assert!((n.row(0)[1] - 4.0 * s2 / 5.0).abs() < 1e-12);
        assert!((n.row(0)[0] - 0.8485).abs() < 1e-4);
        assert!((n.row(0)[1] - 1.1314).abs() < 1e-4);
        assert!((n.row(1)[0] - 1.0).abs() < 1e-15);
        assert!((n.row(1)[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normalize_reports_zero_row() {
        let e = EmbeddingSet::from_rows(&[[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]]).unwrap();
        assert!(matches!(normalize(&e).unwrap_err(), Error::ZeroRow { row: 1 }));
    }

    #[test]
    fn normalize_rejects_nan() {
        let e = EmbeddingSet::from_rows(&[[1.0, f64::NAN]]).unwrap();
        assert!(matches!(normalize(&e).unwrap_err(), Error::NonFinite { row: 0, col: 1 }));
    }

    #[test]
    fn labels_must_match_row_count() {
        let data = RowMatrix::zeros(3, 2);
        assert!(EmbeddingSet::with_labels(data, vec![vec![1]]).is_err());
    }

    #[test]
    fn centering() {
        let e = EmbeddingSet::from_rows(&[[1.0, 2.0], [3.0, 6.0]]).unwrap();
        let m = e.column_means();
        assert_eq!(m, vec![2.0, 4.0]);
        let c = e.subtract(&m).unwrap();
        assert_eq!(c.row(0), &[-1.0, -2.0]);
        assert_eq!(c.row(1), &[1.0, 2.0]);
    }
}
