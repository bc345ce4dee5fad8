//! Orthogonal maps as products of Householder reflections.
//!
//! A stack `[v_1, ..., v_m]` represents `U = H(v_1) H(v_2) ... H(v_m)` with
//! `H(v) = I - 2 v v^T / |v|^2`. Applied to a vector, `H(v_m)` acts first and
//! `H(v_1)` last. The same convention is used by [`HouseholderStack::apply`],
//! [`HouseholderStack::to_matrix`], [`decompose_orthogonal`] and the trainer.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::{axpy, dot, norm_sq, RowMatrix};

/// Smallest admissible reflection-vector norm.
pub const NORM_FLOOR: f64 = 1e-12;

/// Reflects `x` across the hyperplane with normal `v`.
pub fn reflect(v: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if v.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            actual: x.len(),
        });
    }
    let nv = norm_sq(v);
    if !(nv.sqrt() > NORM_FLOOR) {
        return Err(Error::DegenerateVector { norm: nv.sqrt() });
    }
    let mut out = x.to_vec();
    axpy(-2.0 * dot(v, x) / nv, v, &mut out);
    Ok(out)
}

/// Ordered list of reflection vectors in `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct HouseholderStack {
    dim: usize,
    /// `m * dim` entries, vector-major.
    vectors: Vec<f64>,
}

impl HouseholderStack {
    /// The empty stack, representing the identity on `R^dim`.
    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            vectors: Vec::new(),
        }
    }

    pub fn new<V: AsRef<[f64]>>(dim: usize, vectors: &[V]) -> Result<Self> {
        let mut flat = Vec::with_capacity(vectors.len() * dim);
        for v in vectors {
            let v = v.as_ref();
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: v.len(),
                });
            }
            flat.extend_from_slice(v);
        }
        Self::from_flat(dim, flat)
    }

    /// Builds a stack from `m * dim` vector-major values.
    pub fn from_flat(dim: usize, vectors: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("stack dimension must be positive".into()));
        }
        if !vectors.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim * (vectors.len() / dim + 1),
                actual: vectors.len(),
            });
        }
        for (i, v) in vectors.chunks_exact(dim).enumerate() {
            if let Some(col) = v.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite { row: i, col });
            }
            let norm = norm_sq(v).sqrt();
            if !(norm > NORM_FLOOR) {
                return Err(Error::DegenerateVector { norm });
            }
        }
        Ok(Self { dim, vectors })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of reflections.
    #[inline]
    pub fn len(&self) -> usize {
        self.vectors.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    #[inline]
    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.vectors.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.vectors
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: len,
            });
        }
        Ok(())
    }

    /// `U x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        let mut out = x.to_vec();
        apply_in_place(&self.vectors, self.dim, &reflection_scales(&self.vectors, self.dim), &mut out);
        Ok(out)
    }

    /// Applies `U` to every row of `x` without forming `U`. Cost `O(n m k)`.
    pub fn apply_rows(&self, x: &RowMatrix) -> Result<RowMatrix> {
        let mut out = x.clone();
        self.apply_rows_in_place(&mut out)?;
        Ok(out)
    }

    pub fn apply_rows_in_place(&self, x: &mut RowMatrix) -> Result<()> {
        self.check_dim(x.cols())?;
        let scales = reflection_scales(&self.vectors, self.dim);
        for i in 0..x.rows() {
            apply_in_place(&self.vectors, self.dim, &scales, x.row_mut(i));
        }
        Ok(())
    }

    /// Materializes `U = H(v_1) ... H(v_m)` by right-multiplying the
    /// reflections onto the identity.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let k = self.dim;
        let mut u = DMatrix::<f64>::identity(k, k);
        for v in self.iter() {
            let scale = 2.0 / norm_sq(v);
            // U <- U - scale (U v) v^T
            let uv: Vec<f64> = (0..k)
                .map(|r| (0..k).map(|c| u[(r, c)] * v[c]).sum())
                .collect();
            for c in 0..k {
                let f = scale * v[c];
                for (r, uvr) in uv.iter().enumerate() {
                    u[(r, c)] -= uvr * f;
                }
            }
        }
        u
    }
}

/// `2 / |v_i|^2` for every vector in a flat stack.
pub(crate) fn reflection_scales(vectors: &[f64], dim: usize) -> Vec<f64> {
    vectors.chunks_exact(dim).map(|v| 2.0 / norm_sq(v)).collect()
}

/// Applies the reflections to `x`, last vector first.
#[inline]
pub(crate) fn apply_in_place(vectors: &[f64], dim: usize, scales: &[f64], x: &mut [f64]) {
    for (v, &scale) in vectors.chunks_exact(dim).zip(scales).rev() {
        let s = dot(v, x);
        axpy(-scale * s, v, x);
    }
}

/// Max-abs deviation of `U^T U` from the identity.
pub fn orthogonality_error(u: &DMatrix<f64>) -> f64 {
    let k = u.ncols();
    let gram = u.transpose() * u;
    let mut worst = 0.0f64;
    for r in 0..gram.nrows() {
        for c in 0..k {
            let target = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((gram[(r, c)] - target).abs());
        }
    }
    worst
}

/// Writes an orthogonal matrix as at most `k` reflections whose product
/// reproduces it.
///
/// Column by column, the trailing part `x` of column `j` is mapped onto
/// `|x| e_j` by the reflection with `v = x - |x| e_j`. Columns whose target is
/// already met within `tol * k` are skipped. What remains is diagonal with
/// `+1` everywhere except possibly the last entry; a `-1` there costs one more
/// reflection along `e_k`.
pub fn decompose_orthogonal(u: &DMatrix<f64>, tol: f64) -> Result<HouseholderStack> {
    let k = u.nrows();
    if k == 0 {
        return Err(Error::InvalidConfig("matrix must be non-empty".into()));
    }
    if u.ncols() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: u.ncols(),
        });
    }
    let deviation = orthogonality_error(u);
    if !(deviation <= tol) {
        return Err(Error::NotOrthogonal { deviation, tol });
    }

    let skip_below = (tol * k as f64).max(NORM_FLOOR);
    let mut a = u.clone();
    let mut vectors: Vec<f64> = Vec::new();
    for j in 0..k.saturating_sub(1) {
        let tail_sq: f64 = (j + 1..k).map(|r| a[(r, j)] * a[(r, j)]).sum();
        let head = a[(j, j)];
        let norm = (head * head + tail_sq).sqrt();
        // v_j = head - norm, rewritten to avoid cancellation when head > 0
        let vj = if head > 0.0 {
            -tail_sq / (head + norm)
        } else {
            head - norm
        };
        let v_norm = (vj * vj + tail_sq).sqrt();
        if v_norm <= skip_below {
            continue;
        }
        let mut v = vec![0.0; k];
        v[j] = vj;
        for r in j + 1..k {
            v[r] = a[(r, j)];
        }
        let scale = 2.0 / (v_norm * v_norm);
        // A <- H(v) A, only rows j.. and columns j.. change
        for c in j..k {
            let s: f64 = (j..k).map(|r| v[r] * a[(r, c)]).sum();
            let f = scale * s;
            for r in j..k {
                a[(r, c)] -= f * v[r];
            }
        }
        vectors.extend_from_slice(&v);
    }
    if a[(k - 1, k - 1)] < 0.0 {
        let mut e = vec![0.0; k];
        e[k - 1] = 1.0;
        vectors.extend_from_slice(&e);
    }
    HouseholderStack::from_flat(k, vectors)
}

/// `k` reflection vectors with i.i.d. standard normal entries.
pub fn random_stack(k: usize, seed: u64) -> HouseholderStack {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vectors = Vec::with_capacity(k * k);
    for _ in 0..k {
        vectors.extend(random_direction(k, &mut rng));
    }
    HouseholderStack { dim: k, vectors }
}

/// Gaussian vector with norm above [`NORM_FLOOR`].
pub(crate) fn random_direction<R: rand::Rng>(k: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
        if norm_sq(&v).sqrt() > NORM_FLOOR {
            return v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_orthogonal;

    fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    #[test]
    fn reflect_examples() {
        assert_eq!(reflect(&[1.0, 0.0], &[3.0, 5.0]).unwrap(), vec![-3.0, 5.0]);
        assert_eq!(reflect(&[1.0, 1.0], &[1.0, 1.0]).unwrap(), vec![-1.0, -1.0]);
        assert_eq!(reflect(&[1.0, 1.0], &[1.0, -1.0]).unwrap(), vec![1.0, -1.0]);
    }

    #[test]
    fn reflect_rejects_zero_vector() {
        let err = reflect(&[0.0, 0.0], &[1.0, 2.0]).unwrap_err();
        assert!(matches!(err, Error::DegenerateVector { .. }));
        let err = reflect(&[1e-13, 0.0], &[1.0, 2.0]).unwrap_err();
        assert!(matches!(err, Error::DegenerateVector { .. }));
    }

    #[test]
    fn stack_rejects_degenerate_and_mismatched_vectors() {
        assert!(matches!(
            HouseholderStack::new(2, &[[0.0, 0.0]]).unwrap_err(),
            Error::DegenerateVector { .. }
        ));
        assert!(matches!(
            HouseholderStack::new(3, &[vec![1.0, 0.0]]).unwrap_err(),
            Error::DimensionMismatch { .. }
        ));
        assert!(matches!(
            HouseholderStack::new(2, &[[f64::NAN, 1.0]]).unwrap_err(),
            Error::NonFinite { .. }
        ));
    }

    #[test]
    fn empty_stack_is_identity() {
        let s = HouseholderStack::identity(3);
        let x = RowMatrix::from_rows(&[[1.0, -2.0, 3.5]]).unwrap();
        assert_eq!(s.apply_rows(&x).unwrap(), x);
        assert_eq!(s.to_matrix(), DMatrix::identity(3, 3));
    }

    #[test]
    fn single_reflection_examples() {
        let s = HouseholderStack::new(2, &[[1.0, 0.0]]).unwrap();
        assert_eq!(s.apply(&[3.0, 5.0]).unwrap(), vec![-3.0, 5.0]);
        let expected = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        assert_eq!(s.to_matrix(), expected);
    }

    #[test]
    fn repeated_vector_cancels() {
        let v = [0.3, -1.2, 2.0, 0.7];
        let s = HouseholderStack::new(4, &[v, v]).unwrap();
        let x = [1.0, 2.0, -3.0, 4.0];
        let y = s.apply(&x).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn apply_checks_width() {
        let s = random_stack(3, 1);
        assert!(matches!(
            s.apply(&[1.0, 2.0]).unwrap_err(),
            Error::DimensionMismatch { expected: 3, actual: 2 }
        ));
        let x = RowMatrix::zeros(2, 4);
        assert!(s.apply_rows(&x).is_err());
    }

    #[test]
    fn random_stack_is_orthogonal_with_expected_determinant() {
        for k in 1..=12 {
            let s = random_stack(k, 100 + k as u64);
            assert_eq!(s.len(), k);
            let u = s.to_matrix();
            assert!(orthogonality_error(&u) < 1e-10);
            let det = u.determinant();
            let expected = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!((det - expected).abs() < 1e-6, "k={k} det={det}");
        }
    }

    #[test]
    fn random_stack_is_seeded() {
        assert_eq!(random_stack(8, 7), random_stack(8, 7));
        assert_ne!(random_stack(8, 7), random_stack(8, 8));
    }

    #[test]
    fn fast_and_materialized_paths_agree() {
        let s = random_stack(7, 3);
        let u = s.to_matrix();
        let x = RowMatrix::from_rows(&[
            [1.0, 0.5, -0.2, 3.0, 0.0, 1.0, -1.0],
            [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7],
        ])
        .unwrap();
        let y = s.apply_rows(&x).unwrap();
        for i in 0..x.rows() {
            for r in 0..7 {
                let expected: f64 = (0..7).map(|c| u[(r, c)] * x.get(i, c)).sum();
                assert!((y.get(i, r) - expected).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn decompose_identity_is_empty() {
        let s = decompose_orthogonal(&DMatrix::identity(5, 5), 1e-9).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn decompose_single_flip() {
        let u = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        let s = decompose_orthogonal(&u, 1e-9).unwrap();
        assert!(max_abs_diff(&s.to_matrix(), &u) < 1e-12);
        assert_eq!(s.len(), 1);
        // Parallel to e_1.
        assert!(s.vector(0)[1].abs() < 1e-12);
    }

    #[test]
    fn decompose_last_flip_only() {
        let u = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, -1.0]));
        let s = decompose_orthogonal(&u, 1e-9).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.vector(0), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn decompose_roundtrip_random() {
        for k in 2..=16 {
            for seed in 0..5 {
                let u = random_orthogonal(k, seed * 31 + k as u64);
                let s = decompose_orthogonal(&u, 1e-9).unwrap();
                assert!(s.len() <= k);
                assert!(max_abs_diff(&s.to_matrix(), &u) < 1e-8);
            }
        }
    }

    #[test]
    fn decompose_rejects_non_orthogonal() {
        let u = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(matches!(
            decompose_orthogonal(&u, 1e-9).unwrap_err(),
            Error::NotOrthogonal { .. }
        ));
    }
}
