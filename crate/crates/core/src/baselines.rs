//! Baseline rotations: iterative quantization (ITQ) and an untrained random
//! stack.

use nalgebra::DMatrix;

use crate::embedding::{normalize, EmbeddingSet};
use crate::error::{Error, Result};
use crate::householder::{decompose_orthogonal, random_stack, HouseholderStack};
use crate::linalg::random_orthogonal;
use crate::loss::sign;
use crate::matrix::RowMatrix;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItqConfig {
    pub iterations: usize,
    pub seed: u64,
    /// Subtract column means before fitting (and before hashing).
    pub center: bool,
}

impl Default for ItqConfig {
    fn default() -> Self {
        Self {
            iterations: 50,
            seed: 0,
            center: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItqModel {
    /// `R` in the row convention `B = sign(V R)`; the column-vector map is
    /// `R^T`.
    pub rotation: DMatrix<f64>,
    /// Column means removed before fitting, when centering is on.
    pub mean: Option<Vec<f64>>,
    /// `|V R_t - sign(V R_t)|_F^2` after every iteration.
    pub objectives: Vec<f64>,
}

impl ItqModel {
    /// The rotation as a Householder stack acting on column vectors.
    pub fn to_stack(&self) -> Result<HouseholderStack> {
        decompose_orthogonal(&self.rotation.transpose(), 1e-8)
    }

    /// Applies the fitted centering, if any.
    pub fn prepare(&self, e: &EmbeddingSet) -> Result<EmbeddingSet> {
        match &self.mean {
            Some(m) => e.subtract(m),
            None => Ok(e.clone()),
        }
    }
}

fn rotate_rows(v: &RowMatrix, r: &DMatrix<f64>) -> RowMatrix {
    let k = v.cols();
    let mut out = RowMatrix::zeros(v.rows(), k);
    for i in 0..v.rows() {
        let src = v.row(i);
        let dst = out.row_mut(i);
        for (c, d) in dst.iter_mut().enumerate() {
            *d = (0..k).map(|a| src[a] * r[(a, c)]).sum();
        }
    }
    out
}

/// `|V R - sign(V R)|_F^2`.
pub fn itq_objective(v: &RowMatrix, r: &DMatrix<f64>) -> f64 {
    rotate_rows(v, r)
        .as_slice()
        .iter()
        .map(|&x| {
            let d = x - sign(x);
            d * d
        })
        .sum()
}

/// Orthogonal `R` minimizing `|V R - B|_F`.
pub fn procrustes(v: &RowMatrix, b: &RowMatrix, iteration: usize) -> Result<DMatrix<f64>> {
    let k = v.cols();
    // M = B^T V
    let mut m = DMatrix::<f64>::zeros(k, k);
    for i in 0..v.rows() {
        let (vr, br) = (v.row(i), b.row(i));
        for a in 0..k {
            for c in 0..k {
                m[(a, c)] += br[a] * vr[c];
            }
        }
    }
    let svd = m.try_svd(true, true, f64::EPSILON, 10_000).ok_or(Error::Svd { iteration })?;
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Svd { iteration }),
    };
    // B^T V = U S V^T  =>  R = V U^T
    Ok(v_t.transpose() * u.transpose())
}

/// Runs `iterations` alternating steps from `r0` on already-prepared rows.
pub fn itq_iterate(v: &RowMatrix, r0: DMatrix<f64>, iterations: usize) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let mut r = r0;
    let mut objectives = Vec::with_capacity(iterations);
    for it in 0..iterations {
        let mut b = rotate_rows(v, &r);
        b.as_mut_slice().iter_mut().for_each(|x| *x = sign(*x));
        r = procrustes(v, &b, it)?;
        objectives.push(itq_objective(v, &r));
    }
    Ok((r, objectives))
}

/// ITQ on normalized (and optionally centered) embeddings, starting from a
/// seeded random orthogonal matrix.
pub fn itq_fit(e: &EmbeddingSet, cfg: &ItqConfig) -> Result<ItqModel> {
    if cfg.iterations == 0 {
        return Err(Error::InvalidConfig("ITQ needs at least one iteration".into()));
    }
    if e.is_empty() {
        return Err(Error::EmptyInput);
    }
    let k = e.dim();
    let (mean, prepared) = if cfg.center {
        let m = e.column_means();
        let c = e.subtract(&m)?;
        (Some(m), c)
    } else {
        (None, e.clone())
    };
    let v = normalize(&prepared)?.into_data();
    let r0 = random_orthogonal(k, cfg.seed);
    let (rotation, objectives) = itq_iterate(&v, r0, cfg.iterations)?;
    Ok(ItqModel {
        rotation,
        mean,
        objectives,
    })
}

/// Untrained random stack, the control condition for trained rotations.
pub fn random_rotation_baseline(k: usize, seed: u64) -> HouseholderStack {
    random_stack(k, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::householder::orthogonality_error;

    fn cube(k: usize) -> RowMatrix {
        let rows: Vec<Vec<f64>> = (0..1usize << k)
            .map(|c| (0..k).map(|b| if c >> b & 1 == 1 { 1.0 } else { -1.0 }).collect())
            .collect();
        RowMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn identity_is_fixed_point_on_codes() {
        let v = cube(3);
        let (r, obj) = itq_iterate(&v, DMatrix::identity(3, 3), 1).unwrap();
        assert!((r - DMatrix::<f64>::identity(3, 3)).abs().max() < 1e-12);
        assert!(obj[0].abs() < 1e-20);
    }

    #[test]
    fn procrustes_beats_rotation_grid_in_2d() {
        let v = RowMatrix::from_rows(&[[1.2, 0.3], [-0.4, 1.1], [0.9, -0.8], [-1.3, -0.2]]).unwrap();
        let b = RowMatrix::from_rows(&[[1.0, 1.0], [-1.0, 1.0], [1.0, -1.0], [-1.0, 1.0]]).unwrap();
        let r = procrustes(&v, &b, 0).unwrap();
        let cost = |r: &DMatrix<f64>| {
            let vr = rotate_rows(&v, r);
            vr.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
        };
        let best = cost(&r);
        for step in 0..3600 {
            let t = step as f64 * std::f64::consts::PI / 1800.0;
            let (s, c) = t.sin_cos();
            let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
            let refl = DMatrix::from_row_slice(2, 2, &[c, s, s, -c]);
            assert!(best <= cost(&rot) + 1e-9);
            assert!(best <= cost(&refl) + 1e-9);
        }
    }

    #[test]
    fn objective_is_monotone_and_rotation_orthogonal() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let t = i as f64 * 0.37;
                vec![t.sin() + 0.1, (2.0 * t).cos(), (0.5 * t).sin() - 0.3, t.cos() * 0.5 + 0.2]
            })
            .collect();
        let e = EmbeddingSet::from_rows(&rows).unwrap();
        let model = itq_fit(&e, &ItqConfig { iterations: 30, seed: 3, center: false }).unwrap();
        assert_eq!(model.objectives.len(), 30);
        for w in model.objectives.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{} > {}", w[1], w[0]);
        }
        assert!(orthogonality_error(&model.rotation) < 1e-8);
        let s = model.to_stack().unwrap();
        assert!((s.to_matrix() - model.rotation.transpose()).abs().max() < 1e-8);
    }

    #[test]
    fn two_point_example_improves_on_identity() {
        let s = 2f64.sqrt();
        let e = EmbeddingSet::from_rows(&[[s, 0.0], [0.0, s]]).unwrap();
        let model = itq_fit(&e, &ItqConfig::default()).unwrap();
        let v = normalize(&e).unwrap().into_data();
        let at_identity = itq_objective(&v, &DMatrix::identity(2, 2));
        // per-row L2 loss is 4 - 2 sqrt 2
        assert!((at_identity - 2.0 * (4.0 - 2.0 * s)).abs() < 1e-12);
        assert!(*model.objectives.last().unwrap() <= at_identity + 1e-12);
    }

    #[test]
    fn centering_records_means() {
        let e = EmbeddingSet::from_rows(&[[1.0, 2.0], [3.0, 1.0], [2.0, 5.0]]).unwrap();
        let model = itq_fit(&e, &ItqConfig { iterations: 5, seed: 1, center: true }).unwrap();
        assert_eq!(model.mean.as_deref(), Some(&[2.0, 8.0 / 3.0][..]));
        let again = itq_fit(&e, &ItqConfig { iterations: 5, seed: 1, center: true }).unwrap();
        assert_eq!(model, again);
    }

    #[test]
    fn rejects_zero_iterations() {
        let e = EmbeddingSet::from_rows(&[[1.0, 2.0]]).unwrap();
        assert!(itq_fit(&e, &ItqConfig { iterations: 0, ..Default::default() }).is_err());
    }

    #[test]
    fn random_baseline_is_reproducible() {
        assert_eq!(random_rotation_baseline(6, 9), random_rotation_baseline(6, 9));
        assert!(orthogonality_error(&random_rotation_baseline(6, 9).to_matrix()) < 1e-8);
    }
}
