//! Mini-batch Adam training of a Householder stack against a quantization
//! loss.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::adam::{adam_step, AdamParams, AdamState};
use crate::embedding::{normalize, EmbeddingSet};
use crate::error::{Error, Result};
use crate::householder::{
    apply_in_place, random_direction, random_stack, reflection_scales, HouseholderStack, NORM_FLOOR,
};
use crate::loss::{evaluate, LossKind};
use crate::matrix::{axpy, dot, norm_sq, RowMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
}

impl TrainConfig {
    pub const DEFAULT_EPOCHS: usize = 300;
    pub const DEFAULT_BATCH_SIZE: usize = 128;

    /// Defaults for `loss`; the learning rate depends on the loss.
    pub fn new(loss: LossKind) -> Self {
        Self {
            loss,
            learning_rate: loss.default_learning_rate(),
            epochs: Self::DEFAULT_EPOCHS,
            batch_size: Self::DEFAULT_BATCH_SIZE,
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = epochs;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(Error::InvalidConfig("Adam betas must lie in [0, 1)".into()));
        }
        if !(self.adam_epsilon >= 0.0) {
            return Err(Error::InvalidConfig("Adam epsilon must be non-negative".into()));
        }
        Ok(())
    }

    fn adam(&self) -> AdamParams {
        AdamParams {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
        }
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::new(LossKind::L2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean of the batch losses of each epoch.
    pub epoch_losses: Vec<f64>,
    /// Full-data loss at the initial stack.
    pub initial_loss: f64,
    /// Full-data loss at the trained stack.
    pub final_loss: f64,
    pub elapsed: Duration,
    /// How many times a vector fell under the norm floor and was redrawn.
    pub redraws: usize,
}

/// Gradients of a scalar loss through a Householder stack.
#[derive(Debug, Clone, PartialEq)]
pub struct StackGradients {
    /// `m x k`; row `i` is the gradient with respect to `v_i`.
    pub vectors: RowMatrix,
    /// Gradient with respect to the stack input.
    pub input: RowMatrix,
}

/// Reverse-mode pass through `Z = U X` given `dL/dZ`.
pub fn stack_backprop(stack: &HouseholderStack, x: &RowMatrix, g_out: &RowMatrix) -> Result<StackGradients> {
    let k = stack.dim();
    for cols in [x.cols(), g_out.cols()] {
        if cols != k {
            return Err(Error::DimensionMismatch { expected: k, actual: cols });
        }
    }
    if g_out.rows() != x.rows() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            actual: g_out.rows(),
        });
    }
    let scales = reflection_scales(stack.as_flat(), k);
    let mut z = x.clone();
    for i in 0..z.rows() {
        apply_in_place(stack.as_flat(), k, &scales, z.row_mut(i));
    }
    let mut input = g_out.clone();
    let mut vgrad = vec![0.0; stack.as_flat().len()];
    backward(stack.as_flat(), k, &scales, z.as_mut_slice(), input.as_mut_slice(), &mut vgrad);
    Ok(StackGradients {
        vectors: RowMatrix::from_vec(stack.len(), k, vgrad)?,
        input,
    })
}

/// Backward pass over a batch.
///
/// `z` holds the stack outputs and is consumed (each row is walked back to
/// the stack input by re-applying the reflections, which are involutions).
/// `g` holds `dL/dZ` on entry and `dL/dX` on exit. `vgrad` is overwritten.
fn backward(vectors: &[f64], k: usize, scales: &[f64], z: &mut [f64], g: &mut [f64], vgrad: &mut [f64]) {
    let m = scales.len();
    vgrad.fill(0.0);
    // Coefficient of v_i in its own gradient, summed over rows.
    let mut self_coeff = vec![0.0; m];
    for (y, gr) in z.chunks_exact_mut(k).zip(g.chunks_exact_mut(k)) {
        // y is the output of reflection i; v_1 was applied last.
        for (i, (v, &scale)) in vectors.chunks_exact(k).zip(scales).enumerate() {
            // input of reflection i: H(v) y, and <v, H(v) y> = -<v, y>
            let s = -dot(v, y);
            axpy(scale * s, v, y);
            let gv = dot(gr, v);
            let out = &mut vgrad[i * k..(i + 1) * k];
            axpy(-scale * gv, y, out);
            axpy(-scale * s, gr, out);
            self_coeff[i] += scale * scale * s * gv;
            axpy(-scale * gv, v, gr);
        }
    }
    for (i, v) in vectors.chunks_exact(k).enumerate() {
        axpy(self_coeff[i], v, &mut vgrad[i * k..(i + 1) * k]);
    }
}

fn full_loss(kind: LossKind, vectors: &[f64], k: usize, data: &RowMatrix) -> f64 {
    let scales = reflection_scales(vectors, k);
    let mut z = data.clone();
    for i in 0..z.rows() {
        apply_in_place(vectors, k, &scales, z.row_mut(i));
    }
    evaluate(kind, z.as_slice(), k, None)
}

pub fn fit(e: &EmbeddingSet, cfg: &TrainConfig) -> Result<(HouseholderStack, TrainReport)> {
    fit_with(e, cfg, |_, _, _| {})
}

/// [`fit`] with a callback run after every epoch with the epoch index, its
/// mean batch loss and the current stack.
pub fn fit_with<F>(e: &EmbeddingSet, cfg: &TrainConfig, mut on_epoch: F) -> Result<(HouseholderStack, TrainReport)>
where
    F: FnMut(usize, f64, &HouseholderStack),
{
    cfg.validate()?;
    if e.is_empty() {
        return Err(Error::EmptyInput);
    }
    let k = e.dim();
    if k == 0 {
        return Err(Error::InvalidConfig("embedding width must be positive".into()));
    }
    let started = Instant::now();
    let data = normalize(e)?.into_data();
    let n = data.rows();

    let init = random_stack(k, cfg.seed);
    let mut params = init.as_flat().to_vec();
    let initial_loss = full_loss(cfg.loss, &params, k, &data);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let adam = cfg.adam();
    let mut state = AdamState::new(params.len());
    let mut order: Vec<usize> = (0..n).collect();
    let batch_cap = cfg.batch_size.min(n);
    let mut batch = vec![0.0; batch_cap * k];
    let mut grad_z = vec![0.0; batch_cap * k];
    let mut grad_v = vec![0.0; params.len()];
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut redraws = 0;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            let rows = idx.len();
            let x = &mut batch[..rows * k];
            for (dst, &i) in x.chunks_exact_mut(k).zip(idx) {
                dst.copy_from_slice(data.row(i));
            }
            let scales = reflection_scales(&params, k);
            for row in x.chunks_exact_mut(k) {
                apply_in_place(&params, k, &scales, row);
            }
            let gz = &mut grad_z[..rows * k];
            let loss = evaluate(cfg.loss, x, k, Some(gz));
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            backward(&params, k, &scales, x, gz, &mut grad_v);
            adam_step(&mut state, &mut params, &grad_v, &adam);
            for i in 0..k {
                let v = &mut params[i * k..(i + 1) * k];
                if !(norm_sq(v).sqrt() > NORM_FLOOR) || v.iter().any(|x| !x.is_finite()) {
                    v.copy_from_slice(&random_direction(k, &mut rng));
                    state.reset(i * k..(i + 1) * k);
                    redraws += 1;
                }
            }
            loss_sum += loss;
            batches += 1;
        }
        let mean = loss_sum / batches as f64;
        epoch_losses.push(mean);
        let stack = HouseholderStack::from_flat(k, params.clone())?;
        on_epoch(epoch, mean, &stack);
    }

    let final_loss = full_loss(cfg.loss, &params, k, &data);
    let stack = HouseholderStack::from_flat(k, params)?;
    Ok((
        stack,
        TrainReport {
            epoch_losses,
            initial_loss,
            final_loss,
            elapsed: started.elapsed(),
            redraws,
        },
    ))
}
