//! Binary hashing of pre-trained embeddings by a learned orthogonal rotation.
//!
//! Embeddings are normalized onto the `sqrt(k)` sphere, rotated by an
//! orthogonal map written as a product of Householder reflections, and
//! binarized coordinate-wise with `sign`. The rotation is fitted with
//! mini-batch Adam to minimize the distance between rotated embeddings and
//! their binarization. Because the map is orthogonal, inner products and
//! cosine similarities of the continuous embeddings are untouched.
//!
//! ```
//! use hhash_core::{fit, sign_binarize, EmbeddingSet, TrainConfig};
//!
//! let s = 2f64.sqrt();
//! let e = EmbeddingSet::from_rows(&[[s, 0.0], [-s, 0.0], [0.0, s], [0.0, -s]]).unwrap();
//! let (stack, report) = fit(&e, &TrainConfig::default()).unwrap();
//! assert!(report.final_loss < report.initial_loss);
//! let codes = sign_binarize(&e, Some(&stack)).unwrap();
//! assert_eq!(codes.len(), 4);
//! ```

// `!(x > floor)` checks are written that way so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adam;
pub mod baselines;
pub mod codes;
pub mod embedding;
pub mod error;
pub mod formats;
pub mod householder;
pub mod linalg;
pub mod loss;
pub mod matrix;
pub mod retrieval;
pub mod synth;
pub mod trainer;

pub use adam::{adam_step, AdamParams, AdamState};
pub use baselines::{itq_fit, random_rotation_baseline, ItqConfig, ItqModel};
pub use codes::{hamming_distance, sign_binarize, BitCodeSet, CodeRef};
pub use embedding::{normalize, EmbeddingSet};
pub use error::{Error, Result};
pub use householder::{decompose_orthogonal, random_stack, reflect, HouseholderStack, NORM_FLOOR};
pub use loss::{loss_grad, loss_value, LossKind};
pub use matrix::RowMatrix;
pub use retrieval::{average_precision_at_k, map_at_k, rank_database, RetrievalResult};
pub use synth::{generate_rotated_hypercube, SynthConfig, SynthData};
pub use trainer::{fit, fit_with, stack_backprop, StackGradients, TrainConfig, TrainReport};
