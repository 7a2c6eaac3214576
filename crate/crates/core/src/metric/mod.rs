//! Embeddings, distances, loss families, and a small deterministic trainer.
//!
//! Distances and losses live in [`losses`]; the affine embedder heads, part
//! aggregation, and analytic gradients live in [`model`]; the seeded toy
//! trainer lives in [`train`].

mod losses;
mod model;
mod train;

pub use losses::{
    aggregate_attention, aggregate_concat, aligned_grad, aligned_losses, euclidean_distance,
    local_distance_dp, local_elementwise_distance, trihard_grad, trihard_loss, triplet_grad,
    triplet_loss, ActiveTriplet, AlignedBatch, GateWeights,
};
pub use model::{
    combined_loss, compute_embeddings, loss_gradients, part_loss, read_eset, write_eset, Affine,
    Embedding, EmbeddingSet, FeatureBatch, LossKind, ModelParams, ParamGradients,
};
pub use train::{train_toy, TrainConfig, TrainOutcome};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Batch shape: `P` identities with `K` samples each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchSpec {
    pub p: usize,
    pub k: usize,
}

impl BatchSpec {
    pub fn new(p: usize, k: usize) -> Result<Self> {
        if p < 2 || k < 2 {
            return Err(Error::Shape(format!(
                "batch needs at least 2 identities and 2 samples per identity, got P={p}, K={k}"
            )));
        }
        Ok(Self { p, k })
    }

    pub fn len(&self) -> usize {
        self.p * self.k
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// How parts are fused into one representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Concatenate part vectors in part order (variant "a").
    ConcatA,
    /// Soft-attention sum with a shared gate (variant "b").
    AttentionB,
}

/// Margins and weights shared by the loss families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub margin: f64,
    /// Weight of the part loss in the combined loss.
    pub lambda: f64,
    pub aggregation: Aggregation,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            margin: 0.3,
            lambda: 1.0,
            aggregation: Aggregation::ConcatA,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.margin.is_finite() && self.margin >= 0.0) {
            return Err(Error::Config(format!(
                "margin must be finite and non-negative, got {}",
                self.margin
            )));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::Config(format!(
                "lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}
