//! stripe-reid-core — a framework-free metric-learning and re-identification
//! benchmark engine.
//!
//! The crate is organized around four subsystems:
//!
//! - [`manifest`] — the data model (samples, cameras, entities, skeletons),
//!   manifest ingestion/validation, protocol-conformant train/test splitting,
//!   and a deterministic synthetic dataset generator for desk-scale runs.
//! - [`geometry`] — skeleton and part geometry: oriented part boxes, their
//!   axes-aligned bounding boxes, grid projection, and regional/column
//!   pooling over feature grids.
//! - [`metric`] — embeddings, distances, the loss families (cross-entropy
//!   head, triplet, batch-hard triplet, aligned local distance, part-based),
//!   part aggregation heads, analytic gradients, and a small deterministic
//!   trainer.
//! - [`eval`] — benchmark metrics: re-ID AP/mAP/CMC with same-camera
//!   temporal exclusion, single-/cross-camera reporting, wild-track
//!   detection coupling, keypoint OKS AP/AR, detection PR/AP over IoU
//!   sweeps, and PPF.
//!
//! All operations are deterministic given their inputs and seeds; nothing in
//! the crate reads clocks or global state.

pub mod eval;
pub mod geometry;
pub mod manifest;
pub mod metric;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A file failed to parse as its declared schema.
    #[error("schema error in {context}: {message}")]
    Schema { context: String, message: String },

    /// Parsed data violated a model invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A cross-reference (sample id, embedding, entity) could not be resolved.
    #[error("lookup error: {0}")]
    Lookup(String),

    /// Operands have incompatible shapes or counts.
    #[error("shape error: {0}")]
    Shape(String),

    /// A geometric construction was degenerate (e.g. coincident keypoints).
    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    /// A metric could not be evaluated under the protocol rules.
    #[error("protocol error: {0}")]
    Protocol(String),

    /// A numerical quantity became non-finite.
    #[error("numerical error in {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
