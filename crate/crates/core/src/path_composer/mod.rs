//! Dataset generation: a base path, modular paths, and test paths formed by
//! inserting, substituting or deleting a module-sized segment of the base.

mod dataset;
mod encode;
mod path;
pub mod text;

pub use dataset::{generate_dataset, Dataset, DisruptionKind, GenConfig, TestCase, TestCounts, DEFAULT_ALPHABET};
pub use encode::{argmax, encode_one_hot, to_sequence_batch, to_window_batch, BatchLayout, EncodedBatch, StimulusLayout};
pub use path::{delete, insert, substitute, Path, Stimulus};
pub use text::{parse, serialize};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ComposeError {
    #[error("invalid generation config: {0}")]
    Config(String),
    #[error("position {pos} out of range 0..={max}")]
    Position { pos: usize, max: usize },
    #[error("segment length {length} invalid for base path of length {base}")]
    SegmentLength { length: usize, base: usize },
    #[error("{stimuli} stimuli but {responses} responses")]
    LengthMismatch { stimuli: usize, responses: usize },
    #[error("paths must have at least one step")]
    EmptyPath,
    #[error("encoding failed: {0}")]
    Encode(String),
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("malformed dataset JSON: {0}")]
    Json(String),
}
