//! File formats: `IDF1` tensors, 16-bit PGM export, CSV tables and the
//! run configuration.

mod config;
mod csv;
mod pgm;
mod tensor;

pub use config::{DetectConfig, RunConfig, SourcePlan, DEFAULT_LAMBDA_REL};
pub use csv::{
    detections_csv, metrics_csv, pairs_csv, read_locations, read_truth_sources, truth_csv, DETECTIONS_HEADER,
    METRICS_HEADER, PAIRS_HEADER, TRUTH_HEADER,
};
pub use pgm::{read_pgm, sidecar_path, write_pgm};
pub use tensor::{
    decode_tensor, encode_tensor, read_array3, read_image, read_tensor, write_array3, write_image, write_tensor,
    MAGIC,
};
