//! Batch driver around `fisheye-mc`: compensation runs, sweeps, rate curves,
//! decision maps and synthetic sequences.

pub mod decision_map;
pub mod error;
pub mod experiment;
pub mod input;
pub mod synth_gen;

pub use error::CliError;
pub use experiment::{CameraSpec, PairRecord, RunConfig, SummaryRow};
pub use input::{load_sequence, Sequence};
