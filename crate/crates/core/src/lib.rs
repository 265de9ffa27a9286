//! Two-cue synthetic image experiments.
//!
//! This crate generates binary 30x30 images that carry two redundant class
//! cues at different abstraction levels (a statistical pixel pattern and a
//! symbolic glyph combination), trains dense ReLU/softmax classifiers on
//! them from scratch, and cross-evaluates every trained network on every
//! test subset to measure which cue was actually learned.

pub mod bitmap;
pub mod checksum;
pub mod cue;
pub mod dataset;
pub mod dataset_io;
pub mod experiment;
pub mod mlp;
pub mod model_io;
pub mod report;
pub mod rng;
pub mod seeds;
pub mod train;

pub use bitmap::{Bitmap, BITMAP_BYTES, IMAGE_CELLS, IMAGE_SIDE};
pub use cue::{Glyph, PatternDistribution, SymbolPlacement, CUE_PIXELS};
pub use dataset::{
    ClassLabel, ClassSpec, Dataset, DatasetKind, DatasetManifest, SampleRecord, SplitDataset,
};
pub use dataset_io::{load_dataset, read_manifest, save_dataset, FileManifest};
pub use experiment::{
    aggregate, execute_plan, symbolize, AggregateStats, ExperimentPlan, PerformanceSymbol,
    ResultSet, ResultsStore, RunRecord, Scenario, TrainTuning,
};
pub use mlp::{evaluate, predict_proba, EvalReport, NetworkConfig, NetworkParameters};
pub use model_io::{load_model, save_model};
pub use report::{emit_reports, ReportFormat};
pub use rng::RngStream;
pub use train::{train, StopReason, TrainConfig, TrainReport};
