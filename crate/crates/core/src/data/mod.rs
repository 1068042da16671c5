//! Landmark sequence files, body-part schemas, run configuration and
//! synthetic motion generators.

mod config;
mod schema;
mod sequence;
mod synth;

pub use config::{
    ClassifierConfig, ClassifierKind, ClosenessConfig, KGrid, PartsConfig, ProtocolConfig,
    ProtocolKind, ResampleConfig, ResampleMode, RunConfig,
};
pub use schema::{PartSchema, WHOLE};
pub use sequence::{
    load_dataset_dir, load_sequence, SequenceFile, SequenceFormat, SequenceMeta, FORMAT_TAG,
    FORMAT_VERSION,
};
pub use synth::{
    rate_warp, synth_dataset, synth_skeleton_dataset, synth_trajectory, synth_trajectory_with,
    ArmAction, DatasetSpec, MotionClass, SynthOptions,
};
