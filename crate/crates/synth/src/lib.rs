//! Procedural stand-in for a human parsing + pose dataset.
//!
//! Each sample is an articulated stick person sampled from a skeleton
//! distribution, rasterised with capsules into a 20-class label map and an
//! RGB image, annotated with 16 joints and tagged with challenge factors.
//! Everything is a deterministic function of the dataset seed and the
//! sample id.

pub mod dataset;
pub mod error;
pub mod factors;
pub mod io;
pub mod render;
pub mod skeleton;

pub use dataset::{
    generate_dataset, generate_sample, iterate_split, load_sample, Dataset, DatasetManifest,
    GenConfig, SampleRecord,
};
pub use error::SynthError;
pub use factors::derive_factors;
pub use render::{rasterize_person, Appearance, Occluder, RenderStyle};
pub use skeleton::{sample_pose, sample_skeleton, Pose, SkeletonSpec};
