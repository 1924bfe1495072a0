//! Shared building blocks for joint human parsing and pose estimation:
//! label taxonomies, label maps, joint sets, heatmap stacks, the evaluation
//! metrics and the structure-sensitive loss built from parsing maps.

pub mod error;
pub mod factor;
pub mod image;
pub mod joints;
pub mod label_map;
pub mod metrics;
pub mod par;
pub mod planes;
pub mod selfsup;
pub mod taxonomy;

pub use error::CoreError;
pub use factor::ChallengeFactor;
pub use image::RgbImage;
pub use joints::{flip_joint_set, Joint, JointSet, Visibility};
pub use label_map::{flip_label_map, resize_label_map, LabelMap};
pub use planes::{resize_heatmaps, HeatmapStack, Planes, ScoreMaps};
pub use taxonomy::{
    JointId, PartLabel, PseudoJointId, JOINT_SWAP, NUM_CLASSES, NUM_JOINTS,
    NUM_PSEUDO_JOINTS, PART_SWAP,
};
