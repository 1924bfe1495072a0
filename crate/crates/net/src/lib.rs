//! Joint human parsing and pose estimation network.
//!
//! A dilated residual backbone feeds a part module (parsing) and a joint
//! module (pose); optional refinement stages feed each stage's parsing and
//! pose maps back into both branches. Everything runs on a small
//! define-by-run autodiff engine in double precision.

pub mod checkpoint;
pub mod config;
pub mod conv;
pub mod error;
pub mod graph;
pub mod model;
pub mod params;

pub use config::{BlockKind, HeadWidths, ModelKind, NetConfig, Preset, REFINE_KERNELS};
pub use error::NetError;
pub use graph::{backward, Ctx, TraceEntry, Var};
pub use model::{forward_graph, image_to_planes, JppNet, StageOutputs, StageVars};
pub use params::{Grads, Init, Param, ParamId, ParamStore};
