//! The EgoNet forward graph and its ablation variants.

mod checkpoint;
mod config;
mod coords;
mod net;
mod params;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{EgoNetConfig, Layer, FEATURE_STRIDE};
pub use coords::{build_coord_grids, CoordGrids};
pub use net::{EgoNet, ParamVars, Variant};
pub use params::EgoNetParams;

/// Per-pixel action-object probability at input resolution.
pub type ProbabilityMap = crate::Plane;
