//! EgoNet action-object detection pipeline: DHG input encoding, the
//! two-pathway network with first-person coordinate embedding, training,
//! evaluation, and a synthetic RGBD scene generator.

pub mod data;
pub mod dhg;
mod error;
pub mod eval;
pub mod imageio;
pub mod model;
mod plane;
pub mod train;

pub use error::{Error, Result};
pub use plane::{BinaryMask, Plane};
