//! Depth, height and grayscale (DHG) input construction from stereo.
//!
//! The pipeline is: rectified grayscale pair → scanline DP disparity →
//! triangulated depth → height above the ground plane (from the calibrated
//! camera height and pitch) → normalized three-channel DHG image.

mod calib;
mod encode;
mod geometry;
mod maps;
mod stereo;

pub use calib::StereoCalib;
pub use encode::{assemble_dhg, to_grayscale, DhgBounds, DhgImage};
pub use geometry::{depth_to_disparity, depth_to_height, disparity_to_depth, render_ground_depth};
pub use maps::{Depth, DepthMap, Disparity, DisparityMap, Height, HeightMap, MaskedMap};
pub use stereo::{scanline_disparity_dp, scanline_dp_row, RowMatch, DEFAULT_OCCLUSION_COST};
