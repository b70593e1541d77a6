use super::calib::StereoCalib;
use super::maps::{DepthMap, DisparityMap, HeightMap};
use crate::Result;

/// Pinhole-stereo triangulation `Z = f·B / d`. Non-positive or invalid
/// disparities give invalid depth.
pub fn disparity_to_depth(disparity: &DisparityMap, calib: &StereoCalib) -> Result<DepthMap> {
    calib.validate()?;
    let fb = calib.focal_px * calib.baseline_m;
    let (w, h) = disparity.dims();
    Ok(DepthMap::from_fn(w, h, |x, y| {
        disparity.get(x, y).filter(|&d| d > 0.0).map(|d| fb / d)
    }))
}

/// Inverse of [`disparity_to_depth`].
pub fn depth_to_disparity(depth: &DepthMap, calib: &StereoCalib) -> Result<DisparityMap> {
    calib.validate()?;
    let fb = calib.focal_px * calib.baseline_m;
    let (w, h) = depth.dims();
    Ok(DisparityMap::from_fn(w, h, |x, y| {
        depth.get(x, y).filter(|&z| z > 0.0).map(|z| fb / z)
    }))
}

/// Height above the ground plane.
///
/// Each pixel is back-projected to camera coordinates (`y` pointing down),
/// rotated by the pitch into a gravity-aligned frame, and subtracted from
/// the camera height.
pub fn depth_to_height(depth: &DepthMap, calib: &StereoCalib) -> Result<HeightMap> {
    calib.validate()?;
    let (sin, cos) = calib.pitch_rad.sin_cos();
    let (w, h) = depth.dims();
    Ok(HeightMap::from_fn(w, h, |x, y| {
        let z = depth.get(x, y).filter(|&z| z > 0.0)?;
        let cam_y = (y as f64 - calib.cy) * z / calib.focal_px;
        let down = cam_y * cos + z * sin;
        Some(calib.camera_height_m - down)
    }))
}

/// Analytic depth of the ground plane seen by `calib`; rays at or above the
/// horizon (or beyond `far_m`) are clamped to `far_m`, which models a
/// distant back wall.
pub fn render_ground_depth(width: usize, height: usize, calib: &StereoCalib, far_m: f64) -> DepthMap {
    let (sin, cos) = calib.pitch_rad.sin_cos();
    DepthMap::from_fn(width, height, |_, y| {
        let ray_down = (y as f64 - calib.cy) / calib.focal_px * cos + sin;
        if ray_down <= 0.0 {
            return Some(far_m);
        }
        Some((calib.camera_height_m / ray_down).min(far_m))
    })
}
