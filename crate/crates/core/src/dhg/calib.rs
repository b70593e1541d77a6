use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Rectified stereo rig mounted at a known height with a known pitch.
///
/// `pitch_rad > 0` tilts the optical axis below the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StereoCalib {
    pub focal_px: f64,
    pub baseline_m: f64,
    pub camera_height_m: f64,
    pub pitch_rad: f64,
    pub cx: f64,
    pub cy: f64,
}

impl StereoCalib {
    /// Rig with the 100 mm baseline, principal point at the image centre.
    pub fn centered(width: usize, height: usize, focal_px: f64, camera_height_m: f64, pitch_rad: f64) -> Self {
        StereoCalib {
            focal_px,
            baseline_m: 0.1,
            camera_height_m,
            pitch_rad,
            cx: (width as f64 - 1.0) / 2.0,
            cy: (height as f64 - 1.0) / 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.focal_px > 0.0
            && self.baseline_m > 0.0
            && self.camera_height_m >= 0.0
            && [self.focal_px, self.baseline_m, self.camera_height_m, self.pitch_rad, self.cx, self.cy]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(
                "calibration",
                format!("need focal > 0, baseline > 0, camera height >= 0: {self:?}"),
            ))
        }
    }
}
