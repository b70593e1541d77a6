use serde::{Deserialize, Serialize};

use super::maps::{DepthMap, HeightMap};
use crate::{BinaryMask, Error, Plane, Result};

/// Fixed normalization ranges for the depth and height channels.
///
/// These are dataset-level constants rather than per-frame statistics so
/// that absolute distance stays meaningful across frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DhgBounds {
    pub z_min: f64,
    pub z_max: f64,
    pub h_min: f64,
    pub h_max: f64,
}

impl Default for DhgBounds {
    fn default() -> Self {
        DhgBounds {
            z_min: 0.3,
            z_max: 8.0,
            h_min: -0.5,
            h_max: 2.5,
        }
    }
}

impl DhgBounds {
    pub fn validate(&self) -> Result<()> {
        if self.z_max > self.z_min && self.h_max > self.h_min && self.z_min >= 0.0 {
            Ok(())
        } else {
            Err(Error::invalid("DHG bounds", format!("{self:?}")))
        }
    }

    pub fn encode_depth(&self, z: f64) -> f64 {
        ((z - self.z_min) / (self.z_max - self.z_min)).clamp(0.0, 1.0)
    }

    pub fn decode_depth(&self, d: f64) -> f64 {
        self.z_min + d * (self.z_max - self.z_min)
    }

    pub fn encode_height(&self, h: f64) -> f64 {
        ((h - self.h_min) / (self.h_max - self.h_min)).clamp(0.0, 1.0)
    }

    pub fn decode_height(&self, v: f64) -> f64 {
        self.h_min + v * (self.h_max - self.h_min)
    }
}

/// Depth, height and grayscale channels, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DhgImage {
    pub depth: Plane,
    pub height: Plane,
    pub gray: Plane,
    /// `true` where depth (and therefore height) is unknown; D and H hold 0 there.
    pub invalid: BinaryMask,
    pub bounds: DhgBounds,
}

impl DhgImage {
    pub fn dims(&self) -> (usize, usize) {
        self.gray.dims()
    }

    pub fn channels(&self) -> [&Plane; 3] {
        [&self.depth, &self.height, &self.gray]
    }

    /// Metric depth at a pixel, `None` if invalid.
    pub fn depth_at(&self, x: usize, y: usize) -> Option<f64> {
        (!self.invalid.get(x, y)).then(|| self.bounds.decode_depth(self.depth.get(x, y)))
    }
}

/// ITU-R BT.601 luma.
pub fn to_grayscale(rgb: &[Plane; 3]) -> Result<Plane> {
    let [r, g, b] = rgb;
    if r.dims() != g.dims() || r.dims() != b.dims() {
        return Err(Error::invalid(
            "RGB planes",
            format!("sizes {:?}, {:?}, {:?}", r.dims(), g.dims(), b.dims()),
        ));
    }
    let (w, h) = r.dims();
    Ok(Plane::from_fn(w, h, |x, y| {
        0.299 * r.get(x, y) + (0.587 * g.get(x, y) + 0.114 * b.get(x, y))
    }))
}

pub fn assemble_dhg(depth: &DepthMap, height: &HeightMap, gray: &Plane, bounds: DhgBounds) -> Result<DhgImage> {
    bounds.validate()?;
    if depth.dims() != height.dims() || depth.dims() != gray.dims() {
        return Err(Error::invalid(
            "DHG inputs",
            format!(
                "depth {:?}, height {:?}, gray {:?}",
                depth.dims(),
                height.dims(),
                gray.dims()
            ),
        ));
    }
    let (w, h) = gray.dims();
    let invalid = BinaryMask::from_fn(w, h, |x, y| depth.get(x, y).is_none() || height.get(x, y).is_none());
    let d = Plane::from_fn(w, h, |x, y| match (invalid.get(x, y), depth.get(x, y)) {
        (false, Some(z)) => bounds.encode_depth(z),
        _ => 0.0,
    });
    let hh = Plane::from_fn(w, h, |x, y| match (invalid.get(x, y), height.get(x, y)) {
        (false, Some(v)) => bounds.encode_height(v),
        _ => 0.0,
    });
    Ok(DhgImage {
        depth: d,
        height: hh,
        gray: gray.clone(),
        invalid,
        bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn luma_coefficients() {
        let white = [Plane::filled(2, 2, 1.0), Plane::filled(2, 2, 1.0), Plane::filled(2, 2, 1.0)];
        assert!(to_grayscale(&white).unwrap().data().iter().all(|&v| (v - 1.0).abs() < 1e-15));
        let red = [Plane::filled(1, 1, 1.0), Plane::filled(1, 1, 0.0), Plane::filled(1, 1, 0.0)];
        assert_eq!(to_grayscale(&red).unwrap().data(), [0.299]);
        let grey = [Plane::filled(1, 1, 0.3), Plane::filled(1, 1, 0.3), Plane::filled(1, 1, 0.3)];
        assert!((to_grayscale(&grey).unwrap().data()[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn depth_channel_clamps() {
        let b = DhgBounds::default();
        let z = DepthMap::from_fn(3, 1, |x, _| Some([b.z_max, 0.1, 20.0][x]));
        let h = HeightMap::from_fn(3, 1, |_, _| Some(0.0));
        let img = assemble_dhg(&z, &h, &Plane::filled(3, 1, 0.5), b).unwrap();
        assert_eq!(img.depth.data(), [1.0, 0.0, 1.0]);
    }

    #[test]
    fn invalid_pixels_get_sentinel_and_mask() {
        let z = DepthMap::from_fn(2, 2, |x, y| (x != y).then_some(1.0));
        let h = HeightMap::from_fn(2, 2, |x, _| (x == 0).then_some(3.0));
        let img = assemble_dhg(&z, &h, &Plane::filled(2, 2, 0.25), DhgBounds::default()).unwrap();
        // invalid = depth invalid or height invalid
        assert_eq!(img.invalid.data(), [true, true, false, true]);
        assert_eq!(img.depth.get(0, 0), 0.0);
        assert_eq!(img.height.get(1, 0), 0.0);
        assert_eq!(img.height.get(0, 1), 1.0);
        assert_eq!(img.gray.get(0, 0), 0.25);
    }

    #[test]
    fn size_mismatch_rejected() {
        let z = DepthMap::invalid(2, 2);
        let h = HeightMap::invalid(2, 3);
        assert!(assemble_dhg(&z, &h, &Plane::filled(2, 2, 0.0), DhgBounds::default()).is_err());
    }
}
