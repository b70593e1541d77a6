use std::fmt;
use std::str::FromStr;

use crate::{BinaryMask, Error, Plane, Result};

/// Values of [`point_to_mask`] below this are set to zero.
pub const POINT_MASK_FLOOR: f64 = 1e-4;

/// Location-prior baselines that need no network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    /// Mean training mask.
    Aop,
    /// Gaussian centred on the image.
    Center,
    /// Uniform 0.5.
    Constant,
}

impl Baseline {
    pub fn name(self) -> &'static str {
        match self {
            Baseline::Aop => "aop",
            Baseline::Center => "center",
            Baseline::Constant => "constant",
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aop" => Ok(Baseline::Aop),
            "center" => Ok(Baseline::Center),
            "constant" => Ok(Baseline::Constant),
            _ => Err(Error::invalid(
                "baseline",
                format!("unknown baseline {s:?} (expected aop, center or constant)"),
            )),
        }
    }
}

/// Per-pixel mean of the masks, each resized (nearest) to the first mask's size.
pub fn aop_baseline(masks: &[&BinaryMask]) -> Result<Plane> {
    let first = masks
        .first()
        .ok_or_else(|| Error::invalid("AOP baseline", "no training masks"))?;
    let (w, h) = first.dims();
    let mut sum = vec![0.0; w * h];
    for m in masks {
        let m = m.resize_nearest(w, h);
        for (s, &v) in sum.iter_mut().zip(m.data()) {
            if v {
                *s += 1.0;
            }
        }
    }
    let n = masks.len() as f64;
    Plane::new(w, h, sum.into_iter().map(|s| s / n).collect())
}

fn gaussian(w: usize, h: usize, cx: f64, cy: f64, sigma: f64, floor: f64) -> Plane {
    let denom = 2.0 * sigma * sigma;
    Plane::from_fn(w, h, |x, y| {
        let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
        let v = (-d2 / denom).exp();
        if v < floor {
            0.0
        } else {
            v
        }
    })
}

/// Unnormalized Gaussian with `σ = sigma_frac·√(H² + W²)` and peak 1 at
/// the image centre.
pub fn center_prior(height: usize, width: usize, sigma_frac: f64) -> Result<Plane> {
    if height == 0 || width == 0 || !(sigma_frac > 0.0 && sigma_frac.is_finite()) {
        return Err(Error::invalid(
            "center prior",
            format!("{height}x{width}, sigma fraction {sigma_frac}"),
        ));
    }
    let sigma = sigma_frac * ((height * height + width * width) as f64).sqrt();
    Ok(gaussian(
        width,
        height,
        (width as f64 - 1.0) / 2.0,
        (height as f64 - 1.0) / 2.0,
        sigma,
        0.0,
    ))
}

/// Converts a clicked point into a soft mask: Gaussian with `σ = width/2`
/// and peak 1, truncated below [`POINT_MASK_FLOOR`].
pub fn point_to_mask(point: (f64, f64), width_px: f64, height: usize, width: usize) -> Result<Plane> {
    let (x, y) = point;
    if !(x >= 0.0 && y >= 0.0 && x <= width as f64 - 1.0 && y <= height as f64 - 1.0) {
        return Err(Error::invalid(
            "point",
            format!("({x}, {y}) outside a {width}x{height} image"),
        ));
    }
    if !(width_px > 0.0) {
        return Err(Error::invalid("point mask", format!("width {width_px} must be positive")));
    }
    Ok(gaussian(width, height, x, y, width_px / 2.0, POINT_MASK_FLOOR))
}

pub fn constant_map(height: usize, width: usize, value: f64) -> Plane {
    Plane::filled(width, height, value)
}
