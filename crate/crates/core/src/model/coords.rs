use egonet_tensor::Tensor;

use crate::{Error, Plane, Result};

/// First-person X/Y mesh-grids at feature resolution, normalized to `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordGrids {
    pub x: Plane,
    pub y: Plane,
}

fn axis_value(j: usize, len: usize) -> f64 {
    if len == 1 {
        0.0
    } else {
        -1.0 + 2.0 * j as f64 / (len - 1) as f64
    }
}

/// Pixel mesh-grids downsampled by `factor`. A single-cell axis maps to 0.
pub fn build_coord_grids(input_h: usize, input_w: usize, factor: usize) -> Result<CoordGrids> {
    if factor == 0 || input_h == 0 || input_w == 0 || input_h % factor != 0 || input_w % factor != 0 {
        return Err(Error::invalid(
            "coordinate grid",
            format!("{input_h}x{input_w} is not divisible by factor {factor}"),
        ));
    }
    let (h, w) = (input_h / factor, input_w / factor);
    Ok(CoordGrids {
        x: Plane::from_fn(w, h, |j, _| axis_value(j, w)),
        y: Plane::from_fn(w, h, |_, i| axis_value(i, h)),
    })
}

impl CoordGrids {
    pub fn zeros(height: usize, width: usize) -> Self {
        CoordGrids {
            x: Plane::filled(width, height, 0.0),
            y: Plane::filled(width, height, 0.0),
        }
    }

    /// `(height, width)` of the grid.
    pub fn size(&self) -> (usize, usize) {
        (self.x.height(), self.x.width())
    }

    /// `B×2×h×w` tensor with X in channel 0 and Y in channel 1.
    pub fn to_tensor(&self, batch: usize) -> Tensor {
        let (h, w) = self.size();
        let mut data = Vec::with_capacity(batch * 2 * h * w);
        for _ in 0..batch {
            data.extend_from_slice(self.x.data());
            data.extend_from_slice(self.y.data());
        }
        Tensor::new([batch, 2, h, w], data).expect("grid shape")
    }
}
