use std::marker::PhantomData;

use crate::{Error, Plane, Result};

/// Per-pixel measurement with an explicit validity mask. Invalid pixels hold
/// `0.0` but are never meant to be read as measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedMap<U> {
    width: usize,
    height: usize,
    values: Vec<f64>,
    valid: Vec<bool>,
    _unit: PhantomData<U>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disparity;
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Depth;
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Height;

/// Disparity in pixels.
pub type DisparityMap = MaskedMap<Disparity>;
/// Depth along the optical axis in metres.
pub type DepthMap = MaskedMap<Depth>;
/// Height above the ground plane in metres.
pub type HeightMap = MaskedMap<Height>;

impl<U> MaskedMap<U> {
    pub fn new(width: usize, height: usize, values: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        let n = width * height;
        if n == 0 || values.len() != n || valid.len() != n {
            return Err(Error::invalid(
                "masked map",
                format!("{width}x{height} with {} values and {} flags", values.len(), valid.len()),
            ));
        }
        let values = values
            .into_iter()
            .zip(&valid)
            .map(|(v, &ok)| if ok { v } else { 0.0 })
            .collect();
        Ok(MaskedMap {
            width,
            height,
            values,
            valid,
            _unit: PhantomData,
        })
    }

    pub fn invalid(width: usize, height: usize) -> Self {
        MaskedMap {
            width,
            height,
            values: vec![0.0; width * height],
            valid: vec![false; width * height],
            _unit: PhantomData,
        }
    }

    /// Every pixel valid.
    pub fn from_plane(plane: &Plane) -> Self {
        MaskedMap {
            width: plane.width(),
            height: plane.height(),
            values: plane.data().to_vec(),
            valid: vec![true; plane.data().len()],
            _unit: PhantomData,
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Option<f64>) -> Self {
        let mut map = Self::invalid(width, height);
        for y in 0..height {
            for x in 0..width {
                if let Some(v) = f(x, y) {
                    map.set(x, y, Some(v));
                }
            }
        }
        map
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        let i = y * self.width + x;
        self.valid[i].then_some(self.values[i])
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: Option<f64>) {
        let i = y * self.width + x;
        self.valid[i] = v.is_some();
        self.values[i] = v.unwrap_or(0.0);
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }
}
