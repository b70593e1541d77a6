//! Three-state scanline dynamic programming stereo.
//!
//! Each rectified row pair is aligned as a monotone sequence: a left pixel
//! `x` either matches right pixel `x - d` (cost `|L(x) - R(x - d)|`,
//! `0 <= d <= max_disp`) or is occluded, and every unmatched right pixel is
//! occluded too. Occlusions cost a constant each.

use rayon::prelude::*;

use super::maps::DisparityMap;
use crate::{Error, Plane, Result};

pub const DEFAULT_OCCLUSION_COST: f64 = 0.04;

/// Optimal alignment of one scanline.
#[derive(Debug, Clone, PartialEq)]
pub struct RowMatch {
    /// Disparity per left pixel, `None` where occluded.
    pub disparity: Vec<Option<usize>>,
    pub cost: f64,
}

#[derive(Clone, Copy, PartialEq)]
enum Step {
    Start,
    Match,
    LeftOcc,
    RightOcc,
}

/// Solves one scanline. Cells are indexed by `(i, d)` where `i` left pixels
/// and `j = i - d` right pixels have been consumed; restricting `d` to
/// `[0, max_disp]` loses no optimal path because occlusion runs between two
/// matches can always be routed inside the band.
pub fn scanline_dp_row(left: &[f64], right: &[f64], max_disp: usize, occlusion_cost: f64) -> Result<RowMatch> {
    let w = left.len();
    if right.len() != w {
        return Err(Error::invalid(
            "stereo rows",
            format!("left has {w} pixels, right has {}", right.len()),
        ));
    }
    if max_disp == 0 || max_disp >= w {
        return Err(Error::invalid(
            "max disparity",
            format!("need 1 <= max_disp < width ({w}), got {max_disp}"),
        ));
    }
    let band = max_disp + 1;
    let idx = |i: usize, d: usize| i * band + d;
    let mut cost = vec![f64::INFINITY; (w + 1) * band];
    let mut step = vec![Step::Start; (w + 1) * band];
    cost[idx(0, 0)] = 0.0;

    for i in 0..=w {
        // right-occlusion moves stay on row i and come from d + 1
        for d in (0..band).rev() {
            if d > i || (i == 0 && d == 0) {
                continue;
            }
            let j = i - d;
            if j > w {
                continue;
            }
            let mut best = f64::INFINITY;
            let mut how = Step::Start;
            if i >= 1 && j >= 1 {
                let c = cost[idx(i - 1, d)] + (left[i - 1] - right[j - 1]).abs();
                if c < best {
                    best = c;
                    how = Step::Match;
                }
            }
            if i >= 1 && d >= 1 {
                let c = cost[idx(i - 1, d - 1)] + occlusion_cost;
                if c < best {
                    best = c;
                    how = Step::LeftOcc;
                }
            }
            if j >= 1 && d + 1 < band {
                let c = cost[idx(i, d + 1)] + occlusion_cost;
                if c < best {
                    best = c;
                    how = Step::RightOcc;
                }
            }
            cost[idx(i, d)] = best;
            step[idx(i, d)] = how;
        }
    }

    let mut disparity = vec![None; w];
    let (mut i, mut d) = (w, 0);
    loop {
        match step[idx(i, d)] {
            Step::Start => break,
            Step::Match => {
                disparity[i - 1] = Some(d);
                i -= 1;
            }
            Step::LeftOcc => {
                i -= 1;
                d -= 1;
            }
            Step::RightOcc => d += 1,
        }
    }
    Ok(RowMatch {
        disparity,
        cost: cost[idx(w, 0)],
    })
}

/// Dense disparity for a rectified pair with intensities in `[0, 1]`.
///
/// Ties between equal-cost predecessors prefer a match, then a left
/// occlusion (toward the smaller-disparity side of the band), so the
/// zero-shift labeling wins on textureless rows. Occluded pixels are invalid.
pub fn scanline_disparity_dp(
    left: &Plane,
    right: &Plane,
    max_disp: usize,
    occlusion_cost: f64,
) -> Result<DisparityMap> {
    if left.dims() != right.dims() {
        return Err(Error::invalid(
            "stereo pair",
            format!("left is {:?}, right is {:?}", left.dims(), right.dims()),
        ));
    }
    let (w, h) = left.dims();
    if max_disp == 0 || max_disp >= w {
        return Err(Error::invalid(
            "max disparity",
            format!("need 1 <= max_disp < width ({w}), got {max_disp}"),
        ));
    }
    let rows: Vec<RowMatch> = (0..h)
        .into_par_iter()
        .map(|y| scanline_dp_row(left.row(y), right.row(y), max_disp, occlusion_cost))
        .collect::<Result<_>>()?;
    let mut map = DisparityMap::invalid(w, h);
    for (y, row) in rows.iter().enumerate() {
        for (x, d) in row.disparity.iter().enumerate() {
            map.set(x, y, d.map(|d| d as f64));
        }
    }
    Ok(map)
}
