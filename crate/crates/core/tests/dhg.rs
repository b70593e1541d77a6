use egonet_core::dhg::{
    assemble_dhg, depth_to_disparity, depth_to_height, disparity_to_depth, render_ground_depth, scanline_disparity_dp,
    scanline_dp_row, to_grayscale, DepthMap, DhgBounds, DisparityMap, HeightMap, StereoCalib, DEFAULT_OCCLUSION_COST,
};
use egonet_core::Plane;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every monotone alignment of a row pair, enumerated explicitly.
/// Left pixel `x` either matches right pixel `j` (`x - j <= max_disp`,
/// `j` strictly increasing) or is occluded; unmatched right pixels cost
/// an occlusion each as well.
fn brute_force_min_cost(left: &[f64], right: &[f64], max_disp: usize, occ: f64) -> f64 {
    fn go(x: usize, next_j: usize, matched: usize, acc: f64, l: &[f64], r: &[f64], max_disp: usize, occ: f64, best: &mut f64) {
        let w = l.len();
        if x == w {
            let total = acc + occ * ((w - matched) + (w - matched)) as f64;
            if total < *best {
                *best = total;
            }
            return;
        }
        go(x + 1, next_j, matched, acc, l, r, max_disp, occ, best);
        let lo = next_j.max(x.saturating_sub(max_disp));
        for j in lo..=x {
            let c = (l[x] - r[j]).abs();
            go(x + 1, j + 1, matched + 1, acc + c, l, r, max_disp, occ, best);
        }
    }
    let mut best = f64::INFINITY;
    go(0, 0, 0, 0.0, left, right, max_disp, occ, &mut best);
    best
}

fn labeling_cost(left: &[f64], right: &[f64], disparity: &[Option<usize>], occ: f64) -> f64 {
    let w = left.len();
    let mut cost = 0.0;
    let mut matched = 0;
    for (x, d) in disparity.iter().enumerate() {
        match d {
            Some(d) => {
                cost += (left[x] - right[x - d]).abs();
                matched += 1;
            }
            None => cost += occ,
        }
    }
    cost + occ * (w - matched) as f64
}

#[test]
fn dp_cost_equals_exhaustive_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut rows = 0;
    for w in 3..=12 {
        for max_disp in 1..=4.min(w - 1) {
            for _ in 0..3 {
                let left: Vec<f64> = (0..w).map(|_| rng.random()).collect();
                let right: Vec<f64> = if rng.random_bool(0.5) {
                    let s = rng.random_range(0..=max_disp);
                    (0..w).map(|j| if j + s < w { left[j + s] } else { rng.random() }).collect()
                } else {
                    (0..w).map(|_| rng.random()).collect()
                };
                let occ = [DEFAULT_OCCLUSION_COST, 0.2][rows % 2];
                let m = scanline_dp_row(&left, &right, max_disp, occ).unwrap();
                let brute = brute_force_min_cost(&left, &right, max_disp, occ);
                assert!(
                    (m.cost - brute).abs() < 1e-12,
                    "w {w} max_disp {max_disp}: dp {} vs brute {brute}",
                    m.cost
                );
                // the returned labeling realizes the reported cost
                let realized = labeling_cost(&left, &right, &m.disparity, occ);
                assert!((realized - m.cost).abs() < 1e-12);
                rows += 1;
            }
        }
    }
    assert!(rows > 100);
}

#[test]
fn planted_shifts_are_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (w, max_disp) = (48, 8);
    let (mut exact, mut total) = (0usize, 0usize);
    for _ in 0..200 {
        let shift = rng.random_range(0..=max_disp);
        let texture: Vec<f64> = (0..w + shift).map(|_| rng.random()).collect();
        let left = Plane::new(w, 1, texture[..w].to_vec()).unwrap();
        let right = Plane::new(w, 1, (0..w).map(|j| texture[j + shift]).collect()).unwrap();
        let disp = scanline_disparity_dp(&left, &right, max_disp, DEFAULT_OCCLUSION_COST).unwrap();
        for x in shift..w {
            total += 1;
            if disp.get(x, 0) == Some(shift as f64) {
                exact += 1;
            }
        }
    }
    let rate = exact as f64 / total as f64;
    assert!(rate >= 0.95, "exact on {rate:.4} of non-occluded pixels");
}

fn calib() -> StereoCalib {
    StereoCalib::centered(32, 24, 500.0, 1.5, 0.3)
}

#[test]
fn triangulation_round_trips() {
    let c = calib();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let depth = DepthMap::from_fn(32, 24, |_, _| Some(rng.random_range(0.2..20.0)));
    let back = disparity_to_depth(&depth_to_disparity(&depth, &c).unwrap(), &c).unwrap();
    for (a, b) in depth.values().iter().zip(back.values()) {
        assert!((a - b).abs() <= 1e-9 * a.abs());
    }
    let disp = DisparityMap::from_fn(32, 24, |_, _| Some(rng.random_range(0.5..64.0)));
    let again = depth_to_disparity(&disparity_to_depth(&disp, &c).unwrap(), &c).unwrap();
    for (a, b) in disp.values().iter().zip(again.values()) {
        assert!((a - b).abs() <= 1e-9 * a.abs());
    }
}

#[test]
fn triangulation_arithmetic() {
    let c = StereoCalib {
        focal_px: 1000.0,
        baseline_m: 0.1,
        ..calib()
    };
    let d = DisparityMap::from_fn(2, 1, |x, _| if x == 0 { Some(50.0) } else { None });
    let z = disparity_to_depth(&d, &c).unwrap();
    assert_eq!(z.get(0, 0), Some(2.0));
    assert_eq!(z.get(1, 0), None);
    let doubled = disparity_to_depth(&DisparityMap::from_fn(1, 1, |_, _| Some(100.0)), &c).unwrap();
    assert_eq!(doubled.get(0, 0), Some(1.0));
}

#[test]
fn ground_plane_has_zero_height() {
    for pitch in [0.1, 0.3, 0.55, 0.9] {
        let c = StereoCalib::centered(40, 30, 64.0, 1.6, pitch);
        let far = 1e6;
        let depth = render_ground_depth(40, 30, &c, far);
        let height = depth_to_height(&depth, &c).unwrap();
        let mut ground = 0;
        for y in 0..30 {
            for x in 0..40 {
                let z = depth.get(x, y).unwrap();
                if z < far {
                    ground += 1;
                    let h = height.get(x, y).unwrap();
                    assert!(h.abs() < 1e-6, "pitch {pitch}, ({x},{y}): h = {h}");
                }
            }
        }
        assert!(ground > 0);
    }
}

#[test]
fn height_negates_about_camera_under_mirrored_pitch() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (w, h) = (16, 15);
    let depth = DepthMap::from_fn(w, h, |_, _| Some(rng.random_range(0.5..5.0)));
    let mirrored = DepthMap::from_fn(w, h, |x, y| depth.get(x, h - 1 - y));
    let up = StereoCalib::centered(w, h, 80.0, 1.4, 0.35);
    let down = StereoCalib { pitch_rad: -0.35, ..up };
    let a = depth_to_height(&depth, &up).unwrap();
    let b = depth_to_height(&mirrored, &down).unwrap();
    for y in 0..h {
        for x in 0..w {
            let (ha, hb) = (a.get(x, y).unwrap(), b.get(x, h - 1 - y).unwrap());
            assert!(((ha - 1.4) + (hb - 1.4)).abs() < 1e-12);
        }
    }
}

#[test]
fn height_does_not_depend_on_column() {
    let c = calib();
    let depth = DepthMap::from_fn(32, 24, |_, y| Some(1.0 + y as f64 * 0.1));
    let height = depth_to_height(&depth, &c).unwrap();
    for y in 0..24 {
        let first = height.get(0, y).unwrap();
        assert!((0..32).all(|x| height.get(x, y) == Some(first)));
    }
}

#[test]
fn height_back_projection_at_pitch_zero() {
    let c = StereoCalib::centered(21, 21, 100.0, 1.2, 0.0);
    let z = 3.0;
    // v = cy + f·H/Z lands on the ground
    let v = c.cy + c.focal_px * c.camera_height_m / z;
    assert_eq!(v, 50.0);
    let c = StereoCalib { cy: 10.0 - 40.0, ..c };
    let depth = DepthMap::from_fn(21, 21, |_, _| Some(z));
    let height = depth_to_height(&depth, &c).unwrap();
    assert!(height.get(5, 10).unwrap().abs() < 1e-12);
    let axis = StereoCalib { cy: 10.0, ..c };
    let on_axis = depth_to_height(&depth, &axis).unwrap();
    assert_eq!(on_axis.get(3, 10), Some(1.2));
}

#[test]
fn grayscale_coefficients() {
    let p = |v| Plane::filled(1, 1, v);
    assert_eq!(to_grayscale(&[p(1.0), p(1.0), p(1.0)]).unwrap().get(0, 0), 1.0);
    assert_eq!(to_grayscale(&[p(1.0), p(0.0), p(0.0)]).unwrap().get(0, 0), 0.299);
    assert!((to_grayscale(&[p(0.3), p(0.3), p(0.3)]).unwrap().get(0, 0) - 0.3).abs() < 1e-15);
}

#[test]
fn quantized_depth_channel_inverts_within_one_step() {
    let b = DhgBounds::default();
    let step = (b.z_max - b.z_min) / 255.0;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let z = rng.random_range(b.z_min..b.z_max);
        let q = (b.encode_depth(z) * 255.0).round() / 255.0;
        assert!((b.decode_depth(q) - z).abs() <= step);
    }
}

fn maps_strategy() -> impl Strategy<Value = (Vec<Option<f64>>, Vec<Option<f64>>, Vec<f64>)> {
    let n = 6 * 5;
    (
        prop::collection::vec(prop::option::of(-2.0..20.0f64), n),
        prop::collection::vec(prop::option::of(-3.0..5.0f64), n),
        prop::collection::vec(0.0..=1.0f64, n),
    )
}

proptest! {
    #[test]
    fn dhg_stays_in_unit_range_and_masks_invalid((z, h, g) in maps_strategy()) {
        let (w, hh) = (6, 5);
        let depth = DepthMap::from_fn(w, hh, |x, y| z[y * w + x]);
        let height = HeightMap::from_fn(w, hh, |x, y| h[y * w + x]);
        let gray = Plane::new(w, hh, g.clone()).unwrap();
        let dhg = assemble_dhg(&depth, &height, &gray, DhgBounds::default()).unwrap();
        for y in 0..hh {
            for x in 0..w {
                let i = y * w + x;
                let invalid = z[i].is_none() || h[i].is_none();
                prop_assert_eq!(dhg.invalid.get(x, y), invalid);
                for ch in dhg.channels() {
                    let v = ch.get(x, y);
                    prop_assert!((0.0..=1.0).contains(&v));
                }
                if invalid {
                    prop_assert_eq!(dhg.depth.get(x, y), 0.0);
                    prop_assert_eq!(dhg.height.get(x, y), 0.0);
                }
                prop_assert_eq!(dhg.gray.get(x, y), g[i]);
            }
        }
    }
}
