//! Synthetic first-person RGBD scenes.
//!
//! Objects are camera-facing rectangles at a constant camera depth, floating
//! above a tiled ground plane that ends at a far wall. Depth is analytic per
//! pixel. Every frame holds exactly one target whose colour, distance, height
//! and horizontal image position follow the scene's target spec; distractor
//! families share some but not all of those properties.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{save_frame, DatasetManifest, FrameImages, FrameRecord, FORMAT_VERSION};
use crate::dhg::{render_ground_depth, DepthMap, DhgBounds, StereoCalib};
use crate::{BinaryMask, Error, Plane, Result};

const MAX_ATTEMPTS: usize = 2000;
const MIN_GAP_PX: f64 = 2.0;
const MIN_CLEARANCE_M: f64 = 0.02;
const TILE_M: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CameraSpec {
    pub focal_px: f64,
    pub baseline_m: f64,
    pub camera_height_m: f64,
    /// Positive looks below the horizon.
    pub pitch_rad: f64,
    #[serde(default)]
    pub height_jitter_m: f64,
    #[serde(default)]
    pub pitch_jitter_rad: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedColor {
    /// Same colour as the target.
    Target,
    /// Random colour at least 60° of hue away from the target.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColorSpec {
    Named(NamedColor),
    Rgb([f64; 3]),
}

fn one() -> usize {
    1
}

fn always() -> f64 {
    1.0
}

fn square() -> [f64; 2] {
    [1.0, 1.0]
}

/// A family of objects. Ranges are `[min, max]`, sampled uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ObjectSpec {
    pub name: String,
    #[serde(default = "one")]
    pub count: usize,
    /// Chance that each of the `count` instances appears in a frame.
    #[serde(default = "always")]
    pub probability: f64,
    /// Camera-axis depth in metres.
    pub distance_m: [f64; 2],
    /// Height of the object centre above the ground.
    pub height_m: [f64; 2],
    /// Allowed centre columns as fractions of the image width; one interval
    /// is picked uniformly, then a column inside it.
    pub columns: Vec<[f64; 2]>,
    /// Width in pixels; the metric size follows from the distance.
    pub size_px: [f64; 2],
    /// Height-to-width ratio.
    #[serde(default = "square")]
    pub aspect: [f64; 2],
    pub color: ColorSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SceneSpec {
    pub name: String,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub camera: CameraSpec,
    pub far_wall_m: f64,
    pub target: ObjectSpec,
    #[serde(default)]
    pub distractors: Vec<ObjectSpec>,
    /// Per-frame global brightness factor range.
    pub lighting: [f64; 2],
    /// Standard deviation of per-pixel colour noise.
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub ground_color: Option<[f64; 3]>,
    #[serde(default)]
    pub wall_color: Option<[f64; 3]>,
    /// Range of the per-frame occluded band at the left and right edges,
    /// drawn independently per side: black, no depth, never labelled.
    #[serde(default)]
    pub margin_px: [usize; 2],
}

/// Input of the `synth` command: several scenes sharing DHG bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SynthSpec {
    pub scenes: Vec<SceneSpec>,
    #[serde(default)]
    pub bounds: DhgBounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Target,
    /// Index into [`SceneSpec::distractors`].
    Distractor(usize),
}

/// An object as rendered, in camera coordinates (`y` down).
#[derive(Debug, Clone, PartialEq)]
pub struct PlacedObject {
    pub role: Role,
    pub depth_m: f64,
    pub center_m: [f64; 2],
    pub size_m: [f64; 2],
    /// Height of the centre above the ground.
    pub height_m: f64,
    pub color: [f64; 3],
    /// Continuous pixel extent `[u0, u1] × [v0, v1]`.
    pub columns: [f64; 2],
    pub rows: [f64; 2],
}

impl PlacedObject {
    pub fn covers(&self, x: usize, y: usize) -> bool {
        let (x, y) = (x as f64, y as f64);
        x >= self.columns[0] && x <= self.columns[1] && y >= self.rows[0] && y <= self.rows[1]
    }

    pub fn center_px(&self) -> [f64; 2] {
        [
            (self.columns[0] + self.columns[1]) / 2.0,
            (self.rows[0] + self.rows[1]) / 2.0,
        ]
    }
}

#[derive(Debug, Clone)]
pub struct RenderedFrame {
    pub index: usize,
    pub calib: StereoCalib,
    pub rgb: [Plane; 3],
    pub depth: DepthMap,
    pub mask: BinaryMask,
    pub objects: Vec<PlacedObject>,
}

fn check_range(what: &str, r: [f64; 2], lo: f64, hi: f64) -> Result<()> {
    if r[0].is_finite() && r[1].is_finite() && r[0] <= r[1] && r[0] >= lo && r[1] <= hi {
        Ok(())
    } else {
        Err(Error::invalid("scene spec", format!("{what} range {r:?} outside [{lo}, {hi}]")))
    }
}

fn disjoint(a: [f64; 2], b: [f64; 2]) -> bool {
    a[1] < b[0] || b[1] < a[0]
}

impl ObjectSpec {
    fn validate(&self, far_wall: f64) -> Result<()> {
        let label = |f: &str| format!("{}.{f}", self.name);
        check_range(&label("distanceM"), self.distance_m, 1e-3, far_wall - 1e-3)?;
        check_range(&label("heightM"), self.height_m, f64::NEG_INFINITY, f64::INFINITY)?;
        check_range(&label("sizePx"), self.size_px, 1.0, f64::INFINITY)?;
        check_range(&label("aspect"), self.aspect, 1e-3, f64::INFINITY)?;
        if self.columns.is_empty() {
            return Err(Error::invalid("scene spec", format!("{} has no column intervals", self.name)));
        }
        for c in &self.columns {
            check_range(&label("columns"), *c, 0.0, 1.0)?;
        }
        if !(0.0..=1.0).contains(&self.probability) {
            return Err(Error::invalid(
                "scene spec",
                format!("{} probability {} outside [0, 1]", self.name, self.probability),
            ));
        }
        if let ColorSpec::Rgb(c) = self.color {
            check_range(&label("color"), [c[0].min(c[1]).min(c[2]), c[0].max(c[1]).max(c[2])], 0.0, 1.0)?;
        }
        Ok(())
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width < 8 || self.height < 8 || self.frames == 0 {
            return Err(Error::invalid(
                "scene spec",
                format!("{}: need at least 8x8 pixels and one frame", self.name),
            ));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::invalid("scene spec", format!("bad scene name {:?}", self.name)));
        }
        let c = &self.camera;
        let cal = StereoCalib::centered(self.width, self.height, c.focal_px, c.camera_height_m, c.pitch_rad);
        StereoCalib {
            baseline_m: c.baseline_m,
            ..cal
        }
        .validate()?;
        if c.height_jitter_m < 0.0 || c.pitch_jitter_rad < 0.0 || c.camera_height_m - c.height_jitter_m <= 0.0 {
            return Err(Error::invalid("scene spec", "camera jitter must be non-negative and keep the camera above ground"));
        }
        if !(self.far_wall_m > 0.0) {
            return Err(Error::invalid("scene spec", "farWallM must be positive"));
        }
        check_range("lighting", self.lighting, 1e-3, f64::INFINITY)?;
        if !(self.noise >= 0.0) {
            return Err(Error::invalid("scene spec", "noise must be non-negative"));
        }
        let [lo, hi] = self.margin_px;
        if lo > hi || 2 * hi >= self.width {
            return Err(Error::invalid(
                "scene spec",
                format!("{}: marginPx {:?} must be ordered and leave part of the image", self.name, self.margin_px),
            ));
        }
        self.target.validate(self.far_wall_m)?;
        if !matches!(self.target.color, ColorSpec::Rgb(_)) {
            return Err(Error::invalid("scene spec", "the target needs an explicit RGB colour"));
        }
        for d in &self.distractors {
            d.validate(self.far_wall_m)?;
        }
        if !self.distractors.is_empty()
            && !self
                .distractors
                .iter()
                .any(|d| disjoint(d.distance_m, self.target.distance_m))
        {
            return Err(Error::invalid(
                "scene spec",
                format!(
                    "{}: target distance range collides with every distractor family",
                    self.name
                ),
            ));
        }
        Ok(())
    }

    fn target_color(&self) -> [f64; 3] {
        match self.target.color {
            ColorSpec::Rgb(c) => c,
            ColorSpec::Named(_) => unreachable!("validated"),
        }
    }

    fn base_calib(&self) -> StereoCalib {
        let c = &self.camera;
        StereoCalib {
            baseline_m: c.baseline_m,
            ..StereoCalib::centered(self.width, self.height, c.focal_px, c.camera_height_m, c.pitch_rad)
        }
    }
}

fn hue(c: [f64; 3]) -> Option<f64> {
    let max = c[0].max(c[1]).max(c[2]);
    let min = c[0].min(c[1]).min(c[2]);
    let d = max - min;
    if d <= 1e-9 {
        return None;
    }
    let h = if max == c[0] {
        ((c[1] - c[2]) / d).rem_euclid(6.0)
    } else if max == c[1] {
        (c[2] - c[0]) / d + 2.0
    } else {
        (c[0] - c[1]) / d + 4.0
    };
    Some(h * 60.0)
}

fn hsv(h: f64, s: f64, v: f64) -> [f64; 3] {
    let c = v * s;
    let hp = h.rem_euclid(360.0) / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r + m, g + m, b + m]
}

fn random_color<R: Rng>(target: [f64; 3], rng: &mut R) -> [f64; 3] {
    let avoid = hue(target);
    loop {
        let h = rng.random_range(0.0..360.0);
        let far = avoid.is_none_or(|a| {
            let d = (h - a).rem_euclid(360.0);
            d.min(360.0 - d) >= 60.0
        });
        if far {
            return hsv(h, rng.random_range(0.5..0.9), rng.random_range(0.45..0.9));
        }
    }
}

fn muted_color<R: Rng>(rng: &mut R, value: std::ops::Range<f64>) -> [f64; 3] {
    hsv(rng.random_range(0.0..360.0), rng.random_range(0.05..0.25), rng.random_range(value))
}

fn uniform<R: Rng>(rng: &mut R, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.random_range(r[0]..=r[1])
    }
}

struct Placer<'a> {
    spec: &'a SceneSpec,
    calib: StereoCalib,
    ground: &'a DepthMap,
}

impl Placer<'_> {
    fn try_place<R: Rng>(&self, obj: &ObjectSpec, role: Role, color: [f64; 3], rng: &mut R) -> Option<PlacedObject> {
        let c = &self.calib;
        let (sin, cos) = c.pitch_rad.sin_cos();
        let (w, h) = (self.spec.width as f64, self.spec.height as f64);
        let z = uniform(rng, obj.distance_m);
        let height = uniform(rng, obj.height_m);
        let interval = obj.columns[rng.random_range(0..obj.columns.len())];
        let u = uniform(rng, interval) * (w - 1.0);
        let wpx = uniform(rng, obj.size_px);
        let hpx = wpx * uniform(rng, obj.aspect);
        let x_c = (u - c.cx) * z / c.focal_px;
        let y_c = (c.camera_height_m - height - z * sin) / cos;
        let v = c.cy + c.focal_px * y_c / z;
        let size_m = [wpx * z / c.focal_px, hpx * z / c.focal_px];
        let columns = [u - wpx / 2.0, u + wpx / 2.0];
        let rows = [v - hpx / 2.0, v + hpx / 2.0];
        if columns[0] < 0.0 || rows[0] < 0.0 || columns[1] > w - 1.0 || rows[1] > h - 1.0 {
            return None;
        }
        let bottom = c.camera_height_m - ((y_c + size_m[1] / 2.0) * cos + z * sin);
        if bottom < MIN_CLEARANCE_M {
            return None;
        }
        let placed = PlacedObject {
            role,
            depth_m: z,
            center_m: [x_c, y_c],
            size_m,
            height_m: height,
            color,
            columns,
            rows,
        };
        let (x0, x1) = (columns[0].ceil() as usize, columns[1].floor() as usize);
        let (y0, y1) = (rows[0].ceil() as usize, rows[1].floor() as usize);
        if x0 > x1 || y0 > y1 {
            return None;
        }
        for y in y0..=y1 {
            for x in x0..=x1 {
                if self.ground.get(x, y).is_some_and(|g| g <= z) {
                    return None;
                }
            }
        }
        Some(placed)
    }
}

fn overlaps(a: &PlacedObject, b: &PlacedObject) -> bool {
    let g = MIN_GAP_PX;
    !(a.columns[1] + g < b.columns[0]
        || b.columns[1] + g < a.columns[0]
        || a.rows[1] + g < b.rows[0]
        || b.rows[1] + g < a.rows[0])
}

fn frame_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Renders frame `index` of a validated scene. Each frame draws from its
/// own random stream, so frames can be produced in any order.
pub fn render_frame(spec: &SceneSpec, index: usize) -> Result<RenderedFrame> {
    spec.validate()?;
    let mut scene_rng = frame_rng(spec.seed, 0);
    let ground_base = spec.ground_color.unwrap_or_else(|| muted_color(&mut scene_rng, 0.35..0.6));
    let wall_base = spec.wall_color.unwrap_or_else(|| muted_color(&mut scene_rng, 0.55..0.85));

    let mut rng = frame_rng(spec.seed, index as u64 + 1);
    let base = spec.base_calib();
    let cam = &spec.camera;
    let calib = StereoCalib {
        camera_height_m: base.camera_height_m + cam.height_jitter_m * rng.random_range(-1.0..=1.0),
        pitch_rad: base.pitch_rad + cam.pitch_jitter_rad * rng.random_range(-1.0..=1.0),
        ..base
    };
    let light = uniform(&mut rng, spec.lighting);
    let (w, h) = (spec.width, spec.height);
    let ground = render_ground_depth(w, h, &calib, spec.far_wall_m);
    let placer = Placer {
        spec,
        calib,
        ground: &ground,
    };

    let target_color = spec.target_color();
    let mut objects: Vec<PlacedObject> = Vec::new();
    let mut wanted: Vec<(&ObjectSpec, Role)> = vec![(&spec.target, Role::Target)];
    for (i, d) in spec.distractors.iter().enumerate() {
        for _ in 0..d.count {
            if rng.random_bool(d.probability) {
                wanted.push((d, Role::Distractor(i)));
            }
        }
    }
    for (obj, role) in wanted {
        let color = match obj.color {
            ColorSpec::Rgb(c) => c,
            ColorSpec::Named(NamedColor::Target) => target_color,
            ColorSpec::Named(NamedColor::Random) => random_color(target_color, &mut rng),
        };
        let mut placed = None;
        for _ in 0..MAX_ATTEMPTS {
            if let Some(p) = placer.try_place(obj, role, color, &mut rng) {
                if objects.iter().all(|o| !overlaps(o, &p)) {
                    placed = Some(p);
                    break;
                }
            }
        }
        let p = placed.ok_or_else(|| {
            Error::invalid(
                "scene spec",
                format!(
                    "{} frame {index}: cannot place {:?} fully in frame, above ground and apart from other objects",
                    spec.name, obj.name
                ),
            )
        })?;
        objects.push(p);
    }

    let (sin, cos) = calib.pitch_rad.sin_cos();
    let (tile_sin, tile_cos) = rng.random_range(0.0..std::f64::consts::FRAC_PI_2).sin_cos();
    let tile_shift = [rng.random_range(0.0..TILE_M), rng.random_range(0.0..TILE_M)];
    let noise = Normal::new(0.0, spec.noise.max(1e-12)).expect("finite noise");
    let mut rgb = [Plane::filled(w, h, 0.0), Plane::filled(w, h, 0.0), Plane::filled(w, h, 0.0)];
    let mut depth = DepthMap::invalid(w, h);
    let mut mask = BinaryMask::empty(w, h);
    for y in 0..h {
        for x in 0..w {
            let hit = objects.iter().find(|o| o.covers(x, y));
            let (z, color) = match hit {
                Some(o) => {
                    if o.role == Role::Target {
                        mask.set(x, y, true);
                    }
                    (o.depth_m, o.color)
                }
                None => {
                    let z = ground.get(x, y).expect("ground is dense");
                    if z >= spec.far_wall_m {
                        (z, wall_base)
                    } else {
                        let cam_x = (x as f64 - calib.cx) * z / calib.focal_px;
                        let cam_y = (y as f64 - calib.cy) * z / calib.focal_px;
                        let forward = z * cos - cam_y * sin;
                        let gx = cam_x * tile_cos - forward * tile_sin + tile_shift[0];
                        let gy = cam_x * tile_sin + forward * tile_cos + tile_shift[1];
                        let tile = ((gx / TILE_M).floor() + (gy / TILE_M).floor()) as i64;
                        let shade = if tile.rem_euclid(2) == 0 { 0.92 } else { 1.08 };
                        (z, ground_base.map(|c| c * shade))
                    }
                }
            };
            depth.set(x, y, Some(z));
            for (ch, plane) in rgb.iter_mut().enumerate() {
                let n = if spec.noise > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                plane.set(x, y, (color[ch] * light + n).clamp(0.0, 1.0));
            }
        }
    }
    let [lo, hi] = spec.margin_px;
    let left = rng.random_range(lo..=hi);
    let right = rng.random_range(lo..=hi);
    for y in 0..h {
        for x in (0..left).chain(w - right..w) {
            depth.set(x, y, None);
            mask.set(x, y, false);
            for plane in rgb.iter_mut() {
                plane.set(x, y, 0.0);
            }
        }
    }
    Ok(RenderedFrame {
        index,
        calib,
        rgb,
        depth,
        mask,
        objects,
    })
}

/// Renders every frame of a scene in memory.
pub fn render_scene(spec: &SceneSpec) -> Result<Vec<RenderedFrame>> {
    spec.validate()?;
    (0..spec.frames).into_par_iter().map(|i| render_frame(spec, i)).collect()
}

fn frame_record(scene: &str, index: usize) -> FrameRecord {
    let stem = format!("{index:04}");
    let frame_id = format!("{scene}/{stem}");
    FrameRecord {
        rgb: PathBuf::from(scene).join("rgb").join(format!("{stem}.png")),
        depth: PathBuf::from(scene).join("depth").join(format!("{stem}.png")),
        mask: PathBuf::from(scene).join("mask").join(format!("{stem}.png")),
        calib: frame_id.clone(),
        frame_id,
        scene_id: scene.to_owned(),
    }
}

/// Renders a scene and writes its frames under `root/<scene name>/`.
/// Returns the records together with each frame's calibration.
pub fn generate_synthetic_scene(spec: &SceneSpec, root: &Path) -> Result<Vec<(FrameRecord, StereoCalib)>> {
    spec.validate()?;
    (0..spec.frames)
        .into_par_iter()
        .map(|i| {
            let frame = render_frame(spec, i)?;
            let record = frame_record(&spec.name, i);
            save_frame(
                root,
                &record,
                &FrameImages {
                    rgb: frame.rgb,
                    depth: frame.depth,
                    mask: frame.mask,
                },
            )?;
            Ok((record, frame.calib))
        })
        .collect()
}

/// Generates every scene and writes `manifest.json`.
pub fn generate_dataset(spec: &SynthSpec, root: &Path) -> Result<DatasetManifest> {
    if spec.scenes.is_empty() {
        return Err(Error::invalid("synth spec", "no scenes"));
    }
    spec.bounds.validate()?;
    let mut manifest = DatasetManifest {
        format_version: FORMAT_VERSION,
        scenes: Vec::new(),
        frames: Vec::new(),
        calibs: Default::default(),
        bounds: spec.bounds,
    };
    for scene in &spec.scenes {
        if manifest.scenes.contains(&scene.name) {
            return Err(Error::invalid("synth spec", format!("duplicate scene name {:?}", scene.name)));
        }
        manifest.scenes.push(scene.name.clone());
        for (record, calib) in generate_synthetic_scene(scene, root)? {
            manifest.calibs.insert(record.calib.clone(), calib);
            manifest.frames.push(record);
        }
    }
    manifest.write(root)?;
    Ok(manifest)
}

/// The default desk-scale dataset: `scenes` scenes of `frames` 64×64 frames.
///
/// The target is a red patch 0.65–0.85 m ahead near the image centre. Each
/// frame may also hold same-colour, same-distance decoys flanking it, a
/// same-distance patch of another colour, a far
/// same-colour patch and random clutter, so colour, depth and position
/// are each insufficient alone. Random black side bands shift the
/// visible field of view from frame to frame.
pub fn default_scene_specs(seed: u64, scenes: usize, frames: usize) -> SynthSpec {
    let target_distance = [0.65, 0.85];
    let target_height = [1.05, 1.2];
    let size = [10.0, 13.0];
    let target_columns = [0.45, 0.55];
    let family = |name: &str, distance: [f64; 2], height: [f64; 2], columns: Vec<[f64; 2]>, color| ObjectSpec {
        name: name.to_owned(),
        count: 1,
        probability: 1.0,
        distance_m: distance,
        height_m: height,
        columns,
        size_px: size,
        aspect: [0.8, 1.25],
        color,
    };
    let scene = |i: usize| SceneSpec {
        name: format!("scene{i}"),
        seed: seed.wrapping_mul(1000).wrapping_add(i as u64),
        width: 64,
        height: 64,
        frames,
        camera: CameraSpec {
            focal_px: 64.0,
            baseline_m: 0.1,
            camera_height_m: 1.6,
            pitch_rad: 0.55,
            height_jitter_m: 0.03,
            pitch_jitter_rad: 0.02,
        },
        far_wall_m: 7.5,
        target: family(
            "target",
            target_distance,
            target_height,
            vec![target_columns],
            ColorSpec::Rgb([0.85, 0.15, 0.1]),
        ),
        distractors: vec![
            ObjectSpec {
                probability: 0.5,
                ..family(
                    "left-same-colour",
                    target_distance,
                    target_height,
                    vec![[0.14, 0.24]],
                    ColorSpec::Named(NamedColor::Target),
                )
            },
            ObjectSpec {
                probability: 0.5,
                ..family(
                    "right-same-colour",
                    target_distance,
                    target_height,
                    vec![[0.76, 0.86]],
                    ColorSpec::Named(NamedColor::Target),
                )
            },
            family(
                "near-other-colour",
                target_distance,
                [1.25, 1.45],
                vec![[0.05, 0.95]],
                ColorSpec::Named(NamedColor::Random),
            ),
            family(
                "far-same-colour",
                [2.0, 3.5],
                [0.2, 1.6],
                vec![[0.12, 0.88]],
                ColorSpec::Named(NamedColor::Target),
            ),
            ObjectSpec {
                count: 2,
                size_px: [8.0, 18.0],
                ..family(
                    "clutter",
                    [1.2, 4.0],
                    [0.1, 1.8],
                    vec![[0.1, 0.9]],
                    ColorSpec::Named(NamedColor::Random),
                )
            },
        ],
        lighting: [0.85, 1.15],
        noise: 0.01,
        ground_color: None,
        wall_color: None,
        margin_px: [0, 22],
    };
    SynthSpec {
        scenes: (0..scenes).map(scene).collect(),
        bounds: DhgBounds::default(),
    }
}
