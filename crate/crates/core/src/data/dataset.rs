use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use egonet_tensor::Tensor;
use serde::{Deserialize, Serialize};

use crate::dhg::{assemble_dhg, depth_to_height, to_grayscale, DepthMap, DhgBounds, StereoCalib};
use crate::imageio;
use crate::{BinaryMask, Error, Plane, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

/// One annotated frame. Paths are relative to the dataset root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct FrameRecord {
    pub frame_id: String,
    pub scene_id: String,
    pub rgb: PathBuf,
    /// 16-bit millimetre PNG or PFM in metres.
    pub depth: PathBuf,
    pub mask: PathBuf,
    /// Key into [`DatasetManifest::calibs`].
    pub calib: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub scenes: Vec<String>,
    pub frames: Vec<FrameRecord>,
    pub calibs: BTreeMap<String, StereoCalib>,
    pub bounds: DhgBounds,
}

impl DatasetManifest {
    /// Checks the structural invariants; `origin` only labels diagnostics.
    pub fn validate(&self, origin: &Path) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::data(
                origin,
                format!(
                    "unknown format version {} (expected {FORMAT_VERSION})",
                    self.format_version
                ),
            ));
        }
        if self.scenes.is_empty() {
            return Err(Error::data(origin, "no scenes"));
        }
        self.bounds.validate()?;
        let scenes: BTreeSet<&str> = self.scenes.iter().map(String::as_str).collect();
        if scenes.len() != self.scenes.len() {
            return Err(Error::data(origin, "duplicate scene ids"));
        }
        let mut ids = BTreeSet::new();
        let mut populated = BTreeSet::new();
        for f in &self.frames {
            if !ids.insert(f.frame_id.as_str()) {
                return Err(Error::data(origin, format!("duplicate frame id {:?}", f.frame_id)));
            }
            if !scenes.contains(f.scene_id.as_str()) {
                return Err(Error::data(
                    origin,
                    format!("frame {:?} names unknown scene {:?}", f.frame_id, f.scene_id),
                ));
            }
            let calib = self.calibs.get(&f.calib).ok_or_else(|| {
                Error::data(origin, format!("frame {:?} names unknown calib {:?}", f.frame_id, f.calib))
            })?;
            calib.validate()?;
            populated.insert(f.scene_id.as_str());
        }
        if let Some(empty) = scenes.difference(&populated).next() {
            return Err(Error::data(origin, format!("scene {empty:?} has no frames")));
        }
        Ok(())
    }

    pub fn scene_frames<'a>(&'a self, scene: &'a str) -> impl Iterator<Item = &'a FrameRecord> + 'a {
        self.frames.iter().filter(move |f| f.scene_id == scene)
    }

    pub fn write(&self, root: &Path) -> Result<PathBuf> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        let path = root.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

/// A manifest bound to its root directory. Frames load on demand.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub manifest: DatasetManifest,
}

/// Decoded images of one frame.
#[derive(Debug, Clone)]
pub struct Frame {
    pub record: FrameRecord,
    pub rgb: [Plane; 3],
    pub depth: DepthMap,
    pub mask: BinaryMask,
    pub calib: StereoCalib,
}

/// Images to be written by [`save_frame`].
#[derive(Debug, Clone)]
pub struct FrameImages {
    pub rgb: [Plane; 3],
    pub depth: DepthMap,
    pub mask: BinaryMask,
}

/// Network-ready frame: `3×H×W` RGB and DHG tensors, `H×W` labels.
#[derive(Debug, Clone)]
pub struct Sample {
    pub id: String,
    pub scene: String,
    pub rgb: Tensor,
    pub dhg: Tensor,
    pub label: Tensor,
    pub mask: BinaryMask,
}

/// Reads `manifest.json` (or the manifest at `path` if it names a file).
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let manifest_path = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: DatasetManifest =
        serde_json::from_str(&text).map_err(|e| Error::data(&manifest_path, e.to_string()))?;
    manifest.validate(&manifest_path)?;
    let root = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
    for f in &manifest.frames {
        for p in [&f.rgb, &f.depth, &f.mask] {
            let full = root.join(p);
            if !full.is_file() {
                return Err(Error::data(full, format!("missing file for frame {:?}", f.frame_id)));
            }
        }
    }
    Ok(Dataset { root, manifest })
}

fn is_pfm(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pfm"))
}

impl Dataset {
    pub fn scenes(&self) -> &[String] {
        &self.manifest.scenes
    }

    pub fn bounds(&self) -> DhgBounds {
        self.manifest.bounds
    }

    pub fn load_frame(&self, record: &FrameRecord) -> Result<Frame> {
        let rgb_path = self.root.join(&record.rgb);
        let depth_path = self.root.join(&record.depth);
        let mask_path = self.root.join(&record.mask);
        let rgb = imageio::read_rgb(&rgb_path)?;
        let depth = if is_pfm(&depth_path) {
            imageio::read_pfm(&depth_path)?
        } else {
            imageio::read_depth_png(&depth_path)?
        };
        let mask = imageio::read_mask(&mask_path)?;
        let dims = rgb[0].dims();
        if depth.dims() != dims {
            return Err(Error::data(
                depth_path,
                format!("size {:?} differs from RGB {:?}", depth.dims(), dims),
            ));
        }
        if mask.dims() != dims {
            return Err(Error::data(
                mask_path,
                format!("size {:?} differs from RGB {:?}", mask.dims(), dims),
            ));
        }
        let calib = *self
            .manifest
            .calibs
            .get(&record.calib)
            .ok_or_else(|| Error::data(&self.root, format!("unknown calib {:?}", record.calib)))?;
        Ok(Frame {
            record: record.clone(),
            rgb,
            depth,
            mask,
            calib,
        })
    }

    /// Loads and normalizes every frame of `scene` in manifest order.
    pub fn scene_samples(&self, scene: &str, size: (usize, usize)) -> Result<Vec<Sample>> {
        self.manifest
            .scene_frames(scene)
            .map(|r| normalize_inputs(&self.load_frame(r)?, self.bounds(), size))
            .collect()
    }
}

/// Writes the three images of a frame under `root` at the record's paths.
pub fn save_frame(root: &Path, record: &FrameRecord, images: &FrameImages) -> Result<[PathBuf; 3]> {
    let rgb = root.join(&record.rgb);
    let depth = root.join(&record.depth);
    let mask = root.join(&record.mask);
    imageio::write_rgb(&rgb, &images.rgb)?;
    if is_pfm(&depth) {
        imageio::write_pfm(&depth, &images.depth)?;
    } else {
        imageio::write_depth_png(&depth, &images.depth)?;
    }
    imageio::write_mask(&mask, &images.mask)?;
    Ok([rgb, depth, mask])
}

fn planes_to_tensor(planes: &[&Plane]) -> Tensor {
    let (w, h) = planes[0].dims();
    let data = planes.iter().flat_map(|p| p.data().iter().copied()).collect();
    Tensor::new([planes.len(), h, w], data).expect("equal plane sizes")
}

/// Builds the RGB and DHG network inputs at `size = (height, width)`.
pub fn normalize_inputs(frame: &Frame, bounds: DhgBounds, size: (usize, usize)) -> Result<Sample> {
    let (h, w) = size;
    if h == 0 || w == 0 {
        return Err(Error::invalid("input size", format!("{h}x{w}")));
    }
    let gray = to_grayscale(&frame.rgb)?;
    let height = depth_to_height(&frame.depth, &frame.calib)?;
    let dhg = assemble_dhg(&frame.depth, &height, &gray, bounds)?;
    let resize = |p: &Plane| p.resize_bilinear(w, h);
    let rgb: Vec<Plane> = frame.rgb.iter().map(resize).collect();
    let dhg: Vec<Plane> = dhg.channels().into_iter().map(resize).collect();
    let mask = frame.mask.resize_nearest(w, h);
    let label = Tensor::new([h, w], mask.to_plane().into_data())?;
    Ok(Sample {
        id: frame.record.frame_id.clone(),
        scene: frame.record.scene_id.clone(),
        rgb: planes_to_tensor(&rgb.iter().collect::<Vec<_>>()),
        dhg: planes_to_tensor(&dhg.iter().collect::<Vec<_>>()),
        label,
        mask,
    })
}
