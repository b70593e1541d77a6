use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use egonet_core::data::{
    default_scene_specs, generate_dataset, load_dataset, normalize_inputs, render_frame, save_frame, DatasetManifest,
    FrameImages, FrameRecord, Role, Sample, SceneSpec, SynthSpec, FORMAT_VERSION,
};
use egonet_core::dhg::{depth_to_height, DepthMap, DhgBounds, StereoCalib};
use egonet_core::eval::{exact_thresholds, max_f_score, pr_curve};
use egonet_core::{BinaryMask, Plane};

fn files(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().display().to_string(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn generation_is_bit_identical() {
    let spec = default_scene_specs(3, 2, 6);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    generate_dataset(&spec, a.path()).unwrap();
    generate_dataset(&spec, b.path()).unwrap();
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert_eq!(fa.len(), 1 + 2 * 6 * 3);
    assert_eq!(fa, fb);
    let c = tempfile::tempdir().unwrap();
    generate_dataset(&default_scene_specs(4, 2, 6), c.path()).unwrap();
    assert_ne!(files(c.path()), fa);
}

#[test]
fn target_pixels_back_project_inside_the_target() {
    let spec = default_scene_specs(0, 2, 30);
    for scene in &spec.scenes {
        for i in 0..scene.frames {
            let f = render_frame(scene, i).unwrap();
            let target = f.objects.iter().find(|o| o.role == Role::Target).unwrap();
            let c = &f.calib;
            let heights = depth_to_height(&f.depth, c).unwrap();
            assert!(f.mask.count() > 0);
            for y in 0..scene.height {
                for x in 0..scene.width {
                    if !f.mask.get(x, y) {
                        continue;
                    }
                    let z = f.depth.get(x, y).unwrap();
                    let cam_x = (x as f64 - c.cx) * z / c.focal_px;
                    let cam_y = (y as f64 - c.cy) * z / c.focal_px;
                    assert!((z - target.depth_m).abs() <= 0.01);
                    assert!((cam_x - target.center_m[0]).abs() <= target.size_m[0] / 2.0 + 0.01);
                    assert!((cam_y - target.center_m[1]).abs() <= target.size_m[1] / 2.0 + 0.01);
                    let h = heights.get(x, y).unwrap();
                    let reach = target.size_m[1] / 2.0 * c.pitch_rad.cos() + 0.01;
                    assert!((h - target.height_m).abs() <= reach, "height {h} vs {}", target.height_m);
                    let [lo, hi] = scene.target.distance_m;
                    assert!((lo..=hi).contains(&z));
                }
            }
        }
    }
}

#[test]
fn lone_object_is_the_mask() {
    let mut spec = default_scene_specs(1, 1, 5);
    spec.scenes[0].distractors.clear();
    let scene = &spec.scenes[0];
    for i in 0..5 {
        let f = render_frame(scene, i).unwrap();
        assert_eq!(f.objects.len(), 1);
        let o = &f.objects[0];
        let expected = BinaryMask::from_fn(scene.width, scene.height, |x, y| o.covers(x, y));
        assert_eq!(f.mask, expected);
    }
}

fn default_samples() -> (tempfile::TempDir, Vec<Sample>) {
    let dir = tempfile::tempdir().unwrap();
    let spec = default_scene_specs(0, 4, 60);
    generate_dataset(&spec, dir.path()).unwrap();
    let ds = load_dataset(dir.path()).unwrap();
    let samples = ds
        .scenes()
        .iter()
        .flat_map(|s| ds.scene_samples(s, (64, 64)).unwrap())
        .collect();
    (dir, samples)
}

/// MF of the map `P(target | key)` estimated from every pixel of `samples`.
fn bayes_mf(samples: &[Sample], key: impl Fn(&Sample, usize) -> usize) -> f64 {
    let mut counts: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    for s in samples {
        for i in 0..64 * 64 {
            let e = counts.entry(key(s, i)).or_default();
            e.1 += 1.0;
            if s.mask.data()[i] {
                e.0 += 1.0;
            }
        }
    }
    let preds: Vec<Plane> = samples
        .iter()
        .map(|s| {
            Plane::from_fn(64, 64, |x, y| {
                let (t, n) = counts[&key(s, y * 64 + x)];
                t / n
            })
        })
        .collect();
    let masks: Vec<BinaryMask> = samples.iter().map(|s| s.mask.clone()).collect();
    let curve = pr_curve(&preds, &masks, &exact_thresholds(&preds)).unwrap();
    max_f_score(&curve)
}

fn bin(v: f64, bins: usize) -> usize {
    ((v * bins as f64) as usize).min(bins - 1)
}

#[test]
fn no_single_channel_identifies_the_target() {
    let (_dir, samples) = default_samples();
    for ch in 0..6 {
        let mf = bayes_mf(&samples, |s, i| {
            let t = if ch < 3 { &s.rgb } else { &s.dhg };
            bin(t.data()[(ch % 3) * 4096 + i], 64)
        });
        assert!(mf < 0.9, "channel {ch}: MF {mf}");
    }
    let rgb_mf = bayes_mf(&samples, |s, i| {
        let c = |k: usize| bin(s.rgb.data()[k * 4096 + i], 16);
        (c(0) * 16 + c(1)) * 16 + c(2)
    });
    assert!(rgb_mf < 0.7, "RGB MF {rgb_mf}");
}

#[test]
fn joint_signature_identifies_the_target() {
    let spec = default_scene_specs(0, 4, 60);
    let (mut preds, mut masks) = (Vec::new(), Vec::new());
    for scene in &spec.scenes {
        let t = &scene.target;
        let in_range = |v: f64, r: [f64; 2]| v >= r[0] && v <= r[1];
        for i in 0..scene.frames {
            let f = render_frame(scene, i).unwrap();
            let target_color = f.objects.iter().find(|o| o.role == Role::Target).unwrap().color;
            let hits: Vec<_> = f
                .objects
                .iter()
                .filter(|o| {
                    let column = o.center_px()[0] / (scene.width as f64 - 1.0);
                    o.color == target_color
                        && in_range(o.depth_m, t.distance_m)
                        && in_range(o.height_m, t.height_m)
                        && t.columns.iter().any(|&c| in_range(column, c))
                })
                .collect();
            assert_eq!(hits.len(), 1);
            preds.push(Plane::from_fn(scene.width, scene.height, |x, y| {
                if hits.iter().any(|o| o.covers(x, y)) { 1.0 } else { 0.0 }
            }));
            masks.push(f.mask);
        }
    }
    let curve = pr_curve(&preds, &masks, &[0.5]).unwrap();
    assert_eq!(max_f_score(&curve), 1.0);
}

#[test]
fn every_ablated_signature_is_confusable() {
    // each cue on its own leaves a same-looking distractor in some frame
    let spec = default_scene_specs(0, 4, 60);
    let (mut same_color_near, mut same_color_far, mut other_color_near) = (0, 0, 0);
    for scene in &spec.scenes {
        for i in 0..scene.frames {
            let f = render_frame(scene, i).unwrap();
            let target = f.objects.iter().find(|o| o.role == Role::Target).unwrap();
            for o in f.objects.iter().filter(|o| o.role != Role::Target) {
                let near = (o.depth_m - target.depth_m).abs() < 0.25;
                match (o.color == target.color, near) {
                    (true, true) => same_color_near += 1,
                    (true, false) => same_color_far += 1,
                    (false, true) => other_color_near += 1,
                    _ => {}
                }
            }
        }
    }
    assert!(same_color_near > 0 && same_color_far > 0 && other_color_near > 0);
}

#[test]
fn save_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (w, h) = (7, 5);
    let record = FrameRecord {
        frame_id: "s/0000".into(),
        scene_id: "s".into(),
        rgb: "s/rgb/0000.png".into(),
        depth: "s/depth/0000.png".into(),
        mask: "s/mask/0000.png".into(),
        calib: "cam".into(),
    };
    let mask = BinaryMask::from_fn(w, h, |x, y| (x * y) % 3 == 1);
    let depth = DepthMap::from_fn(w, h, |x, y| match (x, y) {
        (0, 0) => None,
        (1, 0) => Some(2.0005),
        _ => Some(0.3 + 0.123_456 * (x + y) as f64),
    });
    let rgb = [
        Plane::from_fn(w, h, |x, _| x as f64 / 6.0),
        Plane::filled(w, h, 1.0),
        Plane::filled(w, h, 0.0),
    ];
    save_frame(
        dir.path(),
        &record,
        &FrameImages {
            rgb,
            depth: depth.clone(),
            mask: mask.clone(),
        },
    )
    .unwrap();
    let manifest = DatasetManifest {
        format_version: FORMAT_VERSION,
        scenes: vec!["s".into()],
        frames: vec![record.clone()],
        calibs: [("cam".to_string(), StereoCalib::centered(w, h, 10.0, 1.5, 0.2))].into(),
        bounds: DhgBounds::default(),
    };
    manifest.write(dir.path()).unwrap();
    let ds = load_dataset(dir.path()).unwrap();
    let frame = ds.load_frame(&record).unwrap();
    assert_eq!(frame.mask, mask);
    assert_eq!(frame.depth.get(0, 0), None);
    let z = frame.depth.get(1, 0).unwrap();
    assert!(z == 2.0 || z == 2.001, "{z}");
    for y in 0..h {
        for x in 0..w {
            if let Some(a) = depth.get(x, y) {
                assert!((frame.depth.get(x, y).unwrap() - a).abs() <= 0.0005 + 1e-12);
            }
        }
    }
    assert_eq!(frame.rgb[1].get(3, 3), 1.0);

    let sample = normalize_inputs(&frame, ds.bounds(), (10, 14)).unwrap();
    assert_eq!(sample.rgb.shape(), [3, 10, 14]);
    assert!(sample.rgb.data()[140..280].iter().all(|&v| v == 1.0));
    assert!(sample.label.data().iter().all(|&v| v == 0.0 || v == 1.0));
}

fn write_manifest(dir: &Path, text: &str) {
    fs::write(dir.join("manifest.json"), text).unwrap();
}

#[test]
fn bad_manifests_are_rejected_with_paths() {
    let dir = tempfile::tempdir().unwrap();
    let empty = DatasetManifest {
        format_version: FORMAT_VERSION,
        scenes: vec![],
        frames: vec![],
        calibs: Default::default(),
        bounds: DhgBounds::default(),
    };
    empty.write(dir.path()).unwrap();
    let err = load_dataset(dir.path()).unwrap_err().to_string();
    assert!(err.contains("no scenes"), "{err}");

    generate_dataset(&default_scene_specs(0, 1, 2), dir.path()).unwrap();
    let text = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    write_manifest(dir.path(), &text.replace(&format!("\"formatVersion\": {FORMAT_VERSION}"), "\"formatVersion\": 99"));
    let err = load_dataset(dir.path()).unwrap_err().to_string();
    assert!(err.contains("version") && err.contains("manifest.json"), "{err}");

    write_manifest(dir.path(), &text);
    fs::remove_file(dir.path().join("scene0/mask/0001.png")).unwrap();
    let err = load_dataset(dir.path()).unwrap_err().to_string();
    assert!(err.contains("scene0/mask/0001.png"), "{err}");
}

#[test]
fn mismatched_sizes_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    generate_dataset(&default_scene_specs(0, 1, 1), dir.path()).unwrap();
    let ds = load_dataset(dir.path()).unwrap();
    let record = &ds.manifest.frames[0];
    egonet_core::imageio::write_mask(&dir.path().join(&record.mask), &BinaryMask::empty(5, 5)).unwrap();
    let err = ds.load_frame(record).unwrap_err().to_string();
    assert!(err.contains("mask/0000.png"), "{err}");
}

#[test]
fn unsatisfiable_specs_are_rejected() {
    let mut spec: SynthSpec = default_scene_specs(0, 1, 3);
    let s: &mut SceneSpec = &mut spec.scenes[0];
    for d in &mut s.distractors {
        d.distance_m = s.target.distance_m;
    }
    assert!(s.validate().is_err());
    let dir = tempfile::tempdir().unwrap();
    assert!(generate_dataset(&spec, dir.path()).is_err());
    assert!(generate_dataset(&SynthSpec { scenes: vec![], bounds: DhgBounds::default() }, dir.path()).is_err());
}
