use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Component, Path, PathBuf};

use egonet_core::data::{generate_dataset, load_dataset, Dataset, Sample};
use egonet_core::dhg::{
    assemble_dhg, depth_to_height, disparity_to_depth, scanline_disparity_dp, to_grayscale, DepthMap, DhgBounds,
    StereoCalib,
};
use egonet_core::eval::{default_thresholds, evaluate_dataset, pr_plot_svg, Aggregation, EvalReport, PrCurve};
use egonet_core::imageio::{read_gray, write_depth_png, write_gray, write_mask, write_pfm};
use egonet_core::model::{load_checkpoint, save_checkpoint, EgoNet, EgoNetConfig, Variant};
use egonet_core::train::{leave_one_out_splits, write_loss_csv, TrainEvent};
use egonet_core::{Error, Plane};
use serde_json::{json, Value};

use crate::args::{AblateArgs, Command, DepthArgs, EncodeArgs, EvalArgs, ReportArgs, SynthArgs, TrainArgs};
use crate::config::{load_synth_spec, resolve_experiment, ExperimentConfig, RUN_RECORD};
use crate::pipeline::{baseline_maps, cross_validate, load_samples, predict, scene_ids, train_all};
use crate::{usage, CliResult};

pub fn execute(command: Command, argv: &[String]) -> CliResult<()> {
    match command {
        Command::Depth(a) => depth(a, argv),
        Command::Encode(a) => encode(a, argv),
        Command::Synth(a) => synth(a, argv),
        Command::Train(a) => train(a, argv),
        Command::Eval(a) => eval(a, argv),
        Command::Ablate(a) => ablate(a, argv),
        Command::Report(a) => report(a, argv),
    }
}

fn require_file(path: &Path, what: &str) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("{what} {} is not a file", path.display())))
    }
}

fn require_dir(path: &Path, what: &str) -> CliResult<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(usage(format!("{what} {} is not a directory", path.display())))
    }
}

fn prepare_out(out: &Path) -> CliResult<()> {
    if out.exists() && !out.is_dir() {
        return Err(usage(format!("--out {} exists and is not a directory", out.display())));
    }
    fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

/// `out/<rel>`, refusing relative paths that would leave `out`.
fn inside(out: &Path, rel: &str) -> egonet_core::Result<PathBuf> {
    let rel = Path::new(rel);
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return Err(Error::Data {
            path: rel.to_path_buf(),
            reason: "frame id is not a plain relative path".into(),
        });
    }
    Ok(out.join(rel))
}

fn create(path: &Path) -> CliResult<BufWriter<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    let file = fs::File::create(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(BufWriter::new(file))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>) -> CliResult<()> {
    let mut w = create(path)?;
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
    Ok(())
}

fn write_run_record(out: &Path, command: &str, argv: &[String], fields: Value) -> CliResult<()> {
    let mut record = json!({
        "command": command,
        "args": argv,
        "version": env!("CARGO_PKG_VERSION"),
    });
    if let (Some(r), Value::Object(extra)) = (record.as_object_mut(), fields) {
        r.extend(extra);
    }
    let text = serde_json::to_string_pretty(&record).expect("run record serializes");
    write_with(&out.join(RUN_RECORD), |w| writeln!(w, "{text}"))
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn depth(a: DepthArgs, argv: &[String]) -> CliResult<()> {
    require_file(&a.left, "left image")?;
    require_file(&a.right, "right image")?;
    require_file(&a.calib, "calibration")?;
    let text = fs::read_to_string(&a.calib).map_err(|e| Error::Io {
        path: a.calib.clone(),
        source: e,
    })?;
    let calib: StereoCalib = serde_json::from_str(&text).map_err(|e| Error::Data {
        path: a.calib.clone(),
        reason: e.to_string(),
    })?;
    calib.validate()?;
    prepare_out(&a.out)?;
    let left = read_gray(&a.left)?;
    let right = read_gray(&a.right)?;
    let disparity = scanline_disparity_dp(&left, &right, a.max_disp, a.occlusion)?;
    let depth = disparity_to_depth(&disparity, &calib)?;
    let (w, h) = disparity.dims();
    let as_map = DepthMap::new(w, h, disparity.values().to_vec(), disparity.valid().to_vec())?;
    write_pfm(&a.out.join("disparity.pfm"), &as_map)?;
    write_pfm(&a.out.join("depth.pfm"), &depth)?;
    write_depth_png(&a.out.join("depth.png"), &depth)?;
    write_run_record(
        &a.out,
        "depth",
        argv,
        json!({
            "left": path_str(&a.left),
            "right": path_str(&a.right),
            "calib": calib,
            "maxDisp": a.max_disp,
            "occlusionCost": a.occlusion,
            "seed": Value::Null,
        }),
    )
}

fn read_bounds(path: &Path) -> CliResult<DhgBounds> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let bounds: DhgBounds = toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    bounds.validate().map_err(|e| usage(e.to_string()))?;
    Ok(bounds)
}

fn open_dataset(path: &Path) -> CliResult<Dataset> {
    if !path.exists() {
        return Err(usage(format!("--dataset {} does not exist", path.display())));
    }
    Ok(load_dataset(path)?)
}

fn encode(a: EncodeArgs, argv: &[String]) -> CliResult<()> {
    let ds = open_dataset(&a.dataset)?;
    let bounds = match &a.config {
        Some(p) => read_bounds(p)?,
        None => ds.bounds(),
    };
    prepare_out(&a.out)?;
    for record in &ds.manifest.frames {
        let frame = ds.load_frame(record)?;
        let gray = to_grayscale(&frame.rgb)?;
        let height = depth_to_height(&frame.depth, &frame.calib)?;
        let dhg = assemble_dhg(&frame.depth, &height, &gray, bounds)?;
        let dir = inside(&a.out, &record.frame_id)?;
        write_gray(&dir.join("depth.png"), &dhg.depth)?;
        write_gray(&dir.join("height.png"), &dhg.height)?;
        write_gray(&dir.join("gray.png"), &dhg.gray)?;
        write_mask(&dir.join("invalid.png"), &dhg.invalid)?;
    }
    write_run_record(
        &a.out,
        "encode",
        argv,
        json!({ "dataset": path_str(&a.dataset), "bounds": bounds, "seed": Value::Null }),
    )
}

fn synth(a: SynthArgs, argv: &[String]) -> CliResult<()> {
    if let Some(p) = &a.config {
        require_file(p, "--config")?;
    }
    let spec = load_synth_spec(a.config.as_deref(), a.seed)?;
    prepare_out(&a.out)?;
    let manifest = generate_dataset(&spec, &a.out)?;
    eprintln!("synth: {} frames in {} scenes", manifest.frames.len(), manifest.scenes.len());
    write_run_record(&a.out, "synth", argv, json!({
            "config": a.config.as_deref().map(path_str),
            "seed": a.seed.or(a.config.is_none().then_some(0)),
            "sceneSeeds": spec.scenes.iter().map(|s| s.seed).collect::<Vec<_>>(),
            "spec": spec,
        }))
}

fn experiment(
    dataset: &Path,
    config: Option<&Path>,
    preset: Option<egonet_core::train::Preset>,
    seed: Option<u64>,
) -> CliResult<(ExperimentConfig, Vec<Sample>)> {
    if let Some(p) = config {
        require_file(p, "--config")?;
    }
    let exp = resolve_experiment(config, preset, seed)?;
    let ds = open_dataset(dataset)?;
    let samples = load_samples(&ds, (exp.model.input_height, exp.model.input_width))?;
    Ok((exp, samples))
}

fn train(a: TrainArgs, argv: &[String]) -> CliResult<()> {
    let c = &a.common;
    let (exp, samples) = experiment(&c.dataset, c.config.as_deref(), c.preset, c.seed)?;
    prepare_out(&c.out)?;
    let net = EgoNet::new(exp.model.clone(), a.variant)?;
    let refs: Vec<&Sample> = samples.iter().collect();
    let every = (exp.train.iterations / 10).max(1);
    let mut saved = Ok(());
    let outcome = train_all(&net, &refs, &exp.train, |event| {
        match event {
            TrainEvent::Step { iteration, loss } if iteration % every == 0 => {
                eprintln!("train: iteration {iteration}/{} loss {loss:.5}", exp.train.iterations);
            }
            TrainEvent::Checkpoint { iteration, params } => {
                let path = c.out.join("checkpoints").join(format!("iter{iteration:06}.ckpt"));
                if let Err(e) = save_checkpoint(&path, &exp.model, params) {
                    saved = Err(e);
                }
            }
            _ => {}
        }
        Ok(())
    })?;
    saved?;
    save_checkpoint(&c.out.join("model.ckpt"), &exp.model, &outcome.params)?;
    write_with(&c.out.join("config.toml"), |w| w.write_all(exp.to_toml().as_bytes()))?;
    write_with(&c.out.join("loss.csv"), |w| write_loss_csv(w, &outcome.trace))?;
    write_run_record(
        &c.out,
        "train",
        argv,
        json!({
            "dataset": path_str(&c.dataset),
            "config": c.config.as_deref().map(path_str),
            "preset": c.preset.map(|p| p.to_string()),
            "seed": exp.train.seed,
            "variant": a.variant,
            "frames": samples.len(),
            "model": exp.model,
            "train": exp.train,
        }),
    )
}

fn model_config_for(checkpoint: &Path, explicit: Option<&Path>) -> CliResult<EgoNetConfig> {
    let path = match explicit {
        Some(p) => p.to_path_buf(),
        None => checkpoint.with_file_name("config.toml"),
    };
    require_file(&path, "model config")?;
    Ok(resolve_experiment(Some(&path), None, None)?.model)
}

fn write_report(out: &Path, report: &EvalReport) -> CliResult<()> {
    write_with(&out.join("metrics.csv"), |w| report.write_csv(w))?;
    write_with(&out.join("curves.csv"), |w| report.write_curves_csv(w))
}

fn aggregation(per_image: bool) -> Aggregation {
    if per_image {
        Aggregation::PerImage
    } else {
        Aggregation::Pooled
    }
}

fn thresholds(n: usize) -> CliResult<Vec<f64>> {
    if n < 2 {
        return Err(usage(format!("--thresholds must be at least 2, got {n}")));
    }
    Ok(default_thresholds(n))
}

fn eval(a: EvalArgs, argv: &[String]) -> CliResult<()> {
    let thresholds = thresholds(a.thresholds)?;
    let agg = aggregation(a.per_image);
    let model = match &a.checkpoint {
        Some(ckpt) => {
            require_file(ckpt, "--checkpoint")?;
            Some(model_config_for(ckpt, a.config.as_deref())?)
        }
        None => None,
    };
    let size_cfg = match (&model, &a.config) {
        (Some(m), _) => m.clone(),
        (None, Some(p)) => {
            require_file(p, "--config")?;
            resolve_experiment(Some(p), None, None)?.model
        }
        (None, None) => EgoNetConfig::default(),
    };
    let ds = open_dataset(&a.dataset)?;
    let samples = load_samples(&ds, (size_cfg.input_height, size_cfg.input_width))?;
    prepare_out(&a.out)?;
    let save_maps = |test: &[&Sample], maps: &[Plane]| -> egonet_core::Result<()> {
        for (s, m) in test.iter().zip(maps) {
            write_gray(&inside(&a.out.join("maps"), &format!("{}.png", s.id))?, m)?;
        }
        Ok(())
    };

    let (report, variant) = match (&a.checkpoint, model) {
        (Some(ckpt), Some(model)) => {
            let params = load_checkpoint(ckpt, &model)?;
            let variant = Variant::infer(&model, &params)?;
            let net = EgoNet::new(model, variant)?;
            let mut rows = Vec::new();
            for scene in scene_ids(&samples) {
                let test: Vec<&Sample> = samples.iter().filter(|s| s.scene == scene).collect();
                let maps = predict(&net, &params, &test)?;
                save_maps(&test, &maps)?;
                let masks: Vec<_> = test.iter().map(|s| s.mask.clone()).collect();
                rows.push(EvalReport::score_scene(&scene, &maps, &masks, &thresholds, agg)?);
            }
            (EvalReport::from_scenes(rows)?, Some(variant))
        }
        _ => {
            let baseline = a.baseline.expect("clap requires a checkpoint or a baseline");
            let splits = leave_one_out_splits(&scene_ids(&samples))?;
            let report = evaluate_dataset(&samples, &splits, &thresholds, agg, |_, train, test| {
                let maps = baseline_maps(baseline, train, test)?;
                save_maps(test, &maps)?;
                Ok(maps)
            })?;
            (report, None)
        }
    };
    write_report(&a.out, &report)?;
    eprintln!("eval: mean MF {:.4}, mean AP {:.4}", report.mean_mf, report.mean_ap);
    write_run_record(
        &a.out,
        "eval",
        argv,
        json!({
            "dataset": path_str(&a.dataset),
            "checkpoint": a.checkpoint.as_deref().map(path_str),
            "baseline": a.baseline.map(|b| b.name()),
            "variant": variant,
            "thresholds": a.thresholds,
            "perImage": a.per_image,
            "model": size_cfg,
            "seed": Value::Null,
            "meanMf": report.mean_mf,
            "meanAp": report.mean_ap,
        }),
    )
}

fn ablate(a: AblateArgs, argv: &[String]) -> CliResult<()> {
    let c = &a.common;
    let thresholds = thresholds(a.thresholds)?;
    let (exp, samples) = experiment(&c.dataset, c.config.as_deref(), c.preset, c.seed)?;
    prepare_out(&c.out)?;
    let mut rows = Vec::new();
    for variant in Variant::ALL {
        let net = EgoNet::new(exp.model.clone(), variant)?;
        let report = cross_validate(&net, &samples, &exp.train, &thresholds, aggregation(a.per_image))?;
        eprintln!("ablate: {variant} MF {:.4} AP {:.4}", report.mean_mf, report.mean_ap);
        write_report(&c.out.join(variant.name()), &report)?;
        rows.push((variant, report.mean_mf, report.mean_ap));
    }
    write_with(&c.out.join("ablation.csv"), |w| {
        writeln!(w, "variant,mf,ap")?;
        for (v, mf, ap) in &rows {
            writeln!(w, "{v},{mf:?},{ap:?}")?;
        }
        Ok(())
    })?;
    write_run_record(
        &c.out,
        "ablate",
        argv,
        json!({
            "dataset": path_str(&c.dataset),
            "config": c.config.as_deref().map(path_str),
            "preset": c.preset.map(|p| p.to_string()),
            "seed": exp.train.seed,
            "thresholds": a.thresholds,
            "perImage": a.per_image,
            "model": exp.model,
            "train": exp.train,
        }),
    )
}

/// `(name, curves.csv)` for `dir` itself or, failing that, its immediate
/// subdirectories.
fn curve_files(dir: &Path) -> CliResult<Vec<(String, PathBuf)>> {
    require_dir(dir, "run")?;
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path_str(dir));
    let own = dir.join("curves.csv");
    if own.is_file() {
        return Ok(vec![(name, own)]);
    }
    let mut subdirs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("curves.csv").is_file())
        .collect();
    subdirs.sort();
    if subdirs.is_empty() {
        return Err(Error::Data {
            path: dir.to_path_buf(),
            reason: "no curves.csv here or in any subdirectory".into(),
        }
        .into());
    }
    Ok(subdirs
        .into_iter()
        .map(|p| {
            let sub = p.file_name().expect("read_dir entry").to_string_lossy().into_owned();
            (format!("{name}/{sub}"), p.join("curves.csv"))
        })
        .collect())
}

fn report(a: ReportArgs, argv: &[String]) -> CliResult<()> {
    let mut runs: Vec<(String, EvalReport)> = Vec::new();
    for dir in &a.runs {
        for (name, path) in curve_files(dir)? {
            let file = fs::File::open(&path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            let report = EvalReport::read_curves_csv(BufReader::new(file)).map_err(|e| Error::Data {
                path: path.clone(),
                reason: e.to_string(),
            })?;
            runs.push((name, report));
        }
    }
    prepare_out(&a.out)?;
    write_with(&a.out.join("merged.csv"), |w| {
        writeln!(w, "run,scene,mf,ap")?;
        for (name, r) in &runs {
            for s in &r.scenes {
                writeln!(w, "{name},{},{:?},{:?}", s.scene, s.mf, s.ap)?;
            }
            writeln!(w, "{name},mean,{:?},{:?}", r.mean_mf, r.mean_ap)?;
        }
        Ok(())
    })?;
    let pooled: Vec<(String, PrCurve)> = runs.iter().map(|(n, r)| (n.clone(), r.pooled_curve())).collect();
    let series: Vec<(String, &PrCurve)> = pooled.iter().map(|(n, c)| (n.clone(), c)).collect();
    let svg = pr_plot_svg(&series);
    write_with(&a.out.join("pr.svg"), |w| w.write_all(svg.as_bytes()))?;
    write_run_record(
        &a.out,
        "report",
        argv,
        json!({
            "runs": a.runs.iter().map(|p| path_str(p)).collect::<Vec<_>>(),
            "seed": Value::Null,
        }),
    )
}
