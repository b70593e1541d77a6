//! Library-level steps shared by the subcommands.

use egonet_core::data::{Dataset, Sample};
use egonet_core::eval::{
    aop_baseline, center_prior, constant_map, evaluate_dataset, Aggregation, Baseline, EvalReport,
};
use egonet_core::model::{EgoNet, EgoNetParams};
use egonet_core::train::{leave_one_out_splits, train_loop, TrainConfig, TrainEvent, TrainOutcome};
use egonet_core::{Plane, Result};
use egonet_tensor::Tensor;

const PREDICT_BATCH: usize = 8;

/// Width of the center prior as a fraction of the image diagonal.
const CENTER_SIGMA_FRAC: f64 = 0.25;

/// Every frame of every scene, normalized to `(height, width)`.
pub fn load_samples(ds: &Dataset, size: (usize, usize)) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    for scene in ds.scenes() {
        out.extend(ds.scene_samples(scene, size)?);
    }
    Ok(out)
}

/// Scene ids in first-appearance order.
pub fn scene_ids(samples: &[Sample]) -> Vec<String> {
    let mut ids: Vec<String> = Vec::new();
    for s in samples {
        if !ids.contains(&s.scene) {
            ids.push(s.scene.clone());
        }
    }
    ids
}

fn stack(items: &[&Tensor]) -> Result<Tensor> {
    let mut shape = vec![items.len()];
    shape.extend_from_slice(items[0].shape());
    let data = items.iter().flat_map(|t| t.data().iter().copied()).collect();
    Ok(Tensor::new(shape, data)?)
}

/// Probability maps for `samples`, in order.
pub fn predict(net: &EgoNet, params: &EgoNetParams, samples: &[&Sample]) -> Result<Vec<Plane>> {
    let mut out = Vec::with_capacity(samples.len());
    for chunk in samples.chunks(PREDICT_BATCH) {
        let rgb = stack(&chunk.iter().map(|s| &s.rgb).collect::<Vec<_>>())?;
        let dhg = stack(&chunk.iter().map(|s| &s.dhg).collect::<Vec<_>>())?;
        out.extend(net.forward(params, &rgb, &dhg)?);
    }
    Ok(out)
}

/// Trains from `cfg.seed`-initialized parameters on `samples`.
pub fn train_all(
    net: &EgoNet,
    samples: &[&Sample],
    cfg: &TrainConfig,
    on_event: impl FnMut(TrainEvent<'_>) -> Result<()>,
) -> Result<TrainOutcome> {
    train_loop(net, net.init_params(cfg.seed), samples, cfg, on_event)
}

/// Leave-one-out scores of `net`: one model per held-out scene.
pub fn cross_validate(
    net: &EgoNet,
    samples: &[Sample],
    cfg: &TrainConfig,
    thresholds: &[f64],
    agg: Aggregation,
) -> Result<EvalReport> {
    let splits = leave_one_out_splits(&scene_ids(samples))?;
    evaluate_dataset(samples, &splits, thresholds, agg, |_, train, test| {
        let outcome = train_all(net, train, cfg, |_| Ok(()))?;
        predict(net, &outcome.params, test)
    })
}

/// One map per test frame; AOP averages the training masks.
pub fn baseline_maps(baseline: Baseline, train: &[&Sample], test: &[&Sample]) -> Result<Vec<Plane>> {
    let (w, h) = test[0].mask.dims();
    let map = match baseline {
        Baseline::Aop => aop_baseline(&train.iter().map(|s| &s.mask).collect::<Vec<_>>())?,
        Baseline::Center => center_prior(h, w, CENTER_SIGMA_FRAC)?,
        Baseline::Constant => constant_map(h, w, 0.5),
    };
    Ok(vec![map; test.len()])
}

/// Leave-one-out scores of a baseline.
pub fn evaluate_baseline(
    baseline: Baseline,
    samples: &[Sample],
    thresholds: &[f64],
    agg: Aggregation,
) -> Result<EvalReport> {
    let splits = leave_one_out_splits(&scene_ids(samples))?;
    evaluate_dataset(samples, &splits, thresholds, agg, |_, train, test| {
        baseline_maps(baseline, train, test)
    })
}
