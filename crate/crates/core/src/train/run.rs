use std::io::Write;

use egonet_tensor::{Mode, Tape, Tensor};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::optim::{sgd_momentum_step, OptimizerState};
use super::TrainConfig;
use crate::data::Sample;
use crate::model::{EgoNet, EgoNetParams};
use crate::{Error, Result};

const SHUFFLE_STREAM: u64 = 1;
const DROPOUT_STREAM: u64 = 2;

#[derive(Debug)]
pub enum TrainEvent<'a> {
    /// Loss of the batch used for update number `iteration` (1-based).
    Step { iteration: usize, loss: f64 },
    /// Parameters after `iteration` updates.
    Checkpoint { iteration: usize, params: &'a EgoNetParams },
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: EgoNetParams,
    pub state: OptimizerState,
    pub trace: Vec<(usize, f64)>,
}

/// Batch index lists for `iterations` steps. Each epoch is a fresh seeded
/// permutation cut into `batch`-sized pieces; the last piece may be short.
pub fn shuffled_batches(n: usize, batch: usize, iterations: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SHUFFLE_STREAM);
    let mut out = Vec::with_capacity(iterations);
    if n == 0 || batch == 0 {
        return out;
    }
    while out.len() < iterations {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            if out.len() == iterations {
                break;
            }
            out.push(chunk.to_vec());
        }
    }
    out
}

fn stack(items: &[&Tensor]) -> Result<Tensor> {
    let inner = items[0].shape().to_vec();
    let mut data = Vec::with_capacity(items.len() * items[0].numel());
    for t in items {
        if t.shape() != inner.as_slice() {
            return Err(Error::invalid(
                "batch",
                format!("sample shapes {inner:?} and {:?} differ", t.shape()),
            ));
        }
        data.extend_from_slice(t.data());
    }
    let mut shape = vec![items.len()];
    shape.extend(inner);
    Ok(Tensor::new(shape, data)?)
}

/// Runs `cfg.iterations` momentum-SGD steps of `net` over `samples`.
pub fn train_loop(
    net: &EgoNet,
    params: EgoNetParams,
    samples: &[&Sample],
    cfg: &TrainConfig,
    mut on_event: impl FnMut(TrainEvent<'_>) -> Result<()>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::invalid("training set", "no samples"));
    }
    let mut net = net.clone();
    net.set_dropout_rate(cfg.dropout_rate)?;
    let mut params = params;
    let mut state = OptimizerState::new(&params);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    dropout_rng.set_stream(DROPOUT_STREAM);
    let mut trace = Vec::with_capacity(cfg.iterations);

    for (step, batch) in shuffled_batches(samples.len(), cfg.batch_size, cfg.iterations, cfg.seed)
        .into_iter()
        .enumerate()
    {
        let iteration = step + 1;
        let items: Vec<&Sample> = batch.iter().map(|&i| samples[i]).collect();
        let rgb = stack(&items.iter().map(|s| &s.rgb).collect::<Vec<_>>())?;
        let dhg = stack(&items.iter().map(|s| &s.dhg).collect::<Vec<_>>())?;
        let labels = stack(&items.iter().map(|s| &s.label).collect::<Vec<_>>())?;

        let mut tape = Tape::new();
        let vars = net.register(&mut tape, &params)?;
        let (loss_var, _) = net.loss(&mut tape, &vars, &rgb, &dhg, &labels, Mode::Training, &mut dropout_rng)?;
        let loss = tape.value(loss_var).data()[0];
        if !loss.is_finite() {
            return Err(Error::NonFinite {
                what: "loss",
                iteration,
                frames: items.iter().map(|s| s.id.clone()).collect(),
            });
        }
        let mut grads_by_var = tape.backward(loss_var)?;
        let mut grads = EgoNetParams::new();
        for (name, var) in &vars {
            let g = grads_by_var
                .take(*var)
                .unwrap_or_else(|| Tensor::zeros(params.get(name).expect("registered").shape().to_vec()));
            grads.insert(name.clone(), g);
        }
        sgd_momentum_step(&mut params, &grads, &mut state, cfg)?;
        trace.push((iteration, loss));
        on_event(TrainEvent::Step { iteration, loss })?;
        if cfg.checkpoint_every > 0 && iteration % cfg.checkpoint_every == 0 {
            on_event(TrainEvent::Checkpoint {
                iteration,
                params: &params,
            })?;
        }
    }
    Ok(TrainOutcome { params, state, trace })
}

/// `iteration,loss` rows; losses use the shortest round-trip representation.
pub fn write_loss_csv<W: Write>(mut out: W, trace: &[(usize, f64)]) -> std::io::Result<()> {
    writeln!(out, "iteration,loss")?;
    for (i, l) in trace {
        writeln!(out, "{i},{l:?}")?;
    }
    out.flush()
}
