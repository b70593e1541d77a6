//! Reverse-mode gradients against central finite differences.

use egonet_tensor::ops::{Conv2dSpec, PoolSpec};
use egonet_tensor::{grad_check, Mode, Result, Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPS: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    Tensor::from_fn(shape.to_vec(), |_| rng.random_range(-1.0..1.0))
}

#[test]
fn conv_relu_on_four_by_four() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x = random_tensor(&mut rng, &[1, 2, 4, 4]);
    let w = random_tensor(&mut rng, &[3, 2, 3, 3]);
    let b = random_tensor(&mut rng, &[3]);
    let report = grad_check(
        |tape, v| {
            let y = tape.conv2d(v[0], v[1], v[2], Conv2dSpec::same(3, 1))?;
            let r = tape.relu(y)?;
            tape.sum(r)
        },
        &[x, w, b],
        EPS,
        TOL,
    )
    .unwrap();
    assert!(report.max_rel_error() < TOL, "{report:?}");
}

#[test]
fn inference_dropout_changes_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let x = random_tensor(&mut rng, &[1, 1, 5, 5]);
    let w = random_tensor(&mut rng, &[2, 1, 3, 3]);
    let b = random_tensor(&mut rng, &[2]);
    let params = [x, w, b];
    let graph = |with_dropout: bool| {
        move |tape: &mut Tape, v: &[Var]| -> Result<Var> {
            let y = tape.conv2d(v[0], v[1], v[2], Conv2dSpec::default())?;
            let y = if with_dropout {
                let mut rng = ChaCha8Rng::seed_from_u64(5);
                tape.dropout(y, 0.5, Mode::Inference, &mut rng)?
            } else {
                y
            };
            let r = tape.relu(y)?;
            tape.sum(r)
        }
    };
    let with = grad_check(graph(true), &params, EPS, TOL).unwrap();
    let without = grad_check(graph(false), &params, EPS, TOL).unwrap();
    assert!(with.passed());
    for (a, b) in with.params.iter().zip(&without.params) {
        assert_eq!(a.max_rel_error, b.max_rel_error);
    }
}

/// Description of a randomly composed small graph.
#[derive(Debug, Clone)]
struct GraphPlan {
    spec: Conv2dSpec,
    relu: bool,
    pool: Option<PoolSpec>,
    upsample: bool,
    dropout: bool,
    branch: bool,
    softmax_head: bool,
    labels: Tensor,
    head_weights: Tensor,
}

fn plan_graph(seed: u64) -> (GraphPlan, Vec<Tensor>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (b, c) = (rng.random_range(1..=2), rng.random_range(1..=3));
    let (h, w) = (rng.random_range(4..=7), rng.random_range(4..=7));
    let spec = Conv2dSpec {
        stride: rng.random_range(1..=2),
        pad: rng.random_range(0..=2),
        dilation: rng.random_range(1..=2),
    };
    let k = if spec.dilation == 2 { 2 } else { 3 };
    let o = rng.random_range(1..=3);
    let (oh, ow) = (
        spec.output_len(h, k).unwrap(),
        spec.output_len(w, k).unwrap(),
    );
    let pool = (rng.random_bool(0.4) && oh >= 2 && ow >= 2)
        .then(|| PoolSpec::new(2, rng.random_range(1..=2), 0));
    let (mut fh, mut fw) = match pool {
        Some(p) => (p.output_len(oh).unwrap(), p.output_len(ow).unwrap()),
        None => (oh, ow),
    };
    let upsample = rng.random_bool(0.3);
    if upsample {
        fh *= 2;
        fw *= 2;
    }
    let branch = rng.random_bool(0.4);
    let feat_c = if branch { o + 2 } else { o };
    let softmax_head = rng.random_bool(0.5);

    let mut params = vec![
        random_tensor(&mut rng, &[b, c, h, w]),
        random_tensor(&mut rng, &[o, c, k, k]),
        random_tensor(&mut rng, &[o]),
    ];
    if branch {
        params.push(random_tensor(&mut rng, &[2, o, 1, 1]));
        params.push(random_tensor(&mut rng, &[2]));
    }
    if softmax_head {
        params.push(random_tensor(&mut rng, &[2, feat_c, 1, 1]));
        params.push(random_tensor(&mut rng, &[2]));
    }
    let labels = Tensor::from_fn([b, fh, fw], |_| rng.random_range(0..2) as f64);
    let head_weights = random_tensor(&mut rng, &[b, feat_c, fh, fw]);
    let plan = GraphPlan {
        spec,
        relu: rng.random_bool(0.7),
        pool,
        upsample,
        dropout: rng.random_bool(0.3),
        branch,
        softmax_head,
        labels,
        head_weights,
    };
    (plan, params)
}

fn build(plan: &GraphPlan, tape: &mut Tape, v: &[Var]) -> Result<Var> {
    let mut h = tape.conv2d(v[0], v[1], v[2], plan.spec)?;
    if plan.relu {
        h = tape.relu(h)?;
    }
    if let Some(p) = plan.pool {
        h = tape.maxpool2d(h, p)?;
    }
    if plan.upsample {
        h = tape.upsample_bilinear(h, 2)?;
    }
    if plan.dropout {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        h = tape.dropout(h, 0.5, Mode::Training, &mut rng)?;
    }
    let mut next = 3;
    if plan.branch {
        let side = tape.conv2d(h, v[next], v[next + 1], Conv2dSpec::default())?;
        next += 2;
        h = tape.concat_channels(&[h, side])?;
    }
    if plan.softmax_head {
        let logits = tape.conv2d(h, v[next], v[next + 1], Conv2dSpec::default())?;
        Ok(tape.softmax_ce(logits, &plan.labels)?.0)
    } else {
        let weights = tape.constant(plan.head_weights.clone());
        let prod = tape.mul(h, weights)?;
        tape.sum(prod)
    }
}

#[test]
fn random_small_graphs_match_finite_differences() {
    let mut worst: f64 = 0.0;
    for seed in 0..120 {
        let (plan, params) = plan_graph(seed);
        let report = grad_check(|tape, v| build(&plan, tape, v), &params, EPS, TOL).unwrap();
        assert!(
            report.passed(),
            "seed {seed}: {plan:?}\n{:?}",
            report.params
        );
        worst = worst.max(report.max_rel_error());
    }
    assert!(worst < TOL);
}

#[test]
fn identical_seeds_give_identical_losses() {
    let (plan, params) = plan_graph(3);
    let plan = GraphPlan {
        dropout: true,
        ..plan
    };
    let loss = |params: &[Tensor]| {
        let mut tape = Tape::new();
        let vars: Vec<Var> = params.iter().map(|p| tape.param(p.clone())).collect();
        let l = build(&plan, &mut tape, &vars).unwrap();
        tape.value(l).data()[0]
    };
    assert_eq!(loss(&params).to_bits(), loss(&params).to_bits());
}
