use crate::model::EgoNetParams;
use crate::{Error, Result};

use super::TrainConfig;

/// Momentum buffers mirroring the parameter shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub velocity: EgoNetParams,
    pub iteration: usize,
}

impl OptimizerState {
    pub fn new(params: &EgoNetParams) -> Self {
        OptimizerState {
            velocity: params.zeros_like(),
            iteration: 0,
        }
    }
}

/// `v ← m·v − lr·(g + wd·w)`, then `w ← w + v`.
///
/// Every gradient is checked before anything is modified, so a rejected
/// step leaves parameters and state untouched.
pub fn sgd_momentum_step(
    params: &mut EgoNetParams,
    grads: &EgoNetParams,
    state: &mut OptimizerState,
    cfg: &TrainConfig,
) -> Result<()> {
    for (name, w) in params.iter() {
        let g = grads
            .get(name)
            .ok_or_else(|| Error::invalid("gradients", format!("no gradient for {name}")))?;
        let v = state
            .velocity
            .get(name)
            .ok_or_else(|| Error::invalid("optimizer state", format!("no velocity for {name}")))?;
        if g.shape() != w.shape() || v.shape() != w.shape() {
            return Err(Error::invalid(
                "gradients",
                format!(
                    "{name}: parameter {:?}, gradient {:?}, velocity {:?}",
                    w.shape(),
                    g.shape(),
                    v.shape()
                ),
            ));
        }
        if let Some(i) = g.data().iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(
                "gradients",
                format!(
                    "non-finite gradient {} in {name}[{i}] at iteration {}; step aborted",
                    g.data()[i],
                    state.iteration
                ),
            ));
        }
    }
    let (m, lr, wd) = (cfg.momentum, cfg.learning_rate, cfg.weight_decay);
    for (name, w) in params.iter_mut() {
        let g = grads.get(name).expect("checked");
        let v = state.velocity.get_mut(name).expect("checked");
        for ((w, v), &g) in w.data_mut().iter_mut().zip(v.data_mut()).zip(g.data()) {
            *v = m * *v - lr * (g + wd * *w);
            *w += *v;
        }
    }
    state.iteration += 1;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use egonet_tensor::Tensor;

    fn single(v: f64) -> EgoNetParams {
        let mut p = EgoNetParams::new();
        p.insert("w", Tensor::from_fn([1], |_| v));
        p
    }

    fn cfg(lr: f64, momentum: f64, wd: f64) -> TrainConfig {
        TrainConfig {
            learning_rate: lr,
            momentum,
            weight_decay: wd,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn decay_arithmetic() {
        let mut w = single(1.0);
        let mut state = OptimizerState::new(&w);
        sgd_momentum_step(&mut w, &single(0.0), &mut state, &cfg(0.1, 0.0, 0.5)).unwrap();
        assert!((state.velocity.get("w").unwrap().data()[0] + 0.05).abs() < 1e-15);
        assert!((w.get("w").unwrap().data()[0] - 0.95).abs() < 1e-15);
    }

    #[test]
    fn plain_sgd_limit() {
        let mut w = single(2.0);
        let mut state = OptimizerState::new(&w);
        sgd_momentum_step(&mut w, &single(3.0), &mut state, &cfg(0.25, 0.0, 0.0)).unwrap();
        assert_eq!(w.get("w").unwrap().data()[0], 2.0 - 0.75);
    }

    #[test]
    fn unrolled_momentum() {
        let (lr, g) = (0.01, 2.0);
        let mut w = single(0.0);
        let mut state = OptimizerState::new(&w);
        let c = cfg(lr, 0.9, 0.0);
        sgd_momentum_step(&mut w, &single(g), &mut state, &c).unwrap();
        let w1 = w.get("w").unwrap().data()[0];
        sgd_momentum_step(&mut w, &single(g), &mut state, &c).unwrap();
        let dw = w.get("w").unwrap().data()[0] - w1;
        assert!((dw + lr * g * 1.9).abs() < 1e-15);
    }

    #[test]
    fn nan_gradient_aborts_without_mutation() {
        let mut w = single(1.0);
        let mut state = OptimizerState::new(&w);
        let err = sgd_momentum_step(&mut w, &single(f64::NAN), &mut state, &cfg(0.1, 0.9, 0.0)).unwrap_err();
        assert!(err.to_string().contains("non-finite"));
        assert_eq!(w, single(1.0));
        assert_eq!(state.iteration, 0);
    }
}
