use rand::Rng;

use crate::ops::{self, Conv2dSpec, PoolSpec};
use crate::{Result, Tensor, TensorError};

/// Handle to a node recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Whether stochastic layers are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Training,
    Inference,
}

enum Op {
    Leaf,
    Conv2d { x: Var, w: Var, b: Var, spec: Conv2dSpec },
    Relu { x: Var },
    MaxPool { x: Var, argmax: Vec<usize> },
    Concat { xs: Vec<Var> },
    Dropout { x: Var, mask: Vec<f64> },
    Upsample { x: Var, factor: usize },
    SoftmaxCe { logits: Var, labels: Tensor, probs: Tensor },
    Mul { a: Var, b: Var },
    Sum { x: Var },
}

struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// Records forward operations in topological order for reverse-mode
/// differentiation.
///
/// Nodes are appended as operations run, so every node's inputs precede it.
/// A tape supports a single [`backward`](Tape::backward) call.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    consumed: bool,
}

/// Gradient buffers produced by [`Tape::backward`], indexed by [`Var`].
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, var: Var) -> Option<&Tensor> {
        self.grads.get(var.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, var: Var) -> Option<Tensor> {
        self.grads.get_mut(var.0).and_then(Option::take)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.0].value
    }

    fn check(&self, var: Var) -> Result<()> {
        if var.0 < self.nodes.len() {
            Ok(())
        } else {
            Err(TensorError::UnknownVar(var.0))
        }
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, var: Var) -> bool {
        self.nodes[var.0].needs_grad
    }

    /// Trainable input: receives a gradient buffer after backward.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Constant input: no gradient is accumulated for it.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn conv2d(&mut self, x: Var, w: Var, b: Var, spec: Conv2dSpec) -> Result<Var> {
        for v in [x, w, b] {
            self.check(v)?;
        }
        let out = ops::conv2d(self.value(x), self.value(w), self.value(b), spec)?;
        let needs = self.needs(x) || self.needs(w) || self.needs(b);
        Ok(self.push(out, Op::Conv2d { x, w, b, spec }, needs))
    }

    pub fn relu(&mut self, x: Var) -> Result<Var> {
        self.check(x)?;
        let out = ops::relu(self.value(x));
        let needs = self.needs(x);
        Ok(self.push(out, Op::Relu { x }, needs))
    }

    pub fn maxpool2d(&mut self, x: Var, spec: PoolSpec) -> Result<Var> {
        self.check(x)?;
        let (out, argmax) = ops::maxpool2d(self.value(x), spec)?;
        let needs = self.needs(x);
        Ok(self.push(out, Op::MaxPool { x, argmax }, needs))
    }

    pub fn concat_channels(&mut self, xs: &[Var]) -> Result<Var> {
        for &v in xs {
            self.check(v)?;
        }
        let values: Vec<&Tensor> = xs.iter().map(|&v| self.value(v)).collect();
        let out = ops::concat_channels(&values)?;
        let needs = xs.iter().any(|&v| self.needs(v));
        Ok(self.push(out, Op::Concat { xs: xs.to_vec() }, needs))
    }

    /// Inverted dropout. In [`Mode::Inference`] (or at rate 0) this is the
    /// identity and returns `x` itself.
    pub fn dropout<R: Rng + ?Sized>(
        &mut self,
        x: Var,
        rate: f64,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Var> {
        self.check(x)?;
        if !(0.0..1.0).contains(&rate) {
            return Err(TensorError::invalid(
                "dropout",
                format!("rate must lie in [0, 1), got {rate}"),
            ));
        }
        if mode == Mode::Inference || rate == 0.0 {
            return Ok(x);
        }
        let mask = ops::dropout_mask(self.value(x).numel(), rate, rng)?;
        let out = ops::mul_mask(self.value(x), &mask);
        let needs = self.needs(x);
        Ok(self.push(out, Op::Dropout { x, mask }, needs))
    }

    pub fn upsample_bilinear(&mut self, x: Var, factor: usize) -> Result<Var> {
        self.check(x)?;
        let out = ops::upsample_bilinear(self.value(x), factor)?;
        let needs = self.needs(x);
        Ok(self.push(out, Op::Upsample { x, factor }, needs))
    }

    /// Mean per-pixel softmax loss. Returns the scalar loss node and the
    /// class probabilities.
    pub fn softmax_ce(&mut self, logits: Var, labels: &Tensor) -> Result<(Var, Tensor)> {
        self.check(logits)?;
        let (loss, probs) = ops::softmax_ce(self.value(logits), labels)?;
        let needs = self.needs(logits);
        let var = self.push(
            Tensor::scalar(loss),
            Op::SoftmaxCe {
                logits,
                labels: labels.clone(),
                probs: probs.clone(),
            },
            needs,
        );
        Ok((var, probs))
    }

    /// Elementwise product of equally shaped tensors.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.check(a)?;
        self.check(b)?;
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(TensorError::ShapeMismatch {
                op: "mul",
                lhs: ta.shape().to_vec(),
                rhs: tb.shape().to_vec(),
            });
        }
        let out = ops::mul_mask(ta, tb.data());
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(out, Op::Mul { a, b }, needs))
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        self.check(x)?;
        let out = Tensor::scalar(self.value(x).sum());
        let needs = self.needs(x);
        Ok(self.push(out, Op::Sum { x }, needs))
    }

    /// Reverse sweep from a scalar node. Every `param` reachable from `loss`
    /// gets a gradient buffer of its own shape.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients> {
        self.check(loss)?;
        if self.consumed {
            return Err(TensorError::BackwardConsumed);
        }
        let loss_shape = self.value(loss).shape().to_vec();
        if loss_shape.iter().product::<usize>() != 1 {
            return Err(TensorError::NonScalarLoss(loss_shape));
        }
        self.consumed = true;

        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::full(loss_shape, 1.0));

        for idx in (0..=loss.0).rev() {
            let Some(grad) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let mut send = |var: Var, g: Tensor| accumulate(&mut grads[var.0], g);
            match &node.op {
                Op::Leaf => {
                    grads[idx] = Some(grad);
                }
                Op::Conv2d { x, w, b, spec } => {
                    let need_dx = self.nodes[x.0].needs_grad;
                    let (dx, dw, db) = ops::conv2d_backward(
                        &self.nodes[x.0].value,
                        &self.nodes[w.0].value,
                        &self.nodes[b.0].value,
                        *spec,
                        &grad,
                        need_dx,
                    )?;
                    if let Some(dx) = dx {
                        send(*x, dx);
                    }
                    if self.nodes[w.0].needs_grad {
                        send(*w, dw);
                    }
                    if self.nodes[b.0].needs_grad {
                        send(*b, db);
                    }
                }
                Op::Relu { x } => {
                    send(*x, ops::relu_backward(&self.nodes[x.0].value, &grad));
                }
                Op::MaxPool { x, argmax } => {
                    let shape = self.nodes[x.0].value.shape();
                    send(*x, ops::maxpool2d_backward(shape, argmax, &grad));
                }
                Op::Concat { xs } => {
                    let channels: Vec<usize> =
                        xs.iter().map(|v| self.nodes[v.0].value.shape()[1]).collect();
                    for (v, g) in xs.iter().zip(ops::split_channels(&grad, &channels)) {
                        if self.nodes[v.0].needs_grad {
                            send(*v, g);
                        }
                    }
                }
                Op::Dropout { x, mask } => {
                    send(*x, ops::mul_mask(&grad, mask));
                }
                Op::Upsample { x, factor } => {
                    let shape = self.nodes[x.0].value.shape();
                    send(*x, ops::upsample_bilinear_backward(shape, *factor, &grad));
                }
                Op::SoftmaxCe {
                    logits,
                    labels,
                    probs,
                } => {
                    let upstream = grad.data()[0];
                    send(*logits, ops::softmax_ce_backward(probs, labels, upstream));
                }
                Op::Mul { a, b } => {
                    if self.nodes[a.0].needs_grad {
                        send(*a, ops::mul_mask(&grad, self.nodes[b.0].value.data()));
                    }
                    if self.nodes[b.0].needs_grad {
                        send(*b, ops::mul_mask(&grad, self.nodes[a.0].value.data()));
                    }
                }
                Op::Sum { x } => {
                    let shape = self.nodes[x.0].value.shape().to_vec();
                    send(*x, Tensor::full(shape, grad.data()[0]));
                }
            }
        }
        Ok(Gradients { grads })
    }
}

fn accumulate(slot: &mut Option<Tensor>, g: Tensor) {
    match slot {
        Some(existing) => {
            for (a, b) in existing.data_mut().iter_mut().zip(g.data()) {
                *a += b;
            }
        }
        None => *slot = Some(g),
    }
}
