//! Central finite-difference verification of reverse-mode gradients.

use crate::{Result, Tape, Tensor, Var};

/// Comparison result for one parameter tensor.
#[derive(Debug, Clone)]
pub struct ParamCheck {
    pub param: usize,
    pub max_rel_error: f64,
    pub worst_element: usize,
    pub analytic: f64,
    pub numeric: f64,
    /// Elements whose relative error exceeds the tolerance.
    pub flagged: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub tol: f64,
    pub params: Vec<ParamCheck>,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.params
            .iter()
            .map(|p| p.max_rel_error)
            .fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.params.iter().all(|p| p.flagged.is_empty())
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-12)
}

/// Compares the tape gradient of `build` against `(f(θ+ε) − f(θ−ε)) / 2ε`
/// for every element of every parameter.
///
/// `build` receives a fresh tape and the parameter variables, and must
/// return a scalar loss. It is called `1 + 2·Σ numel` times and has to be
/// deterministic (seed any dropout stream inside the closure).
pub fn grad_check<F>(build: F, params: &[Tensor], eps: f64, tol: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let evaluate = |values: &[Tensor]| -> Result<f64> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = values.iter().map(|v| tape.param(v.clone())).collect();
        let loss = build(&mut tape, &vars)?;
        Ok(tape.value(loss).data()[0])
    };

    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|v| tape.param(v.clone())).collect();
    let loss = build(&mut tape, &vars)?;
    let grads = tape.backward(loss)?;

    let mut work: Vec<Tensor> = params.to_vec();
    let mut report = GradCheckReport {
        tol,
        params: Vec::with_capacity(params.len()),
    };
    for (pi, var) in vars.iter().enumerate() {
        let zeros = Tensor::zeros(params[pi].shape().to_vec());
        let analytic = grads.get(*var).unwrap_or(&zeros);
        let mut check = ParamCheck {
            param: pi,
            max_rel_error: 0.0,
            worst_element: 0,
            analytic: 0.0,
            numeric: 0.0,
            flagged: Vec::new(),
        };
        for e in 0..params[pi].numel() {
            let original = params[pi].data()[e];
            work[pi].data_mut()[e] = original + eps;
            let plus = evaluate(&work)?;
            work[pi].data_mut()[e] = original - eps;
            let minus = evaluate(&work)?;
            work[pi].data_mut()[e] = original;

            let numeric = (plus - minus) / (2.0 * eps);
            let a = analytic.data()[e];
            let rel = relative_error(a, numeric);
            if rel > tol {
                check.flagged.push(e);
            }
            if rel > check.max_rel_error || e == 0 {
                check.max_rel_error = rel;
                check.worst_element = e;
                check.analytic = a;
                check.numeric = numeric;
            }
        }
        report.params.push(check);
    }
    Ok(report)
}
