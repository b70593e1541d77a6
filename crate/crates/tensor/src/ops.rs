//! Forward kernels and their adjoints.
//!
//! Every reduction runs in a fixed sequential order so that results are
//! bit-reproducible. In particular the convolution accumulates each output
//! element over `(c, ky, kx)` in lexicographic order starting from `0.0` and
//! adds the bias last, which is the order of the direct nested-loop sum.

use rand::Rng;

use crate::{Result, Tensor, TensorError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conv2dSpec {
    pub stride: usize,
    pub pad: usize,
    pub dilation: usize,
}

impl Default for Conv2dSpec {
    fn default() -> Self {
        Conv2dSpec {
            stride: 1,
            pad: 0,
            dilation: 1,
        }
    }
}

impl Conv2dSpec {
    /// "Same" padding for an odd kernel at stride 1.
    pub fn same(kernel: usize, dilation: usize) -> Self {
        Conv2dSpec {
            stride: 1,
            pad: dilation * (kernel - 1) / 2,
            dilation,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.stride == 0 || self.dilation == 0 {
            return Err(TensorError::invalid(
                "conv2d",
                format!(
                    "stride and dilation must be >= 1 (stride {}, dilation {})",
                    self.stride, self.dilation
                ),
            ));
        }
        Ok(())
    }

    /// Output extent along one axis, `None` when the dilated kernel does not fit.
    pub fn output_len(&self, input: usize, kernel: usize) -> Option<usize> {
        let span = self.dilation * (kernel - 1) + 1;
        let padded = input + 2 * self.pad;
        (padded >= span).then(|| (padded - span) / self.stride + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolSpec {
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
}

impl PoolSpec {
    pub fn new(kernel: usize, stride: usize, pad: usize) -> Self {
        PoolSpec {
            kernel,
            stride,
            pad,
        }
    }

    pub fn output_len(&self, input: usize) -> Option<usize> {
        let padded = input + 2 * self.pad;
        (self.kernel >= 1 && self.stride >= 1 && padded >= self.kernel && self.pad < self.kernel)
            .then(|| (padded - self.kernel) / self.stride + 1)
    }
}

struct ConvGeom {
    batch: usize,
    in_c: usize,
    in_h: usize,
    in_w: usize,
    out_c: usize,
    k_h: usize,
    k_w: usize,
    out_h: usize,
    out_w: usize,
    spec: Conv2dSpec,
}

impl ConvGeom {
    fn new(x: &Tensor, w: &Tensor, b: &Tensor, spec: Conv2dSpec) -> Result<Self> {
        spec.validate()?;
        let (batch, in_c, in_h, in_w) = x.dims4("conv2d")?;
        let (out_c, w_c, k_h, k_w) = w.dims4("conv2d")?;
        if w_c != in_c {
            return Err(TensorError::ShapeMismatch {
                op: "conv2d",
                lhs: x.shape().to_vec(),
                rhs: w.shape().to_vec(),
            });
        }
        if b.shape() != [out_c] {
            return Err(TensorError::ShapeMismatch {
                op: "conv2d bias",
                lhs: w.shape().to_vec(),
                rhs: b.shape().to_vec(),
            });
        }
        let (Some(out_h), Some(out_w)) = (spec.output_len(in_h, k_h), spec.output_len(in_w, k_w))
        else {
            return Err(TensorError::ShapeMismatch {
                op: "conv2d (kernel larger than padded input)",
                lhs: x.shape().to_vec(),
                rhs: w.shape().to_vec(),
            });
        };
        Ok(ConvGeom {
            batch,
            in_c,
            in_h,
            in_w,
            out_c,
            k_h,
            k_w,
            out_h,
            out_w,
            spec,
        })
    }

    fn rows(&self) -> usize {
        self.in_c * self.k_h * self.k_w
    }

    fn cols(&self) -> usize {
        self.out_h * self.out_w
    }

    /// Source coordinate of tap `k` for output `o`, if inside the image.
    #[inline]
    fn src(&self, o: usize, k: usize, len: usize) -> Option<usize> {
        let pos = (o * self.spec.stride + k * self.spec.dilation) as isize - self.spec.pad as isize;
        (pos >= 0 && (pos as usize) < len).then_some(pos as usize)
    }

    /// Unfolds one image into a `rows × cols` patch matrix.
    fn im2col(&self, image: &[f64], cols: &mut [f64]) {
        let n = self.cols();
        for c in 0..self.in_c {
            let plane = &image[c * self.in_h * self.in_w..(c + 1) * self.in_h * self.in_w];
            for ky in 0..self.k_h {
                for kx in 0..self.k_w {
                    let row = (c * self.k_h + ky) * self.k_w + kx;
                    let dst = &mut cols[row * n..(row + 1) * n];
                    for oy in 0..self.out_h {
                        let line = &mut dst[oy * self.out_w..(oy + 1) * self.out_w];
                        match self.src(oy, ky, self.in_h) {
                            None => line.fill(0.0),
                            Some(iy) => {
                                let src_row = &plane[iy * self.in_w..(iy + 1) * self.in_w];
                                for (ox, v) in line.iter_mut().enumerate() {
                                    *v = match self.src(ox, kx, self.in_w) {
                                        Some(ix) => src_row[ix],
                                        None => 0.0,
                                    };
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    /// Folds a patch-matrix gradient back onto the image gradient (accumulating).
    fn col2im(&self, cols: &[f64], image: &mut [f64]) {
        let n = self.cols();
        for c in 0..self.in_c {
            let plane = &mut image[c * self.in_h * self.in_w..(c + 1) * self.in_h * self.in_w];
            for ky in 0..self.k_h {
                for kx in 0..self.k_w {
                    let row = (c * self.k_h + ky) * self.k_w + kx;
                    let src = &cols[row * n..(row + 1) * n];
                    for oy in 0..self.out_h {
                        let Some(iy) = self.src(oy, ky, self.in_h) else {
                            continue;
                        };
                        let line = &src[oy * self.out_w..(oy + 1) * self.out_w];
                        let dst_row = &mut plane[iy * self.in_w..(iy + 1) * self.in_w];
                        for (ox, &g) in line.iter().enumerate() {
                            if let Some(ix) = self.src(ox, kx, self.in_w) {
                                dst_row[ix] += g;
                            }
                        }
                    }
                }
            }
        }
    }
}

const TILE: usize = 256;
const OUT_BLOCK: usize = 4;

/// Dot product with eight independent partial sums.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut lanes = [0.0f64; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            lanes[l] += x[l] * y[l];
        }
    }
    lanes.iter().sum::<f64>() + tail
}

/// Output shape of [`conv2d`] without running it.
pub fn conv2d_shape(x: &[usize], w: &[usize], spec: Conv2dSpec) -> Option<Vec<usize>> {
    match (x, w) {
        (&[b, c, h, wd], &[o, wc, kh, kw]) if c == wc => Some(vec![
            b,
            o,
            spec.output_len(h, kh)?,
            spec.output_len(wd, kw)?,
        ]),
        _ => None,
    }
}

/// Direct 2-D cross-correlation with zero padding, stride and dilation.
pub fn conv2d(x: &Tensor, w: &Tensor, b: &Tensor, spec: Conv2dSpec) -> Result<Tensor> {
    let g = ConvGeom::new(x, w, b, spec)?;
    let (k, n) = (g.rows(), g.cols());
    let in_stride = g.in_c * g.in_h * g.in_w;
    let mut out = Tensor::zeros([g.batch, g.out_c, g.out_h, g.out_w]);
    let mut cols = vec![0.0; k * n];
    let (wd, bd) = (w.data(), b.data());
    for bi in 0..g.batch {
        g.im2col(&x.data()[bi * in_stride..(bi + 1) * in_stride], &mut cols);
        let out_b = &mut out.data_mut()[bi * g.out_c * n..(bi + 1) * g.out_c * n];
        // Every output element accumulates its taps in order kk = 0, 1, …
        // from zero and adds the bias last; the blocking below only changes
        // which elements are in flight together.
        for t0 in (0..n).step_by(TILE) {
            let t1 = (t0 + TILE).min(n);
            let len = t1 - t0;
            let mut o = 0;
            while o < g.out_c {
                let ob = (g.out_c - o).min(OUT_BLOCK);
                let mut acc = [[0.0f64; TILE]; OUT_BLOCK];
                for kk in 0..k {
                    let col = &cols[kk * n + t0..kk * n + t1];
                    for (j, a) in acc.iter_mut().enumerate().take(ob) {
                        let wk = wd[(o + j) * k + kk];
                        for (a, &c) in a[..len].iter_mut().zip(col) {
                            *a += wk * c;
                        }
                    }
                }
                for (j, a) in acc.iter().enumerate().take(ob) {
                    let dst = &mut out_b[(o + j) * n + t0..(o + j) * n + t1];
                    for (d, &a) in dst.iter_mut().zip(&a[..len]) {
                        *d = a + bd[o + j];
                    }
                }
                o += ob;
            }
        }
    }
    Ok(out)
}

/// Gradients of [`conv2d`]: `(dx, dw, db)`; `dx` is skipped when not needed.
pub fn conv2d_backward(
    x: &Tensor,
    w: &Tensor,
    b: &Tensor,
    spec: Conv2dSpec,
    grad_out: &Tensor,
    need_dx: bool,
) -> Result<(Option<Tensor>, Tensor, Tensor)> {
    let g = ConvGeom::new(x, w, b, spec)?;
    let (k, n) = (g.rows(), g.cols());
    let in_stride = g.in_c * g.in_h * g.in_w;
    let mut dx = need_dx.then(|| Tensor::zeros(x.shape().to_vec()));
    let mut dw = Tensor::zeros(w.shape().to_vec());
    let mut db = Tensor::zeros(b.shape().to_vec());
    let mut cols = vec![0.0; k * n];
    let mut dcols = vec![0.0; k * n];
    let wd = w.data();
    for bi in 0..g.batch {
        g.im2col(&x.data()[bi * in_stride..(bi + 1) * in_stride], &mut cols);
        let go = &grad_out.data()[bi * g.out_c * n..(bi + 1) * g.out_c * n];
        for o in 0..g.out_c {
            let go_row = &go[o * n..(o + 1) * n];
            db.data_mut()[o] += go_row.iter().sum::<f64>();
            let dw_row = &mut dw.data_mut()[o * k..(o + 1) * k];
            for (kk, dwv) in dw_row.iter_mut().enumerate() {
                *dwv += dot(&cols[kk * n..(kk + 1) * n], go_row);
            }
        }
        if let Some(dx) = dx.as_mut() {
            for t0 in (0..n).step_by(TILE) {
                let t1 = (t0 + TILE).min(n);
                for kk in 0..k {
                    let dst = &mut dcols[kk * n + t0..kk * n + t1];
                    dst.fill(0.0);
                    for o in 0..g.out_c {
                        let wk = wd[o * k + kk];
                        if wk == 0.0 {
                            continue;
                        }
                        for (d, &gv) in dst.iter_mut().zip(&go[o * n + t0..o * n + t1]) {
                            *d += wk * gv;
                        }
                    }
                }
            }
            g.col2im(&dcols, &mut dx.data_mut()[bi * in_stride..(bi + 1) * in_stride]);
        }
    }
    Ok((dx, dw, db))
}

pub fn relu(x: &Tensor) -> Tensor {
    x.map(|v| v.max(0.0))
}

pub fn relu_backward(x: &Tensor, grad_out: &Tensor) -> Tensor {
    let mut g = grad_out.clone();
    for (gv, &xv) in g.data_mut().iter_mut().zip(x.data()) {
        if xv <= 0.0 {
            *gv = 0.0;
        }
    }
    g
}

/// Window maxima with `-inf` padding; also returns the flat input index of
/// each selected maximum (first occurrence wins on ties).
pub fn maxpool2d(x: &Tensor, spec: PoolSpec) -> Result<(Tensor, Vec<usize>)> {
    let (b, c, h, w) = x.dims4("maxpool2d")?;
    let (Some(oh), Some(ow)) = (spec.output_len(h), spec.output_len(w)) else {
        return Err(TensorError::invalid(
            "maxpool2d",
            format!("invalid window {spec:?} for input {:?}", x.shape()),
        ));
    };
    let mut out = Tensor::zeros([b, c, oh, ow]);
    let mut argmax = Vec::with_capacity(b * c * oh * ow);
    let xd = x.data();
    let od = out.data_mut();
    let mut oi = 0;
    for plane in 0..b * c {
        let base = plane * h * w;
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = f64::NEG_INFINITY;
                let mut best_idx = usize::MAX;
                for ky in 0..spec.kernel {
                    let iy = (oy * spec.stride + ky) as isize - spec.pad as isize;
                    if iy < 0 || iy as usize >= h {
                        continue;
                    }
                    for kx in 0..spec.kernel {
                        let ix = (ox * spec.stride + kx) as isize - spec.pad as isize;
                        if ix < 0 || ix as usize >= w {
                            continue;
                        }
                        let idx = base + iy as usize * w + ix as usize;
                        if best_idx == usize::MAX || xd[idx] > best {
                            best = xd[idx];
                            best_idx = idx;
                        }
                    }
                }
                od[oi] = best;
                argmax.push(best_idx);
                oi += 1;
            }
        }
    }
    Ok((out, argmax))
}

pub fn maxpool2d_backward(input_shape: &[usize], argmax: &[usize], grad_out: &Tensor) -> Tensor {
    let mut dx = Tensor::zeros(input_shape.to_vec());
    let d = dx.data_mut();
    for (&idx, &g) in argmax.iter().zip(grad_out.data()) {
        d[idx] += g;
    }
    dx
}

/// Stacks tensors along axis 1, preserving input order.
pub fn concat_channels(xs: &[&Tensor]) -> Result<Tensor> {
    let first = xs.first().ok_or(TensorError::EmptyConcat)?;
    let (b, _, h, w) = first.dims4("concat_channels")?;
    let mut total_c = 0;
    for t in xs {
        let (tb, tc, th, tw) = t.dims4("concat_channels")?;
        if (tb, th, tw) != (b, h, w) {
            return Err(TensorError::ShapeMismatch {
                op: "concat_channels",
                lhs: first.shape().to_vec(),
                rhs: t.shape().to_vec(),
            });
        }
        total_c += tc;
    }
    let plane = h * w;
    let mut data = Vec::with_capacity(b * total_c * plane);
    for bi in 0..b {
        for t in xs {
            let tc = t.shape()[1];
            data.extend_from_slice(&t.data()[bi * tc * plane..(bi + 1) * tc * plane]);
        }
    }
    Tensor::new([b, total_c, h, w], data)
}

/// Splits a channel-concatenated gradient back into per-input pieces.
pub fn split_channels(grad: &Tensor, channels: &[usize]) -> Vec<Tensor> {
    let (b, total_c, h, w) = (
        grad.shape()[0],
        grad.shape()[1],
        grad.shape()[2],
        grad.shape()[3],
    );
    let plane = h * w;
    let mut offset = 0;
    channels
        .iter()
        .map(|&c| {
            let mut data = Vec::with_capacity(b * c * plane);
            for bi in 0..b {
                let start = (bi * total_c + offset) * plane;
                data.extend_from_slice(&grad.data()[start..start + c * plane]);
            }
            offset += c;
            Tensor::new([b, c, h, w], data).expect("split shape")
        })
        .collect()
}

/// Inverted-dropout mask: each entry is `0` with probability `rate`, else `1/(1-rate)`.
pub fn dropout_mask<R: Rng + ?Sized>(len: usize, rate: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&rate) {
        return Err(TensorError::invalid(
            "dropout",
            format!("rate must lie in [0, 1), got {rate}"),
        ));
    }
    if rate == 0.0 {
        return Ok(vec![1.0; len]);
    }
    let keep = 1.0 / (1.0 - rate);
    Ok((0..len)
        .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
        .collect())
}

pub fn mul_mask(x: &Tensor, mask: &[f64]) -> Tensor {
    let mut out = x.clone();
    for (v, m) in out.data_mut().iter_mut().zip(mask) {
        *v *= m;
    }
    out
}

/// Per-axis interpolation table for align-corners resampling:
/// `(lower index, upper index, upper weight)` for each output position.
fn align_corners_table(input: usize, output: usize) -> Vec<(usize, usize, f64)> {
    (0..output)
        .map(|o| {
            if input == 1 || output == 1 {
                return (0, 0, 0.0);
            }
            let src = (o * (input - 1)) as f64 / (output - 1) as f64;
            let lo = (src.floor() as usize).min(input - 1);
            let hi = (lo + 1).min(input - 1);
            (lo, hi, src - lo as f64)
        })
        .collect()
}

/// Align-corners bilinear upsampling by an integer factor.
pub fn upsample_bilinear(x: &Tensor, factor: usize) -> Result<Tensor> {
    if factor == 0 {
        return Err(TensorError::invalid("upsample_bilinear", "factor must be >= 1"));
    }
    let (b, c, h, w) = x.dims4("upsample_bilinear")?;
    if factor == 1 {
        return Ok(x.clone());
    }
    let (oh, ow) = (h * factor, w * factor);
    let ty = align_corners_table(h, oh);
    let tx = align_corners_table(w, ow);
    let mut out = Tensor::zeros([b, c, oh, ow]);
    let xd = x.data();
    let od = out.data_mut();
    for plane in 0..b * c {
        let src = &xd[plane * h * w..(plane + 1) * h * w];
        let dst = &mut od[plane * oh * ow..(plane + 1) * oh * ow];
        for (oy, &(y0, y1, ly)) in ty.iter().enumerate() {
            for (ox, &(x0, x1, lx)) in tx.iter().enumerate() {
                let top = (1.0 - lx) * src[y0 * w + x0] + lx * src[y0 * w + x1];
                let bottom = (1.0 - lx) * src[y1 * w + x0] + lx * src[y1 * w + x1];
                dst[oy * ow + ox] = (1.0 - ly) * top + ly * bottom;
            }
        }
    }
    Ok(out)
}

pub fn upsample_bilinear_backward(input_shape: &[usize], factor: usize, grad_out: &Tensor) -> Tensor {
    if factor == 1 {
        return grad_out.clone();
    }
    let (b, c, h, w) = (input_shape[0], input_shape[1], input_shape[2], input_shape[3]);
    let (oh, ow) = (h * factor, w * factor);
    let ty = align_corners_table(h, oh);
    let tx = align_corners_table(w, ow);
    let mut dx = Tensor::zeros(input_shape.to_vec());
    let gd = grad_out.data();
    let dd = dx.data_mut();
    for plane in 0..b * c {
        let g = &gd[plane * oh * ow..(plane + 1) * oh * ow];
        let d = &mut dd[plane * h * w..(plane + 1) * h * w];
        for (oy, &(y0, y1, ly)) in ty.iter().enumerate() {
            for (ox, &(x0, x1, lx)) in tx.iter().enumerate() {
                let gv = g[oy * ow + ox];
                let top = (1.0 - ly) * gv;
                let bottom = ly * gv;
                d[y0 * w + x0] += (1.0 - lx) * top;
                d[y0 * w + x1] += lx * top;
                d[y1 * w + x0] += (1.0 - lx) * bottom;
                d[y1 * w + x1] += lx * bottom;
            }
        }
    }
    dx
}

/// Per-pixel two-class softmax with mean negative log-likelihood.
///
/// Returns `(loss, probs)` where `probs` has the same `B×2×H×W` layout as the logits.
pub fn softmax_ce(logits: &Tensor, labels: &Tensor) -> Result<(f64, Tensor)> {
    let (b, c, h, w) = logits.dims4("softmax_ce")?;
    if c != 2 || labels.shape() != [b, h, w] {
        return Err(TensorError::ShapeMismatch {
            op: "softmax_ce",
            lhs: logits.shape().to_vec(),
            rhs: labels.shape().to_vec(),
        });
    }
    check_labels(labels)?;
    let plane = h * w;
    let mut probs = Tensor::zeros(logits.shape().to_vec());
    let mut total = 0.0;
    let ld = logits.data();
    let pd = probs.data_mut();
    for bi in 0..b {
        let base = bi * 2 * plane;
        for p in 0..plane {
            let (l0, l1) = (ld[base + p], ld[base + plane + p]);
            let m = l0.max(l1);
            let (e0, e1) = ((l0 - m).exp(), (l1 - m).exp());
            let s = e0 + e1;
            pd[base + p] = e0 / s;
            pd[base + plane + p] = e1 / s;
            let picked = if labels.data()[bi * plane + p] == 1.0 { l1 } else { l0 };
            total -= picked - m - s.ln();
        }
    }
    Ok((total / (b * plane) as f64, probs))
}

fn check_labels(labels: &Tensor) -> Result<()> {
    match labels
        .data()
        .iter()
        .position(|&v| v != 0.0 && v != 1.0)
    {
        Some(index) => Err(TensorError::InvalidLabel {
            index,
            value: labels.data()[index],
        }),
        None => Ok(()),
    }
}

/// Gradient of the mean softmax loss: `(p - onehot) / (B·H·W)`, scaled by `upstream`.
pub fn softmax_ce_backward(probs: &Tensor, labels: &Tensor, upstream: f64) -> Tensor {
    let (b, _, h, w) = (
        probs.shape()[0],
        probs.shape()[1],
        probs.shape()[2],
        probs.shape()[3],
    );
    let plane = h * w;
    let scale = upstream / (b * plane) as f64;
    let mut g = probs.clone();
    let gd = g.data_mut();
    for bi in 0..b {
        let base = bi * 2 * plane;
        for p in 0..plane {
            let label = labels.data()[bi * plane + p];
            gd[base + p] = (gd[base + p] - (1.0 - label)) * scale;
            gd[base + plane + p] = (gd[base + plane + p] - label) * scale;
        }
    }
    g
}
