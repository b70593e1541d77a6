use serde::{Deserialize, Serialize};

use crate::{BinaryMask, Error, Plane, Result};

/// How per-pixel counts combine across images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// TP/FP/FN summed over every pixel of every image.
    #[default]
    Pooled,
    /// Precision and recall computed per image, then averaged.
    PerImage,
}

/// Precision/recall at ascending thresholds. A pixel with `p >= t` counts
/// as positive at threshold `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub thresholds: Vec<f64>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub tp: Vec<u64>,
    pub fp: Vec<u64>,
    pub fn_: Vec<u64>,
}

impl PrCurve {
    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }

    /// F-score at each threshold, 0 where `P + R = 0`.
    pub fn f_scores(&self) -> Vec<f64> {
        self.precision
            .iter()
            .zip(&self.recall)
            .map(|(&p, &r)| if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 })
            .collect()
    }
}

/// `n` uniform thresholds from 0 to 1 inclusive (`n = 101` gives 0.00, 0.01, …).
pub fn default_thresholds(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

/// Every distinct predicted value, ascending.
pub fn exact_thresholds(preds: &[Plane]) -> Vec<f64> {
    let mut v: Vec<f64> = preds.iter().flat_map(|p| p.data().iter().copied()).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn precision_of(tp: u64, fp: u64) -> f64 {
    if tp + fp == 0 {
        1.0
    } else {
        tp as f64 / (tp + fp) as f64
    }
}

fn recall_of(tp: u64, fn_: u64) -> f64 {
    if tp + fn_ == 0 {
        0.0
    } else {
        tp as f64 / (tp + fn_) as f64
    }
}

/// Counts at each threshold for one image: `(tp, fp, positives)`.
fn image_counts(pred: &Plane, gt: &BinaryMask, thresholds: &[f64]) -> (Vec<u64>, Vec<u64>, u64) {
    let n = thresholds.len();
    // hist[k]: pixels whose value clears exactly the first k thresholds
    let mut pos_hist = vec![0u64; n + 1];
    let mut neg_hist = vec![0u64; n + 1];
    let mut positives = 0;
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        let k = thresholds.partition_point(|&t| t <= p);
        if g {
            pos_hist[k] += 1;
            positives += 1;
        } else {
            neg_hist[k] += 1;
        }
    }
    let mut tp = vec![0u64; n];
    let mut fp = vec![0u64; n];
    let (mut acc_tp, mut acc_fp) = (0, 0);
    for i in (0..n).rev() {
        acc_tp += pos_hist[i + 1];
        acc_fp += neg_hist[i + 1];
        tp[i] = acc_tp;
        fp[i] = acc_fp;
    }
    (tp, fp, positives)
}

pub fn pr_curve(preds: &[Plane], gts: &[BinaryMask], thresholds: &[f64]) -> Result<PrCurve> {
    pr_curve_with(preds, gts, thresholds, Aggregation::Pooled)
}

pub fn pr_curve_with(preds: &[Plane], gts: &[BinaryMask], thresholds: &[f64], agg: Aggregation) -> Result<PrCurve> {
    if preds.len() != gts.len() {
        return Err(Error::invalid(
            "PR inputs",
            format!("{} predictions for {} masks", preds.len(), gts.len()),
        ));
    }
    if preds.is_empty() {
        return Err(Error::invalid("PR inputs", "no images"));
    }
    if thresholds.is_empty()
        || thresholds.iter().any(|t| !(0.0..=1.0).contains(t))
        || thresholds.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::invalid(
            "thresholds",
            "need a nonempty strictly ascending list inside [0, 1]",
        ));
    }
    for (i, (p, g)) in preds.iter().zip(gts).enumerate() {
        if p.dims() != g.dims() {
            return Err(Error::invalid(
                "PR inputs",
                format!("image {i}: prediction {:?} vs mask {:?}", p.dims(), g.dims()),
            ));
        }
    }
    let n = thresholds.len();
    let mut tp = vec![0u64; n];
    let mut fp = vec![0u64; n];
    let mut positives = 0u64;
    let mut p_sum = vec![0.0; n];
    let mut r_sum = vec![0.0; n];
    for (p, g) in preds.iter().zip(gts) {
        let (itp, ifp, ipos) = image_counts(p, g, thresholds);
        for i in 0..n {
            tp[i] += itp[i];
            fp[i] += ifp[i];
            p_sum[i] += precision_of(itp[i], ifp[i]);
            r_sum[i] += recall_of(itp[i], ipos - itp[i]);
        }
        positives += ipos;
    }
    let fn_: Vec<u64> = tp.iter().map(|&t| positives - t).collect();
    let (precision, recall) = match agg {
        Aggregation::Pooled => (
            (0..n).map(|i| precision_of(tp[i], fp[i])).collect(),
            (0..n).map(|i| recall_of(tp[i], fn_[i])).collect(),
        ),
        Aggregation::PerImage => {
            let m = preds.len() as f64;
            (p_sum.iter().map(|s| s / m).collect(), r_sum.iter().map(|s| s / m).collect())
        }
    };
    Ok(PrCurve {
        thresholds: thresholds.to_vec(),
        precision,
        recall,
        tp,
        fp,
        fn_,
    })
}

/// Maximum F-score over the curve's thresholds.
pub fn max_f_score(pr: &PrCurve) -> f64 {
    pr.f_scores().into_iter().fold(0.0, f64::max)
}

/// Step integration over recall with the precision envelope
/// `P̂ᵢ = max_{j ≤ i} Pⱼ` (best precision at recall ≥ Rᵢ):
/// `AP = Σᵢ (Rᵢ − Rᵢ₊₁)·P̂ᵢ` with `R_{n} = 0` past the highest threshold.
pub fn average_precision(pr: &PrCurve) -> f64 {
    let n = pr.len();
    let mut envelope = 0.0f64;
    let mut ap = 0.0;
    for i in 0..n {
        envelope = envelope.max(pr.precision[i]);
        let next = if i + 1 < n { pr.recall[i + 1] } else { 0.0 };
        ap += (pr.recall[i] - next) * envelope;
    }
    ap
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked() -> (Plane, BinaryMask) {
        let p = Plane::new(2, 2, vec![0.9, 0.6, 0.4, 0.1]).unwrap();
        let g = BinaryMask::new(2, 2, vec![false, true, false, false]).unwrap();
        (p, g)
    }

    #[test]
    fn worked_example() {
        let (p, g) = worked();
        let pr = pr_curve(&[p], &[g], &[0.5, 0.7]).unwrap();
        assert_eq!(pr.precision, [0.5, 0.0]);
        assert_eq!(pr.recall, [1.0, 0.0]);
    }

    #[test]
    fn worked_example_metrics() {
        let (p, g) = worked();
        let pr = pr_curve(&[p], &[g], &default_thresholds(101)).unwrap();
        assert!((max_f_score(&pr) - 2.0 / 3.0).abs() < 1e-15);
        assert!((average_precision(&pr) - 0.5).abs() < 1e-15);
        let f = pr.f_scores();
        for (t, f) in pr.thresholds.iter().zip(f) {
            if *t > 0.4 + 1e-12 && *t <= 0.6 {
                assert!((f - 2.0 / 3.0).abs() < 1e-15, "t={t}");
            }
        }
    }

    #[test]
    fn threshold_grid() {
        let t = default_thresholds(101);
        assert_eq!(t.len(), 101);
        assert_eq!(t[0], 0.0);
        assert_eq!(t[50], 0.5);
        assert_eq!(t[100], 1.0);
    }

    #[test]
    fn empty_gt_scores_zero() {
        let p = Plane::new(2, 1, vec![0.3, 0.8]).unwrap();
        let g = BinaryMask::empty(2, 1);
        let pr = pr_curve(&[p], &[g], &default_thresholds(11)).unwrap();
        assert!(pr.recall.iter().all(|&r| r == 0.0));
        assert_eq!(max_f_score(&pr), 0.0);
        assert_eq!(average_precision(&pr), 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        let (p, g) = worked();
        let small = BinaryMask::empty(1, 1);
        assert!(pr_curve(&[p.clone()], &[small], &[0.5]).is_err());
        assert!(pr_curve(&[p.clone()], &[g.clone()], &[0.5, 0.5]).is_err());
        assert!(pr_curve(&[p], &[], &[0.5]).is_err());
    }

    #[test]
    fn per_image_averages() {
        let a = Plane::new(2, 1, vec![1.0, 0.0]).unwrap();
        let b = Plane::new(2, 1, vec![1.0, 1.0]).unwrap();
        let ga = BinaryMask::new(2, 1, vec![true, false]).unwrap();
        let gb = BinaryMask::new(2, 1, vec![true, false]).unwrap();
        let pr = pr_curve_with(&[a, b], &[ga, gb], &[0.5], Aggregation::PerImage).unwrap();
        assert_eq!(pr.precision, [0.75]);
        assert_eq!(pr.recall, [1.0]);
    }
}
