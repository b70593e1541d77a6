use egonet_core::data::Sample;
use egonet_core::eval::{
    aop_baseline, average_precision, center_prior, constant_map, default_thresholds, evaluate_dataset,
    exact_thresholds, max_f_score, point_to_mask, pr_curve, Aggregation, EvalReport,
};
use egonet_core::train::leave_one_out_splits;
use egonet_core::{BinaryMask, Plane};
use egonet_tensor::Tensor;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A small set of images with scores drawn from a coarse grid, so ties occur.
fn instance(rng: &mut ChaCha8Rng) -> (Vec<Plane>, Vec<BinaryMask>) {
    let images = rng.random_range(1..=3);
    let mut budget = 16;
    let (mut preds, mut gts) = (Vec::new(), Vec::new());
    for i in 0..images {
        let max = budget - (images - 1 - i);
        let w = rng.random_range(1..=max.min(4));
        let h = rng.random_range(1..=(max / w).min(4));
        budget -= w * h;
        let levels = rng.random_range(2..=12);
        preds.push(Plane::from_fn(w, h, |_, _| rng.random_range(0..=levels) as f64 / levels as f64));
        gts.push(BinaryMask::from_fn(w, h, |_, _| rng.random_bool(0.35)));
    }
    (preds, gts)
}

struct Oracle {
    thresholds: Vec<f64>,
    precision: Vec<f64>,
    recall: Vec<f64>,
    mf: f64,
    ap: f64,
}

/// Direct counting at every distinct score, and average precision from the
/// ranked pixel list with interpolated precision.
fn oracle(preds: &[Plane], gts: &[BinaryMask]) -> Oracle {
    let pixels: Vec<(f64, bool)> = preds
        .iter()
        .zip(gts)
        .flat_map(|(p, g)| p.data().iter().copied().zip(g.data().iter().copied()))
        .collect();
    let positives = pixels.iter().filter(|p| p.1).count();
    let mut thresholds: Vec<f64> = pixels.iter().map(|p| p.0).collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let (mut precision, mut recall, mut mf) = (Vec::new(), Vec::new(), 0.0f64);
    for &t in &thresholds {
        let tp = pixels.iter().filter(|p| p.0 >= t && p.1).count();
        let fp = pixels.iter().filter(|p| p.0 >= t && !p.1).count();
        let p = if tp + fp == 0 { 1.0 } else { tp as f64 / (tp + fp) as f64 };
        let r = if positives == 0 { 0.0 } else { tp as f64 / positives as f64 };
        precision.push(p);
        recall.push(r);
        if p + r > 0.0 {
            mf = mf.max(2.0 * p * r / (p + r));
        }
    }

    // ranks: descending score, tied pixels enter together
    let mut ranked = pixels.clone();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut points: Vec<(f64, f64)> = Vec::new();
    let (mut tp, mut seen, mut i) = (0usize, 0usize, 0usize);
    while i < ranked.len() {
        let s = ranked[i].0;
        while i < ranked.len() && ranked[i].0 == s {
            seen += 1;
            tp += ranked[i].1 as usize;
            i += 1;
        }
        let r = if positives == 0 { 0.0 } else { tp as f64 / positives as f64 };
        points.push((r, tp as f64 / seen as f64));
    }
    let mut ap = 0.0;
    let mut prev_r = 0.0;
    for k in 0..points.len() {
        let best = points[k..].iter().map(|p| p.1).fold(0.0, f64::max);
        ap += (points[k].0 - prev_r) * best;
        prev_r = points[k].0;
    }
    Oracle {
        thresholds,
        precision,
        recall,
        mf,
        ap,
    }
}

#[test]
fn curves_match_brute_force_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..300 {
        let (preds, gts) = instance(&mut rng);
        let o = oracle(&preds, &gts);
        let curve = pr_curve(&preds, &gts, &exact_thresholds(&preds)).unwrap();
        assert_eq!(curve.thresholds, o.thresholds, "case {case}");
        for i in 0..o.thresholds.len() {
            assert!((curve.precision[i] - o.precision[i]).abs() <= 1e-12, "case {case}");
            assert!((curve.recall[i] - o.recall[i]).abs() <= 1e-12, "case {case}");
        }
        assert!((max_f_score(&curve) - o.mf).abs() <= 1e-12, "case {case}");
        assert!(
            (average_precision(&curve) - o.ap).abs() <= 1e-12,
            "case {case}: {} vs {}",
            average_precision(&curve),
            o.ap
        );
    }
}

#[test]
fn worked_two_by_two() {
    let pred = Plane::new(2, 2, vec![0.9, 0.6, 0.4, 0.1]).unwrap();
    let gt = BinaryMask::new(2, 2, vec![false, true, false, false]).unwrap();
    let curve = pr_curve(&[pred.clone()], &[gt.clone()], &[0.5, 0.7]).unwrap();
    assert_eq!((curve.precision[0], curve.recall[0]), (0.5, 1.0));
    assert_eq!((curve.precision[1], curve.recall[1]), (0.0, 0.0));
    let exact = pr_curve(&[pred.clone()], &[gt.clone()], &exact_thresholds(&[pred.clone()])).unwrap();
    assert!((max_f_score(&exact) - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(average_precision(&exact), 0.5);
    let o = oracle(&[pred], &[gt]);
    assert_eq!((o.ap, o.mf), (0.5, 2.0 / 3.0));
}

#[test]
fn perfect_prediction_scores_one() {
    let gt = BinaryMask::from_fn(5, 4, |x, y| (x + y) % 3 == 0);
    let pred = gt.to_plane();
    let curve = pr_curve(&[pred], &[gt], &default_thresholds(101)).unwrap();
    for i in 1..101 {
        assert_eq!((curve.precision[i], curve.recall[i]), (1.0, 1.0));
    }
    assert_eq!(max_f_score(&curve), 1.0);
    assert_eq!(average_precision(&curve), 1.0);
}

#[test]
fn constant_half_gives_closed_form_mf() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let gts: Vec<BinaryMask> = (0..3)
            .map(|_| BinaryMask::from_fn(9, 7, |_, _| rng.random_bool(0.3)))
            .collect();
        let total = 3 * 63;
        let q = gts.iter().map(|g| g.count()).sum::<usize>() as f64 / total as f64;
        if q == 0.0 {
            continue;
        }
        let preds = vec![constant_map(7, 9, 0.5); 3];
        let curve = pr_curve(&preds, &gts, &default_thresholds(101)).unwrap();
        assert!((max_f_score(&curve) - 2.0 * q / (1.0 + q)).abs() < 1e-12);
    }
}

#[test]
fn random_scores_give_ap_near_base_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for q in [0.1, 0.3, 0.5] {
        let pred = Plane::from_fn(100, 100, |_, _| rng.random::<f64>());
        let gt = BinaryMask::from_fn(100, 100, |_, _| rng.random_bool(q));
        let rate = gt.count() as f64 / 1e4;
        let curve = pr_curve(&[pred.clone()], &[gt], &exact_thresholds(&[pred])).unwrap();
        assert!((average_precision(&curve) - rate).abs() < 0.02, "q {q}");
    }
}

#[test]
fn empty_ground_truth_scores_zero() {
    let pred = Plane::from_fn(4, 4, |x, _| x as f64 / 4.0);
    let curve = pr_curve(&[pred], &[BinaryMask::empty(4, 4)], &default_thresholds(11)).unwrap();
    assert!(curve.recall.iter().all(|&r| r == 0.0));
    assert_eq!(max_f_score(&curve), 0.0);
    assert_eq!(average_precision(&curve), 0.0);
}

#[test]
fn size_mismatch_rejected() {
    let p = Plane::filled(3, 3, 0.5);
    assert!(pr_curve(&[p], &[BinaryMask::empty(3, 2)], &[0.5]).is_err());
}

fn instance_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (1usize..=16).prop_flat_map(|n| (prop::collection::vec(0.0..=1.0f64, n), prop::collection::vec(any::<bool>(), n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn mf_invariant_under_squaring((scores, labels) in instance_strategy()) {
        let n = scores.len();
        let p = Plane::new(n, 1, scores.clone()).unwrap();
        let sq = Plane::new(n, 1, scores.iter().map(|v| v * v).collect()).unwrap();
        let gt = BinaryMask::new(n, 1, labels).unwrap();
        let a = pr_curve(&[p.clone()], &[gt.clone()], &exact_thresholds(&[p])).unwrap();
        let b = pr_curve(&[sq.clone()], &[gt], &exact_thresholds(&[sq])).unwrap();
        prop_assert!((max_f_score(&a) - max_f_score(&b)).abs() <= 1e-12);
    }

    #[test]
    fn ap_invariant_under_small_shift((scores, labels) in instance_strategy(), frac in 0.0..1.0f64) {
        let n = scores.len();
        let scores: Vec<f64> = scores.iter().map(|v| v * 0.9).collect();
        let mut sorted = scores.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        let gap = sorted.windows(2).map(|w| w[1] - w[0]).fold(0.1, f64::min);
        let c = frac * gap;
        let p = Plane::new(n, 1, scores.clone()).unwrap();
        let shifted = Plane::new(n, 1, scores.iter().map(|v| v + c).collect()).unwrap();
        let gt = BinaryMask::new(n, 1, labels).unwrap();
        let a = pr_curve(&[p.clone()], &[gt.clone()], &exact_thresholds(&[p])).unwrap();
        let b = pr_curve(&[shifted.clone()], &[gt], &exact_thresholds(&[shifted])).unwrap();
        prop_assert!((average_precision(&a) - average_precision(&b)).abs() <= 1e-12);
    }

    #[test]
    fn recall_never_increases_with_threshold((scores, labels) in instance_strategy(), n_t in 2usize..120) {
        let n = scores.len();
        let p = Plane::new(n, 1, scores).unwrap();
        let gt = BinaryMask::new(n, 1, labels).unwrap();
        for thresholds in [default_thresholds(n_t), exact_thresholds(&[p.clone()])] {
            let c = pr_curve(&[p.clone()], &[gt.clone()], &thresholds).unwrap();
            prop_assert!(c.recall.windows(2).all(|w| w[1] <= w[0]));
            prop_assert!(c.tp.windows(2).all(|w| w[1] <= w[0]));
        }
    }
}

#[test]
fn aop_matches_direct_summation() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let masks: Vec<BinaryMask> = (0..100)
        .map(|_| BinaryMask::from_fn(12, 10, |_, _| rng.random_bool(0.4)))
        .collect();
    let refs: Vec<&BinaryMask> = masks.iter().collect();
    let aop = aop_baseline(&refs).unwrap();
    for y in 0..10 {
        for x in 0..12 {
            let mut s = 0.0;
            for m in &masks {
                if m.get(x, y) {
                    s += 1.0;
                }
            }
            assert!((aop.get(x, y) - s / 100.0).abs() <= 1e-12);
        }
    }
    let single = aop_baseline(&refs[..1]).unwrap();
    assert_eq!(single, masks[0].to_plane());
}

#[test]
fn gaussian_priors() {
    let c = center_prior(21, 31, 0.25).unwrap();
    assert_eq!(c.get(15, 10), 1.0);
    assert_eq!(c.get(3, 4), c.get(27, 16));
    let sigma = 0.25 * ((21.0f64 * 21.0 + 31.0 * 31.0).sqrt());
    let big = center_prior(201, 201, sigma / (201.0f64 * 2f64.sqrt())).unwrap();
    // σ = `sigma` px; a pixel exactly σ away along a row
    let s = sigma.round();
    let expected = (-(s * s) / (2.0 * sigma * sigma)).exp();
    assert!((big.get(100 + s as usize, 100) - expected).abs() < 1e-12, "{} {}", big.get(100 + s as usize, 100), expected);

    let m = point_to_mask((40.0, 30.0), 60.0, 300, 300).unwrap();
    assert_eq!(m.get(40, 30), 1.0);
    assert!((m.get(70, 30) - (-0.5f64).exp()).abs() < 1e-15);
    assert_eq!(m.get(299, 299), 0.0);
    assert!(m.data().iter().all(|&v| v == 0.0 || v >= 1e-4));
}

fn sample(scene: &str, i: usize, mask: &BinaryMask) -> Sample {
    let (w, h) = mask.dims();
    Sample {
        id: format!("{scene}/{i:04}"),
        scene: scene.to_owned(),
        rgb: Tensor::zeros([3, h, w]),
        dhg: Tensor::zeros([3, h, w]),
        label: Tensor::new([h, w], mask.to_plane().into_data()).unwrap(),
        mask: mask.clone(),
    }
}

#[test]
fn aop_on_identical_masks_is_perfect() {
    let mask = BinaryMask::from_fn(8, 8, |x, y| (2..5).contains(&x) && (3..6).contains(&y));
    let scenes: Vec<String> = (0..4).map(|i| format!("s{i}")).collect();
    let samples: Vec<Sample> = scenes
        .iter()
        .flat_map(|s| (0..3).map(|i| sample(s, i, &mask)).collect::<Vec<_>>())
        .collect();
    let splits = leave_one_out_splits(&scenes).unwrap();
    let report = evaluate_dataset(&samples, &splits, &default_thresholds(101), Aggregation::Pooled, |split, train, test| {
        assert!(train.iter().all(|s| s.scene != split.test));
        let masks: Vec<&BinaryMask> = train.iter().map(|s| &s.mask).collect();
        let prior = aop_baseline(&masks)?;
        Ok(vec![prior; test.len()])
    })
    .unwrap();
    assert_eq!(report.scenes.len(), 4);
    assert!(report.scenes.iter().all(|s| s.mf == 1.0));
    assert_eq!(report.mean_mf, 1.0);
}

#[test]
fn report_mean_and_csv_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let thresholds = default_thresholds(101);
    let rows = (0..4)
        .map(|i| {
            let preds: Vec<Plane> = (0..2).map(|_| Plane::from_fn(6, 5, |_, _| rng.random())).collect();
            let gts: Vec<BinaryMask> = (0..2).map(|_| BinaryMask::from_fn(6, 5, |_, _| rng.random_bool(0.3))).collect();
            EvalReport::score_scene(&format!("scene{i}"), &preds, &gts, &thresholds, Aggregation::Pooled).unwrap()
        })
        .collect();
    let report = EvalReport::from_scenes(rows).unwrap();
    let mean: f64 = report.scenes.iter().map(|s| s.mf).sum::<f64>() / 4.0;
    assert_eq!(report.mean_mf, mean);
    let mut csv = Vec::new();
    report.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.starts_with("scene,mf,ap\n"));
    let mut curves = Vec::new();
    report.write_curves_csv(&mut curves).unwrap();
    let back = EvalReport::read_curves_csv(curves.as_slice()).unwrap();
    assert_eq!(back, report);
}
