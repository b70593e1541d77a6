use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::metrics::{average_precision, max_f_score, pr_curve_with, Aggregation, PrCurve};
use crate::data::Sample;
use crate::train::Split;
use crate::{BinaryMask, Error, Plane, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneResult {
    pub scene: String,
    pub mf: f64,
    pub ap: f64,
    pub curve: PrCurve,
}

/// Per-scene metrics and their arithmetic means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scenes: Vec<SceneResult>,
    pub mean_mf: f64,
    pub mean_ap: f64,
}

impl EvalReport {
    pub fn from_scenes(scenes: Vec<SceneResult>) -> Result<Self> {
        if scenes.is_empty() {
            return Err(Error::invalid("evaluation", "no scenes"));
        }
        let n = scenes.len() as f64;
        let mean_mf = scenes.iter().map(|s| s.mf).sum::<f64>() / n;
        let mean_ap = scenes.iter().map(|s| s.ap).sum::<f64>() / n;
        Ok(EvalReport {
            scenes,
            mean_mf,
            mean_ap,
        })
    }

    /// Scores one scene's predictions.
    pub fn score_scene(
        scene: &str,
        preds: &[Plane],
        masks: &[BinaryMask],
        thresholds: &[f64],
        agg: Aggregation,
    ) -> Result<SceneResult> {
        let curve = pr_curve_with(preds, masks, thresholds, agg)?;
        Ok(SceneResult {
            scene: scene.to_owned(),
            mf: max_f_score(&curve),
            ap: average_precision(&curve),
            curve,
        })
    }

    /// Counts summed over scenes (all curves share one threshold grid).
    pub fn pooled_curve(&self) -> PrCurve {
        let first = &self.scenes[0].curve;
        let n = first.len();
        let sum = |f: fn(&PrCurve) -> &Vec<u64>| -> Vec<u64> {
            (0..n).map(|i| self.scenes.iter().map(|s| f(&s.curve)[i]).sum()).collect()
        };
        let (tp, fp, fn_) = (sum(|c| &c.tp), sum(|c| &c.fp), sum(|c| &c.fn_));
        let precision = (0..n)
            .map(|i| if tp[i] + fp[i] == 0 { 1.0 } else { tp[i] as f64 / (tp[i] + fp[i]) as f64 })
            .collect();
        let recall = (0..n)
            .map(|i| if tp[i] + fn_[i] == 0 { 0.0 } else { tp[i] as f64 / (tp[i] + fn_[i]) as f64 })
            .collect();
        PrCurve {
            thresholds: first.thresholds.clone(),
            precision,
            recall,
            tp,
            fp,
            fn_,
        }
    }

    /// `scene,mf,ap` rows followed by a `mean` row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "scene,mf,ap")?;
        for s in &self.scenes {
            writeln!(out, "{},{:?},{:?}", s.scene, s.mf, s.ap)?;
        }
        writeln!(out, "mean,{:?},{:?}", self.mean_mf, self.mean_ap)?;
        out.flush()
    }

    /// One row per scene and threshold.
    pub fn write_curves_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "scene,threshold,precision,recall,tp,fp,fn")?;
        for s in &self.scenes {
            let c = &s.curve;
            for i in 0..c.len() {
                writeln!(
                    out,
                    "{},{:?},{:?},{:?},{},{},{}",
                    s.scene, c.thresholds[i], c.precision[i], c.recall[i], c.tp[i], c.fp[i], c.fn_[i]
                )?;
            }
        }
        out.flush()
    }

    /// Inverse of [`write_curves_csv`](Self::write_curves_csv) plus
    /// [`write_csv`](Self::write_csv): rebuilds a report from the curves.
    pub fn read_curves_csv<R: BufRead>(input: R) -> Result<Self> {
        let bad = |line: usize, reason: &str| Error::invalid("curve CSV", format!("line {line}: {reason}"));
        let mut scenes: Vec<(String, PrCurve)> = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| bad(i + 1, &e.to_string()))?;
            if i == 0 {
                if line.trim() != "scene,threshold,precision,recall,tp,fp,fn" {
                    return Err(bad(1, "unexpected header"));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(bad(i + 1, "expected 7 fields"));
            }
            let real = |s: &str| s.parse::<f64>().map_err(|_| bad(i + 1, "bad number"));
            let count = |s: &str| s.parse::<u64>().map_err(|_| bad(i + 1, "bad count"));
            if scenes.last().is_none_or(|(name, _)| name != f[0]) {
                scenes.push((
                    f[0].to_owned(),
                    PrCurve {
                        thresholds: vec![],
                        precision: vec![],
                        recall: vec![],
                        tp: vec![],
                        fp: vec![],
                        fn_: vec![],
                    },
                ));
            }
            let c = &mut scenes.last_mut().expect("pushed").1;
            c.thresholds.push(real(f[1])?);
            c.precision.push(real(f[2])?);
            c.recall.push(real(f[3])?);
            c.tp.push(count(f[4])?);
            c.fp.push(count(f[5])?);
            c.fn_.push(count(f[6])?);
        }
        Self::from_scenes(
            scenes
                .into_iter()
                .map(|(scene, curve)| SceneResult {
                    scene,
                    mf: max_f_score(&curve),
                    ap: average_precision(&curve),
                    curve,
                })
                .collect(),
        )
    }
}

/// Leave-one-out evaluation. For each split, `predict` receives the
/// training and held-out samples and returns one map per held-out sample.
pub fn evaluate_dataset<F>(
    samples: &[Sample],
    splits: &[Split],
    thresholds: &[f64],
    agg: Aggregation,
    mut predict: F,
) -> Result<EvalReport>
where
    F: FnMut(&Split, &[&Sample], &[&Sample]) -> Result<Vec<Plane>>,
{
    let mut rows = Vec::with_capacity(splits.len());
    for split in splits {
        let train: Vec<&Sample> = samples.iter().filter(|s| split.train.contains(&s.scene)).collect();
        let test: Vec<&Sample> = samples.iter().filter(|s| s.scene == split.test).collect();
        if test.is_empty() {
            return Err(Error::invalid("evaluation", format!("scene {:?} has no frames", split.test)));
        }
        let preds = predict(split, &train, &test)?;
        if preds.len() != test.len() {
            return Err(Error::invalid(
                "evaluation",
                format!("{} predictions for {} frames", preds.len(), test.len()),
            ));
        }
        let masks: Vec<BinaryMask> = test.iter().map(|s| s.mask.clone()).collect();
        rows.push(EvalReport::score_scene(&split.test, &preds, &masks, thresholds, agg)?);
    }
    EvalReport::from_scenes(rows)
}
