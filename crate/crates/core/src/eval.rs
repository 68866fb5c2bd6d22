//! Reporting metrics: multilabel precision/recall/F1 under micro, macro and
//! samples averaging, and regression MAE with pooled Pearson correlation.

use std::io::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    Micro,
    Macro,
    Samples,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// `score >= threshold`.
pub fn binarize(scores: &Array2<f64>, threshold: f64) -> Array2<bool> {
    scores.mapv(|s| s >= threshold)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Default, Clone, Copy)]
struct Confusion {
    tp: usize,
    fp: usize,
    fn_: usize,
}

impl Confusion {
    fn add(&mut self, pred: bool, truth: bool) {
        match (pred, truth) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => {}
        }
    }

    fn prf(&self) -> Prf {
        let p = ratio(self.tp, self.tp + self.fp);
        let r = ratio(self.tp, self.tp + self.fn_);
        Prf {
            precision: p,
            recall: r,
            f1: harmonic(p, r),
        }
    }

    fn is_empty(&self) -> bool {
        self.tp + self.fp + self.fn_ == 0
    }
}

/// Rows are instances, columns labels. Empty denominators contribute 0;
/// macro averaging skips labels absent from both predictions and targets.
pub fn prf(
    predictions: &Array2<bool>,
    targets: &Array2<bool>,
    averaging: Averaging,
) -> Result<Prf> {
    if predictions.dim() != targets.dim() {
        return Err(Error::Shape(format!(
            "predictions {:?} vs targets {:?}",
            predictions.dim(),
            targets.dim()
        )));
    }
    let (rows, cols) = predictions.dim();
    match averaging {
        Averaging::Micro => {
            let mut c = Confusion::default();
            for (&p, &t) in predictions.iter().zip(targets.iter()) {
                c.add(p, t);
            }
            Ok(c.prf())
        }
        Averaging::Macro => {
            let mut per_label = vec![Confusion::default(); cols];
            for i in 0..rows {
                for (j, c) in per_label.iter_mut().enumerate() {
                    c.add(predictions[[i, j]], targets[[i, j]]);
                }
            }
            Ok(mean_prf(
                per_label
                    .iter()
                    .filter(|c| !c.is_empty())
                    .map(Confusion::prf),
            ))
        }
        Averaging::Samples => {
            let per_row = (0..rows).map(|i| {
                let mut c = Confusion::default();
                for j in 0..cols {
                    c.add(predictions[[i, j]], targets[[i, j]]);
                }
                c.prf()
            });
            Ok(mean_prf(per_row))
        }
    }
}

fn mean_prf(items: impl Iterator<Item = Prf>) -> Prf {
    let (mut p, mut r, mut f, mut n) = (0.0, 0.0, 0.0, 0usize);
    for x in items {
        p += x.precision;
        r += x.recall;
        f += x.f1;
        n += 1;
    }
    if n == 0 {
        return Prf {
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
        };
    }
    let n = n as f64;
    Prf {
        precision: p / n,
        recall: r / n,
        f1: f / n,
    }
}

/// Mean absolute error over all entries.
pub fn mae(predictions: &Array2<f64>, targets: &Array2<f64>) -> Result<f64> {
    check_same(predictions, targets)?;
    if predictions.is_empty() {
        return Err(Error::InvalidArgument("MAE of empty input".into()));
    }
    let sum: f64 = predictions
        .iter()
        .zip(targets.iter())
        .map(|(p, t)| (p - t).abs())
        .sum();
    Ok(sum / predictions.len() as f64)
}

/// Sample Pearson coefficient over flattened pairs, and its square.
pub fn pearson(predictions: &Array2<f64>, targets: &Array2<f64>) -> Result<(f64, f64)> {
    check_same(predictions, targets)?;
    let n = predictions.len();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "Pearson needs at least 2 entries".into(),
        ));
    }
    let mean_p = predictions.iter().sum::<f64>() / n as f64;
    let mean_t = targets.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (p, t) in predictions.iter().zip(targets.iter()) {
        let (dp, dt) = (p - mean_p, t - mean_t);
        sxy += dp * dt;
        sxx += dp * dp;
        syy += dt * dt;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined(
            "Pearson correlation with zero variance".into(),
        ));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    Ok((r, r * r))
}

fn check_same(a: &Array2<f64>, b: &Array2<f64>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::Shape(format!(
            "predictions {:?} vs targets {:?}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationScores {
    pub micro: Prf,
    #[serde(rename = "macro")]
    pub macro_: Prf,
    pub samples: Prf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionScores {
    pub mae: f64,
    /// `None` when either side has zero variance.
    pub pearson_r: Option<f64>,
    pub pearson_r2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub instance_count: usize,
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<ClassificationScores>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regression: Option<RegressionScores>,
}

pub fn classification_report(
    scores: &Array2<f64>,
    targets: &Array2<bool>,
    threshold: f64,
) -> Result<EvalReport> {
    let predicted = binarize(scores, threshold);
    Ok(EvalReport {
        instance_count: scores.nrows(),
        threshold,
        classification: Some(ClassificationScores {
            micro: prf(&predicted, targets, Averaging::Micro)?,
            macro_: prf(&predicted, targets, Averaging::Macro)?,
            samples: prf(&predicted, targets, Averaging::Samples)?,
        }),
        regression: None,
    })
}

pub fn regression_report(predictions: &Array2<f64>, targets: &Array2<f64>) -> Result<EvalReport> {
    let mae = mae(predictions, targets)?;
    let (r, r2) = match pearson(predictions, targets) {
        Ok((r, r2)) => (Some(r), Some(r2)),
        Err(Error::Undefined(_)) => (None, None),
        Err(e) => return Err(e),
    };
    Ok(EvalReport {
        instance_count: predictions.nrows(),
        threshold: 0.0,
        classification: None,
        regression: Some(RegressionScores {
            mae,
            pearson_r: r,
            pearson_r2: r2,
        }),
    })
}

/// `target,prediction` pairs, row-major.
pub fn write_scatter_csv(
    predictions: &Array2<f64>,
    targets: &Array2<f64>,
    mut out: impl Write,
) -> Result<()> {
    check_same(predictions, targets)?;
    writeln!(out, "target,prediction")?;
    for (p, t) in predictions.iter().zip(targets.iter()) {
        writeln!(out, "{t},{p}")?;
    }
    Ok(())
}
