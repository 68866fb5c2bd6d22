use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use super::forward::{ForwardTrace, SampleInput};
use super::{HeadMode, ModelParameters, Parameters, ReadoutMode};
use crate::error::{Error, Result};

/// Predictions are clamped to `[EPS, 1 - EPS]` before taking logarithms.
pub const BCE_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    MeanSquared,
    BinaryCrossEntropy,
}

fn check_lengths(pred: &Array1<f64>, target: &Array1<f64>) -> Result<()> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::Shape(format!(
            "prediction has {} outputs, target has {}",
            pred.len(),
            target.len()
        )));
    }
    Ok(())
}

/// Per-instance loss, averaged over outputs.
pub fn loss(pred: &Array1<f64>, target: &Array1<f64>, kind: LossKind) -> Result<f64> {
    check_lengths(pred, target)?;
    let m = pred.len() as f64;
    let total: f64 = match kind {
        LossKind::MeanSquared => pred.iter().zip(target).map(|(y, t)| (y - t).powi(2)).sum(),
        LossKind::BinaryCrossEntropy => pred
            .iter()
            .zip(target)
            .map(|(&y, &t)| {
                let y = y.clamp(BCE_EPS, 1.0 - BCE_EPS);
                -(t * y.ln() + (1.0 - t) * (1.0 - y).ln())
            })
            .sum(),
    };
    Ok(total / m)
}

/// Derivative of [`loss`] with respect to each prediction.
pub fn loss_gradient(
    pred: &Array1<f64>,
    target: &Array1<f64>,
    kind: LossKind,
) -> Result<Array1<f64>> {
    check_lengths(pred, target)?;
    let m = pred.len() as f64;
    Ok(match kind {
        LossKind::MeanSquared => {
            Array1::from_iter(pred.iter().zip(target).map(|(y, t)| 2.0 * (y - t) / m))
        }
        LossKind::BinaryCrossEntropy => {
            Array1::from_iter(pred.iter().zip(target).map(|(&y, &t)| {
                if !(BCE_EPS..=1.0 - BCE_EPS).contains(&y) {
                    0.0
                } else {
                    (-t / y + (1.0 - t) / (1.0 - y)) / m
                }
            }))
        }
    })
}

fn head_backward(dy: &Array1<f64>, trace: &ForwardTrace, head: HeadMode) -> Array1<f64> {
    let y = &trace.prediction;
    match head {
        HeadMode::LinearRegression => dy.clone(),
        HeadMode::SigmoidMultilabel => dy * &y.mapv(|v| v * (1.0 - v)),
        HeadMode::Softmax => {
            let dot = dy.dot(y);
            y * &dy.mapv(|g| g - dot)
        }
    }
}

fn outer(a: ArrayView1<f64>, b: ArrayView1<f64>) -> Array2<f64> {
    a.insert_axis(Axis(1)).dot(&b.insert_axis(Axis(0)))
}

fn readout_backward(
    g: &Array1<f64>,
    h: &Array2<f64>,
    rows: &[Vec<usize>],
    mode: ReadoutMode,
) -> Array2<f64> {
    let (n, e) = h.dim();
    let inv = 1.0 / n as f64;
    let mut dh = Array2::zeros((n, e));
    match mode {
        ReadoutMode::MaxPlusMean => {
            for j in 0..e {
                dh.column_mut(j).fill(g[j] * inv);
                dh[[rows[0][j], j]] += g[j];
            }
        }
        ReadoutMode::MaxPlusMin => {
            for j in 0..e {
                dh[[rows[0][j], j]] += g[j];
                dh[[rows[1][j], j]] += g[j];
            }
        }
        ReadoutMode::ConcatMeanMax => {
            for j in 0..e {
                dh.column_mut(j).fill(g[j] * inv);
                dh[[rows[0][j], j]] += g[e + j];
            }
        }
    }
    dh
}

/// Adds `scale * dL/dθ` for one instance into `grad`; returns the unscaled loss.
pub(crate) fn accumulate(
    model: &ModelParameters,
    input: &SampleInput,
    trace: &ForwardTrace,
    target: &Array1<f64>,
    scale: f64,
    grad: &mut Parameters,
) -> Result<f64> {
    let cfg = &model.config;
    let p = &model.params;
    let kind = cfg.task.loss_kind();
    let value = loss(&trace.prediction, target, kind)?;
    let dy = loss_gradient(&trace.prediction, target, kind)?;
    let dlogit = head_backward(&dy, trace, cfg.head) * scale;

    grad.head.weight += &outer(trace.fused.view(), dlogit.view());
    grad.head.bias += &dlogit;
    let dz = p.head.weight.dot(&dlogit);

    grad.fuse.weight += &outer(trace.fused_input.view(), dz.view());
    grad.fuse.bias += &dz;
    let du = p.fuse.weight.dot(&dz);

    if trace.fingerprint_embedding.is_some() {
        grad.fingerprint.bias += &du;
        for &b in input.fingerprint {
            let mut row = grad.fingerprint.weight.row_mut(b);
            row += &du;
        }
    }

    if trace.graph_embedding.is_some() {
        let g = input.graph.expect("graph present when embedding is");
        let top = trace.hidden.last().unwrap_or(&g.features);
        let mut dh = readout_backward(&du, top, &trace.readout_rows, cfg.readout);
        for k in (0..p.layers.len()).rev() {
            let dpre = dh * &trace.pre_activation[k].mapv(|x| cfg.activation.derivative(x));
            grad.layers[k].weight += &trace.propagated[k].t().dot(&dpre);
            grad.layers[k].bias += &dpre.sum_axis(Axis(0));
            if k == 0 {
                break;
            }
            dh = g.adjacency.t().dot(&dpre.dot(&p.layers[k].weight.t()));
        }
    }
    Ok(value)
}

/// Gradient of the per-instance loss with respect to every parameter.
pub fn backward(
    model: &ModelParameters,
    input: &SampleInput,
    trace: &ForwardTrace,
    target: &Array1<f64>,
) -> Result<Parameters> {
    let mut grad = Parameters::zeros(&model.config);
    accumulate(model, input, trace, target, 1.0, &mut grad)?;
    Ok(grad)
}
