use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::backward::{accumulate, loss};
use super::forward::{forward, GraphInput, SampleInput};
use super::{ModelParameters, NetConfig, Parameters, Task};
use crate::dataset::MultiLabelDataset;
use crate::error::{Error, Result};
use crate::eval::{classification_report, regression_report, EvalReport};

/// Instances per gradient work unit. Partial sums are always combined in
/// chunk order, so results do not depend on the thread count.
const CHUNK: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    #[serde(default)]
    pub momentum: f64,
    /// `None` trains full-batch.
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for TrainConfig {
    /// 400 epochs of full-batch descent at rate 0.1 without momentum.
    fn default() -> Self {
        TrainConfig {
            epochs: 400,
            learning_rate: 0.1,
            momentum: 0.0,
            batch_size: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidArgument(
                "learning rate must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidArgument("momentum must be in [0, 1)".into()));
        }
        if self.batch_size == Some(0) {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ModelParameters,
    /// Mean batch loss per epoch, each measured before that batch's update.
    pub loss_curve: Vec<f64>,
    /// Mean validation loss after each epoch; empty without validation data.
    pub validation_curve: Vec<f64>,
    /// 1-based epoch whose parameters were kept, when validation selected them.
    pub best_epoch: Option<usize>,
}

/// Held-out samples for model selection. The parameters with the lowest
/// validation loss are kept; training stops once `patience` epochs pass
/// without improvement.
#[derive(Debug, Clone, Copy)]
pub struct Validation<'a> {
    pub samples: &'a [PreparedSample],
    pub patience: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct PreparedSample {
    pub graph: Option<GraphInput>,
    pub ones: Vec<usize>,
    pub target: Array1<f64>,
}

impl PreparedSample {
    pub fn input(&self) -> SampleInput<'_> {
        SampleInput {
            graph: self.graph.as_ref(),
            fingerprint: &self.ones,
        }
    }
}

/// Label indicators or regression targets, one row per instance.
pub fn target_matrix(dataset: &MultiLabelDataset, task: Task) -> Result<Array2<f64>> {
    match task {
        Task::Multilabel => {
            let mut t = Array2::zeros((dataset.len(), dataset.label_count()));
            for (i, inst) in dataset.instances().iter().enumerate() {
                for &l in &inst.labels {
                    t[[i, l as usize]] = 1.0;
                }
            }
            Ok(t)
        }
        Task::Multiregression => {
            let w = dataset.regression_width().ok_or_else(|| {
                Error::InvalidArgument("dataset has no regression targets".into())
            })?;
            let mut t = Array2::zeros((dataset.len(), w));
            for (i, inst) in dataset.instances().iter().enumerate() {
                let r = inst.regression_targets.as_ref().ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "instance {} has no regression targets",
                        inst.id
                    ))
                })?;
                for (j, &v) in r.iter().enumerate() {
                    t[[i, j]] = v;
                }
            }
            Ok(t)
        }
    }
}

fn check_compatible(dataset: &MultiLabelDataset, config: &NetConfig) -> Result<()> {
    if dataset.fingerprint_width() != config.fingerprint_width {
        return Err(Error::Shape(format!(
            "dataset fingerprints have {} bits, model expects {}",
            dataset.fingerprint_width(),
            config.fingerprint_width
        )));
    }
    if config.inputs.uses_graph() && dataset.node_feature_dim() != config.node_feature_dim {
        return Err(Error::Shape(format!(
            "dataset nodes have {} features, model expects {}",
            dataset.node_feature_dim(),
            config.node_feature_dim
        )));
    }
    let outputs = match config.task {
        Task::Multilabel => dataset.label_count(),
        Task::Multiregression => dataset.regression_width().unwrap_or(0),
    };
    if outputs != config.output_dim {
        return Err(Error::Shape(format!(
            "dataset has {outputs} targets, model has {} outputs",
            config.output_dim
        )));
    }
    Ok(())
}

pub fn prepare_samples(
    dataset: &MultiLabelDataset,
    config: &NetConfig,
) -> Result<Vec<PreparedSample>> {
    check_compatible(dataset, config)?;
    let targets = target_matrix(dataset, config.task)?;
    dataset
        .instances()
        .iter()
        .zip(targets.rows())
        .map(|(inst, target)| {
            let graph = if config.inputs.uses_graph() {
                let g = inst.graph.as_ref().ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "instance {} has no graph but the model reads graphs",
                        inst.id
                    ))
                })?;
                Some(GraphInput::new(
                    g,
                    config.node_feature_dim,
                    config.adjacency,
                )?)
            } else {
                None
            };
            Ok(PreparedSample {
                graph,
                ones: inst.fingerprint.ones().collect(),
                target: target.to_owned(),
            })
        })
        .collect()
}

/// Summed gradient and summed loss over `batch`.
fn batch_gradient(
    model: &ModelParameters,
    samples: &[PreparedSample],
    batch: &[usize],
) -> Result<(Parameters, f64)> {
    let partials: Vec<Result<(Parameters, f64)>> = batch
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut grad = Parameters::zeros(&model.config);
            let mut total = 0.0;
            for &i in chunk {
                let s = &samples[i];
                let input = s.input();
                let trace = forward(model, &input)?;
                total += accumulate(model, &input, &trace, &s.target, 1.0, &mut grad)?;
            }
            Ok((grad, total))
        })
        .collect();
    let mut iter = partials.into_iter();
    let (mut grad, mut total) = iter.next().expect("non-empty batch")?;
    for part in iter {
        let (g, l) = part?;
        grad.add_scaled(&g, 1.0);
        total += l;
    }
    Ok((grad, total))
}

/// Gradient descent with optional momentum and seeded mini-batch shuffling.
pub fn train_samples(
    model: ModelParameters,
    samples: &[PreparedSample],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    fit(model, samples, None, config)
}

/// [`train_samples`] with early stopping on held-out samples.
pub fn train_samples_validated(
    model: ModelParameters,
    samples: &[PreparedSample],
    validation: Validation,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    if validation.samples.is_empty() {
        return Err(Error::InvalidArgument("validation set is empty".into()));
    }
    if validation.patience == Some(0) {
        return Err(Error::InvalidArgument("patience must be positive".into()));
    }
    fit(model, samples, Some(validation), config)
}

fn fit(
    mut model: ModelParameters,
    samples: &[PreparedSample],
    validation: Option<Validation>,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if samples.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot train on an empty dataset".into(),
        ));
    }
    let n = samples.len();
    let batch = config.batch_size.unwrap_or(n).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut velocity = Parameters::zeros(&model.config);
    let mut curve = Vec::with_capacity(config.epochs);
    let mut validation_curve = Vec::new();
    let mut best: Option<(usize, f64, Parameters)> = None;
    for epoch in 1..=config.epochs {
        if batch < n {
            order.shuffle(&mut rng);
        }
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for idx in order.chunks(batch) {
            let (mut grad, total) = batch_gradient(&model, samples, idx)?;
            grad.scale(1.0 / idx.len() as f64);
            velocity.scale(config.momentum);
            velocity.add_scaled(&grad, -config.learning_rate);
            model.params.add_scaled(&velocity, 1.0);
            epoch_loss += total / idx.len() as f64;
            batches += 1;
        }
        let mean = epoch_loss / batches as f64;
        if !mean.is_finite() {
            return Err(Error::InvalidArgument(
                "training diverged: loss is not finite".into(),
            ));
        }
        curve.push(mean);
        if let Some(v) = &validation {
            let held_out = mean_loss(&model, v.samples)?;
            validation_curve.push(held_out);
            match &best {
                Some((_, b, _)) if held_out >= *b => {}
                _ => best = Some((epoch, held_out, model.params.clone())),
            }
            let best_epoch = best.as_ref().map_or(0, |b| b.0);
            if v.patience.is_some_and(|p| epoch - best_epoch >= p) {
                break;
            }
        }
    }
    let best_epoch = best.map(|(epoch, _, params)| {
        model.params = params;
        epoch
    });
    Ok(TrainOutcome {
        model,
        loss_curve: curve,
        validation_curve,
        best_epoch,
    })
}

/// Initialises from `config.seed` and trains on every instance of `dataset`.
pub fn train(
    dataset: &MultiLabelDataset,
    net: NetConfig,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let samples = prepare_samples(dataset, &net)?;
    let model = ModelParameters::init(net, config.seed)?;
    train_samples(model, &samples, config)
}

/// [`train`] that keeps the parameters with the lowest loss on `validation`.
pub fn train_validated(
    dataset: &MultiLabelDataset,
    validation: &MultiLabelDataset,
    net: NetConfig,
    config: &TrainConfig,
    patience: Option<usize>,
) -> Result<TrainOutcome> {
    let samples = prepare_samples(dataset, &net)?;
    let held_out = prepare_samples(validation, &net)?;
    let model = ModelParameters::init(net, config.seed)?;
    let v = Validation {
        samples: &held_out,
        patience,
    };
    train_samples_validated(model, &samples, v, config)
}

/// One prediction row per instance.
pub fn predict(model: &ModelParameters, dataset: &MultiLabelDataset) -> Result<Array2<f64>> {
    let samples = prepare_samples(dataset, &model.config)?;
    predict_samples(model, &samples)
}

pub fn predict_samples(model: &ModelParameters, samples: &[PreparedSample]) -> Result<Array2<f64>> {
    let rows: Vec<Array1<f64>> = samples
        .par_iter()
        .map(|s| forward(model, &s.input()).map(|t| t.prediction))
        .collect::<Result<_>>()?;
    let mut out = Array2::zeros((rows.len(), model.config.output_dim));
    for (i, r) in rows.iter().enumerate() {
        out.row_mut(i).assign(r);
    }
    Ok(out)
}

/// Mean per-instance loss.
pub fn mean_loss(model: &ModelParameters, samples: &[PreparedSample]) -> Result<f64> {
    let kind = model.config.task.loss_kind();
    let losses: Vec<f64> = samples
        .par_iter()
        .map(|s| forward(model, &s.input()).and_then(|t| loss(&t.prediction, &s.target, kind)))
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len().max(1) as f64)
}

/// Predictions and targets for `dataset`, scored by the task's report.
pub fn evaluate(
    model: &ModelParameters,
    dataset: &MultiLabelDataset,
    threshold: f64,
) -> Result<EvalReport> {
    let predictions = predict(model, dataset)?;
    let targets = target_matrix(dataset, model.config.task)?;
    match model.config.task {
        Task::Multilabel => {
            classification_report(&predictions, &targets.mapv(|t| t > 0.5), threshold)
        }
        Task::Multiregression => regression_report(&predictions, &targets),
    }
}
