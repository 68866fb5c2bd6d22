//! JSON checkpoints: the network configuration plus every tensor as a named,
//! shaped, row-major value list.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{ModelParameters, NetConfig, Parameters};
use crate::error::{Error, Result};

const FORMAT: &str = "mlbalance-hybrid/1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorRecord {
    name: String,
    shape: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointFile {
    format: String,
    config: NetConfig,
    tensors: Vec<TensorRecord>,
}

pub fn save_checkpoint(model: &ModelParameters, out: impl Write) -> Result<()> {
    let file = CheckpointFile {
        format: FORMAT.to_string(),
        config: model.config.clone(),
        tensors: model
            .params
            .named_tensors()
            .into_iter()
            .map(|(name, shape, values)| TensorRecord {
                name,
                shape,
                values: values.to_vec(),
            })
            .collect(),
    };
    serde_json::to_writer(out, &file)?;
    Ok(())
}

pub fn load_checkpoint(input: impl Read) -> Result<ModelParameters> {
    let file: CheckpointFile = serde_json::from_reader(input)?;
    if file.format != FORMAT {
        return Err(Error::InvalidArgument(format!(
            "unsupported checkpoint format {:?}",
            file.format
        )));
    }
    file.config.validate()?;
    let mut params = Parameters::zeros(&file.config);
    let expected: Vec<(String, Vec<usize>)> = params
        .named_tensors()
        .into_iter()
        .map(|(n, s, _)| (n, s))
        .collect();
    if expected.len() != file.tensors.len() {
        return Err(Error::Shape(format!(
            "checkpoint has {} tensors, configuration needs {}",
            file.tensors.len(),
            expected.len()
        )));
    }
    for ((slot, (name, shape)), rec) in params
        .tensors_mut()
        .into_iter()
        .zip(&expected)
        .zip(&file.tensors)
    {
        if &rec.name != name || &rec.shape != shape || rec.values.len() != slot.len() {
            return Err(Error::Shape(format!(
                "tensor {:?} {:?} with {} values does not match {name:?} {shape:?}",
                rec.name,
                rec.shape,
                rec.values.len()
            )));
        }
        if rec.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "tensor {name:?} holds a non-finite value"
            )));
        }
        slot.copy_from_slice(&rec.values);
    }
    Ok(ModelParameters {
        config: file.config,
        params,
    })
}

/// `epoch,loss` with 1-based epochs, plus a `validation_loss` column when
/// `validation` is non-empty.
pub fn write_loss_csv(curve: &[f64], validation: &[f64], mut out: impl Write) -> Result<()> {
    if validation.is_empty() {
        writeln!(out, "epoch,loss")?;
        for (i, l) in curve.iter().enumerate() {
            writeln!(out, "{},{l}", i + 1)?;
        }
    } else {
        writeln!(out, "epoch,loss,validation_loss")?;
        for (i, (l, v)) in curve.iter().zip(validation).enumerate() {
            writeln!(out, "{},{l},{v}", i + 1)?;
        }
    }
    Ok(())
}
