//! Line-delimited JSON dataset format.
//!
//! Line 1 is a header object (`fingerprint_width`, `node_feature_dim`,
//! `label_count`, `regression_width`, optional `meta`); every further line is
//! one instance record (`id`, `fp`, `labels`, optional `graph`, `reg`, `origin`).
//! Label names live in a separate `index<TAB>name` vocabulary file.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    validate_instance, DatasetShape, Fingerprint, Instance, LabelId, LabelVocabulary,
    MolecularGraph, MultiLabelDataset,
};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    fingerprint_width: usize,
    node_feature_dim: usize,
    label_count: usize,
    regression_width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphRecord {
    nodes: Vec<Vec<f64>>,
    edges: Vec<(usize, usize)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordIn {
    id: String,
    fp: String,
    labels: Vec<i64>,
    #[serde(default)]
    graph: Option<GraphRecord>,
    #[serde(default)]
    reg: Option<Vec<f64>>,
    #[serde(default)]
    origin: Option<String>,
}

#[derive(Serialize)]
struct GraphRecordOut<'a> {
    nodes: &'a [Vec<f64>],
    edges: &'a [(usize, usize)],
}

#[derive(Serialize)]
struct RecordOut<'a> {
    id: &'a str,
    fp: String,
    labels: &'a [LabelId],
    #[serde(skip_serializing_if = "Option::is_none")]
    graph: Option<GraphRecordOut<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reg: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    origin: Option<&'a str>,
}

pub fn parse_vocabulary(source: impl BufRead) -> Result<LabelVocabulary> {
    let mut entries: Vec<(usize, String)> = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let (idx, name) = line.split_once('\t').ok_or_else(|| Error::Vocabulary {
            line: lineno,
            message: "expected index<TAB>name".into(),
        })?;
        let idx: usize = idx.trim().parse().map_err(|_| Error::Vocabulary {
            line: lineno,
            message: format!("invalid index {idx:?}"),
        })?;
        entries.push((idx, name.to_string()));
    }
    entries.sort_by_key(|(idx, _)| *idx);
    for (pos, (idx, _)) in entries.iter().enumerate() {
        if *idx != pos {
            return Err(Error::Vocabulary {
                line: 0,
                message: format!(
                    "indices must be exactly 0..{}, found gap or duplicate at {idx}",
                    entries.len()
                ),
            });
        }
    }
    LabelVocabulary::new(entries.into_iter().map(|(_, n)| n).collect())
}

pub fn write_vocabulary(vocabulary: &LabelVocabulary, mut out: impl Write) -> Result<()> {
    for (i, name) in vocabulary.names().iter().enumerate() {
        writeln!(out, "{i}\t{name}")?;
    }
    Ok(())
}

/// Parses a dataset stream (header line plus one record per line) against a
/// vocabulary stream. Instance order equals line order.
pub fn parse_dataset(
    records: impl BufRead,
    vocabulary_source: impl BufRead,
) -> Result<MultiLabelDataset> {
    let vocabulary = parse_vocabulary(vocabulary_source)?;
    let mut lines = records.lines();
    let header_line = match lines.next() {
        Some(line) => line?,
        None => {
            return Err(Error::Malformed {
                line: 1,
                message: "missing header line".into(),
            })
        }
    };
    let header: Header = serde_json::from_str(&header_line).map_err(|e| Error::Malformed {
        line: 1,
        message: format!("header: {e}"),
    })?;
    if header.label_count != vocabulary.len() {
        return Err(Error::Malformed {
            line: 1,
            message: format!(
                "header label_count {} but vocabulary has {} labels",
                header.label_count,
                vocabulary.len()
            ),
        });
    }
    let shape = DatasetShape {
        fingerprint_width: header.fingerprint_width,
        node_feature_dim: header.node_feature_dim,
        regression_width: header.regression_width,
    };

    let mut instances = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        let rec: RecordIn = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            line: lineno,
            message: e.to_string(),
        })?;
        let inst = record_to_instance(rec, &shape, vocabulary.len())?;
        instances.push(inst);
    }
    let ds = MultiLabelDataset::new(vocabulary, shape, instances)?;
    Ok(match header.meta {
        Some(meta) => ds.with_metadata(meta),
        None => ds,
    })
}

fn record_to_instance(rec: RecordIn, shape: &DatasetShape, label_count: usize) -> Result<Instance> {
    let fingerprint =
        Fingerprint::from_hex(&rec.fp, shape.fingerprint_width).map_err(|message| {
            Error::FingerprintWidth {
                id: rec.id.clone(),
                message,
            }
        })?;
    let mut labels = Vec::with_capacity(rec.labels.len());
    for &l in &rec.labels {
        if l < 0 || l as u64 >= label_count as u64 {
            return Err(Error::LabelOutOfRange {
                id: rec.id.clone(),
                label: l as u64,
                count: label_count,
            });
        }
        labels.push(l as LabelId);
    }
    labels.sort_unstable();
    let inst = Instance {
        id: rec.id,
        fingerprint,
        graph: rec.graph.map(|g| MolecularGraph {
            node_features: g.nodes,
            edges: g.edges,
        }),
        labels,
        regression_targets: rec.reg,
        origin: rec.origin,
    };
    validate_instance(&inst, shape, label_count)?;
    Ok(inst)
}

pub fn write_dataset(dataset: &MultiLabelDataset, out: impl Write) -> Result<()> {
    let mut out = BufWriter::new(out);
    let shape = dataset.shape();
    let header = Header {
        fingerprint_width: shape.fingerprint_width,
        node_feature_dim: shape.node_feature_dim,
        label_count: dataset.label_count(),
        regression_width: shape.regression_width,
        meta: dataset.metadata().cloned(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for inst in dataset.instances() {
        let rec = RecordOut {
            id: &inst.id,
            fp: inst.fingerprint.to_hex(),
            labels: &inst.labels,
            graph: inst.graph.as_ref().map(|g| GraphRecordOut {
                nodes: &g.node_features,
                edges: &g.edges,
            }),
            reg: inst.regression_targets.as_deref(),
            origin: inst.origin.as_deref(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// `data.jsonl` → `data.vocab.tsv`.
pub fn vocabulary_path_for(data_path: &Path) -> PathBuf {
    let stem = data_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    data_path.with_file_name(format!("{stem}.vocab.tsv"))
}

/// Reads a dataset file; the vocabulary defaults to the sibling `.vocab.tsv`.
pub fn read_dataset(data_path: &Path, vocabulary_path: Option<&Path>) -> Result<MultiLabelDataset> {
    let vocab_path = vocabulary_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| vocabulary_path_for(data_path));
    let data = BufReader::new(
        File::open(data_path)
            .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", data_path.display())))?,
    );
    let vocab =
        BufReader::new(File::open(&vocab_path).map_err(|e| {
            std::io::Error::new(e.kind(), format!("{}: {e}", vocab_path.display()))
        })?);
    parse_dataset(data, vocab)
}

/// Writes the dataset and its sibling vocabulary file.
pub fn write_dataset_files(dataset: &MultiLabelDataset, data_path: &Path) -> Result<()> {
    write_dataset(dataset, File::create(data_path)?)?;
    write_vocabulary(
        dataset.vocabulary(),
        BufWriter::new(File::create(vocabulary_path_for(data_path))?),
    )?;
    Ok(())
}
