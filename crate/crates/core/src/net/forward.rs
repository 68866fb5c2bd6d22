use ndarray::{Array1, Array2, ArrayView1, Axis};

use super::{sigmoid, Activation, AdjacencyMode, Dense, HeadMode, ModelParameters, ReadoutMode};
use crate::dataset::{Fingerprint, MolecularGraph};
use crate::error::{Error, Result};

/// Dense adjacency operator for message passing.
pub fn adjacency_operator(graph: &MolecularGraph, mode: AdjacencyMode) -> Array2<f64> {
    let n = graph.node_count();
    let mut a = Array2::<f64>::zeros((n, n));
    for &(u, v) in &graph.edges {
        a[[u, v]] = 1.0;
        a[[v, u]] = 1.0;
    }
    if mode == AdjacencyMode::Literal {
        return a;
    }
    for i in 0..n {
        a[[i, i]] = 1.0;
    }
    if mode == AdjacencyMode::Normalized {
        let inv_sqrt: Vec<f64> = a.rows().into_iter().map(|r| 1.0 / r.sum().sqrt()).collect();
        for ((i, j), x) in a.indexed_iter_mut() {
            *x *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    a
}

/// A graph ready for the forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphInput {
    pub adjacency: Array2<f64>,
    pub features: Array2<f64>,
}

impl GraphInput {
    pub fn new(
        graph: &MolecularGraph,
        node_feature_dim: usize,
        mode: AdjacencyMode,
    ) -> Result<Self> {
        let n = graph.node_count();
        let mut features = Array2::zeros((n, node_feature_dim));
        for (i, row) in graph.node_features.iter().enumerate() {
            if row.len() != node_feature_dim {
                return Err(Error::Shape(format!(
                    "node {i} has {} features, expected {node_feature_dim}",
                    row.len()
                )));
            }
            for (j, &x) in row.iter().enumerate() {
                features[[i, j]] = x;
            }
        }
        Ok(GraphInput {
            adjacency: adjacency_operator(graph, mode),
            features,
        })
    }
}

/// One example; `fingerprint` lists the indices of set bits.
#[derive(Debug, Clone, Copy)]
pub struct SampleInput<'a> {
    pub graph: Option<&'a GraphInput>,
    pub fingerprint: &'a [usize],
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// `Â · H(k-1)` for each layer.
    pub propagated: Vec<Array2<f64>>,
    pub pre_activation: Vec<Array2<f64>>,
    /// `H(1) .. H(K)`.
    pub hidden: Vec<Array2<f64>>,
    /// Row of the max per column, then of the min for max+min readout.
    pub readout_rows: Vec<Vec<usize>>,
    pub graph_embedding: Option<Array1<f64>>,
    pub fingerprint_embedding: Option<Array1<f64>>,
    pub fused_input: Array1<f64>,
    pub fused: Array1<f64>,
    pub logits: Array1<f64>,
    pub prediction: Array1<f64>,
}

/// `act(Â · H · W + b)`.
pub fn graph_layer_forward(
    h: &Array2<f64>,
    adjacency: &Array2<f64>,
    layer: &Dense,
    activation: Activation,
) -> Result<Array2<f64>> {
    check_layer(h, adjacency, layer)?;
    let mut z = adjacency.dot(h).dot(&layer.weight) + &layer.bias;
    z.mapv_inplace(|x| activation.apply(x));
    Ok(z)
}

fn check_layer(h: &Array2<f64>, adjacency: &Array2<f64>, layer: &Dense) -> Result<()> {
    let n = h.nrows();
    if adjacency.dim() != (n, n) {
        return Err(Error::Shape(format!(
            "adjacency is {:?} but there are {n} nodes",
            adjacency.dim()
        )));
    }
    if h.ncols() != layer.fan_in() {
        return Err(Error::Shape(format!(
            "layer expects {} features, got {}",
            layer.fan_in(),
            h.ncols()
        )));
    }
    Ok(())
}

fn column_extremes(h: &Array2<f64>) -> (Vec<usize>, Vec<usize>) {
    let mut argmax = vec![0usize; h.ncols()];
    let mut argmin = vec![0usize; h.ncols()];
    for (j, col) in h.columns().into_iter().enumerate() {
        for (i, &x) in col.iter().enumerate() {
            if x > col[argmax[j]] {
                argmax[j] = i;
            }
            if x < col[argmin[j]] {
                argmin[j] = i;
            }
        }
    }
    (argmax, argmin)
}

fn readout_traced(h: &Array2<f64>, mode: ReadoutMode) -> Result<(Array1<f64>, Vec<Vec<usize>>)> {
    if h.nrows() == 0 {
        return Err(Error::Shape("readout over a graph with no nodes".into()));
    }
    let (argmax, argmin) = column_extremes(h);
    let max = Array1::from_iter(argmax.iter().enumerate().map(|(j, &i)| h[[i, j]]));
    let mean = h.mean_axis(Axis(0)).expect("non-empty");
    Ok(match mode {
        ReadoutMode::MaxPlusMean => (max + mean, vec![argmax]),
        ReadoutMode::MaxPlusMin => {
            let min = Array1::from_iter(argmin.iter().enumerate().map(|(j, &i)| h[[i, j]]));
            (max + min, vec![argmax, argmin])
        }
        ReadoutMode::ConcatMeanMax => {
            let out = ndarray::concatenate(Axis(0), &[mean.view(), max.view()]).expect("same rank");
            (out, vec![argmax])
        }
    })
}

/// Permutation-invariant pooling of node rows into one graph vector.
pub fn readout(h: &Array2<f64>, mode: ReadoutMode) -> Result<Array1<f64>> {
    readout_traced(h, mode).map(|(v, _)| v)
}

/// `F · W(P) + c`, summing only the rows of set bits.
pub fn fingerprint_dense(fingerprint: &Fingerprint, dense: &Dense) -> Result<Array1<f64>> {
    if fingerprint.width() != dense.fan_in() {
        return Err(Error::Shape(format!(
            "fingerprint has {} bits, layer expects {}",
            fingerprint.width(),
            dense.fan_in()
        )));
    }
    let ones: Vec<usize> = fingerprint.ones().collect();
    Ok(sparse_affine(&ones, dense))
}

fn sparse_affine(ones: &[usize], dense: &Dense) -> Array1<f64> {
    let mut out = dense.bias.clone();
    for &b in ones {
        out += &dense.weight.row(b);
    }
    out
}

pub(crate) fn apply_head(logits: ArrayView1<f64>, head: HeadMode) -> Array1<f64> {
    match head {
        HeadMode::LinearRegression => logits.to_owned(),
        HeadMode::SigmoidMultilabel => logits.mapv(sigmoid),
        HeadMode::Softmax => {
            let m = logits.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let e = logits.mapv(|x| (x - m).exp());
            let s = e.sum();
            e / s
        }
    }
}

/// Sum whichever embeddings are present, fuse, project, apply the head.
pub fn fuse_and_predict(
    graph_embedding: Option<&Array1<f64>>,
    fingerprint_embedding: Option<&Array1<f64>>,
    model: &ModelParameters,
) -> Result<Array1<f64>> {
    let r = model.config.readout_dim();
    let mut u = Array1::zeros(r);
    for e in [graph_embedding, fingerprint_embedding]
        .into_iter()
        .flatten()
    {
        if e.len() != r {
            return Err(Error::Shape(format!(
                "embedding has width {}, expected {r}",
                e.len()
            )));
        }
        u += e;
    }
    let p = &model.params;
    let z = u.dot(&p.fuse.weight) + &p.fuse.bias;
    let logits = z.dot(&p.head.weight) + &p.head.bias;
    Ok(apply_head(logits.view(), model.config.head))
}

pub fn forward(model: &ModelParameters, input: &SampleInput) -> Result<ForwardTrace> {
    let cfg = &model.config;
    let p = &model.params;
    let mut propagated = Vec::new();
    let mut pre_activation = Vec::new();
    let mut hidden: Vec<Array2<f64>> = Vec::new();
    let mut readout_rows = Vec::new();
    let mut graph_embedding = None;

    if cfg.inputs.uses_graph() {
        let g = input
            .graph
            .ok_or_else(|| Error::InvalidArgument("graph input required but missing".into()))?;
        for layer in &p.layers {
            let h = hidden.last().unwrap_or(&g.features);
            check_layer(h, &g.adjacency, layer)?;
            let ah = g.adjacency.dot(h);
            let z = ah.dot(&layer.weight) + &layer.bias;
            let out = z.mapv(|x| cfg.activation.apply(x));
            propagated.push(ah);
            pre_activation.push(z);
            hidden.push(out);
        }
        let h = hidden.last().unwrap_or(&g.features);
        let (emb, rows) = readout_traced(h, cfg.readout)?;
        readout_rows = rows;
        graph_embedding = Some(emb);
    }

    let fingerprint_embedding = if cfg.inputs.uses_fingerprint() {
        if let Some(&b) = input
            .fingerprint
            .iter()
            .find(|&&b| b >= cfg.fingerprint_width)
        {
            return Err(Error::Shape(format!(
                "fingerprint bit {b} outside width {}",
                cfg.fingerprint_width
            )));
        }
        Some(sparse_affine(input.fingerprint, &p.fingerprint))
    } else {
        None
    };

    let mut fused_input = Array1::zeros(cfg.readout_dim());
    for e in [&graph_embedding, &fingerprint_embedding]
        .into_iter()
        .flatten()
    {
        fused_input += e;
    }
    let fused = fused_input.dot(&p.fuse.weight) + &p.fuse.bias;
    let logits = fused.dot(&p.head.weight) + &p.head.bias;
    let prediction = apply_head(logits.view(), cfg.head);
    Ok(ForwardTrace {
        propagated,
        pre_activation,
        hidden,
        readout_rows,
        graph_embedding,
        fingerprint_embedding,
        fused_input,
        fused,
        logits,
        prediction,
    })
}
