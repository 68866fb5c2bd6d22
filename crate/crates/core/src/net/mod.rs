//! Hybrid graph/fingerprint network.
//!
//! ```text
//! H(k)  = act(Â · H(k-1) · W(k) + b(k))        H(0) = node features
//! h_G   = readout(H(K))
//! F*    = F · W(P) + c
//! Z     = (h_G + F*) · W(Q) + d
//! y     = head(Z · W(R) + e)
//! ```
//!
//! Gradients are derived by hand in [`backward`]; the test suite checks them
//! against central finite differences.

mod backward;
mod checkpoint;
mod forward;
mod train;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use backward::{backward, loss, loss_gradient, LossKind};
pub use checkpoint::{load_checkpoint, save_checkpoint, write_loss_csv};
pub use forward::{
    adjacency_operator, fingerprint_dense, forward, fuse_and_predict, graph_layer_forward, readout,
    ForwardTrace, GraphInput, SampleInput,
};
pub use train::{
    evaluate, mean_loss, predict, predict_samples, prepare_samples, target_matrix, train,
    train_samples, train_samples_validated, train_validated, PreparedSample, TrainConfig,
    TrainOutcome, Validation,
};

use crate::error::{Error, Result};

macro_rules! named_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($name::$variant => $text),+ })
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(Error::InvalidArgument(format!(
                        concat!("unknown ", stringify!($name), " {:?}"), other
                    ))),
                }
            }
        }
    };
}

named_enum!(Activation {
    Relu => "relu",
    Tanh => "tanh",
    Sigmoid => "sigmoid",
    Identity => "identity",
});

named_enum!(ReadoutMode {
    MaxPlusMean => "max_plus_mean",
    MaxPlusMin => "max_plus_min",
    ConcatMeanMax => "concat_mean_max",
});

named_enum!(HeadMode {
    SigmoidMultilabel => "sigmoid_multilabel",
    LinearRegression => "linear_regression",
    Softmax => "softmax",
});

named_enum!(AdjacencyMode {
    Literal => "literal",
    SelfLoops => "self_loops",
    Normalized => "normalized",
});

named_enum!(InputMode {
    Graph => "graph",
    Fingerprint => "fingerprint",
    Hybrid => "hybrid",
});

named_enum!(Task {
    Multilabel => "multilabel",
    Multiregression => "multiregression",
});

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
            Activation::Identity => x,
        }
    }

    /// Derivative with respect to the pre-activation `x`.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            Activation::Identity => 1.0,
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl InputMode {
    pub fn uses_graph(self) -> bool {
        matches!(self, InputMode::Graph | InputMode::Hybrid)
    }

    pub fn uses_fingerprint(self) -> bool {
        matches!(self, InputMode::Fingerprint | InputMode::Hybrid)
    }
}

impl Task {
    pub fn default_head(self) -> HeadMode {
        match self {
            Task::Multilabel => HeadMode::SigmoidMultilabel,
            Task::Multiregression => HeadMode::LinearRegression,
        }
    }

    pub fn loss_kind(self) -> LossKind {
        match self {
            Task::Multilabel => LossKind::BinaryCrossEntropy,
            Task::Multiregression => LossKind::MeanSquared,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    pub task: Task,
    pub inputs: InputMode,
    pub node_feature_dim: usize,
    pub fingerprint_width: usize,
    /// Output width of each graph layer; the last entry is the node embedding width.
    pub hidden_dims: Vec<usize>,
    pub fusion_dim: usize,
    pub output_dim: usize,
    pub activation: Activation,
    pub readout: ReadoutMode,
    pub head: HeadMode,
    pub adjacency: AdjacencyMode,
}

impl NetConfig {
    /// Two graph layers of width 64, ReLU, max+mean readout, normalized
    /// adjacency with self-loops, and the task's natural head.
    pub fn new(
        task: Task,
        inputs: InputMode,
        node_feature_dim: usize,
        fingerprint_width: usize,
        output_dim: usize,
    ) -> Self {
        NetConfig {
            task,
            inputs,
            node_feature_dim,
            fingerprint_width,
            hidden_dims: vec![64, 64],
            fusion_dim: 64,
            output_dim,
            activation: Activation::Relu,
            readout: ReadoutMode::MaxPlusMean,
            head: task.default_head(),
            adjacency: AdjacencyMode::Normalized,
        }
    }

    pub fn node_embedding_dim(&self) -> usize {
        self.hidden_dims
            .last()
            .copied()
            .unwrap_or(self.node_feature_dim)
    }

    /// Width of `h_G`, which is also the width of `F*` and the fusion input.
    pub fn readout_dim(&self) -> usize {
        match self.readout {
            ReadoutMode::ConcatMeanMax => 2 * self.node_embedding_dim(),
            _ => self.node_embedding_dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("node_feature_dim", self.node_feature_dim),
            ("fingerprint_width", self.fingerprint_width),
            ("fusion_dim", self.fusion_dim),
            ("output_dim", self.output_dim),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if self.hidden_dims.contains(&0) {
            return Err(Error::InvalidArgument(
                "hidden dims must be positive".into(),
            ));
        }
        if self.task == Task::Multilabel && self.head == HeadMode::LinearRegression {
            return Err(Error::InvalidArgument(
                "binary cross-entropy needs a sigmoid or softmax head".into(),
            ));
        }
        Ok(())
    }
}

/// Affine map `x · weight + bias`, `weight` shaped `(in, out)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Dense {
            weight: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }

    fn glorot(fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let dist = Uniform::new_inclusive(-s, s).expect("finite bound");
        Dense {
            weight: Array2::from_shape_simple_fn((fan_in, fan_out), || dist.sample(rng)),
            bias: Array1::zeros(fan_out),
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weight.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.weight.ncols()
    }
}

/// Every trainable tensor of the network. Also used for gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub layers: Vec<Dense>,
    pub fingerprint: Dense,
    pub fuse: Dense,
    pub head: Dense,
}

impl Parameters {
    pub fn zeros(config: &NetConfig) -> Self {
        let mut fan_in = config.node_feature_dim;
        let layers = config
            .hidden_dims
            .iter()
            .map(|&h| {
                let d = Dense::zeros(fan_in, h);
                fan_in = h;
                d
            })
            .collect();
        let r = config.readout_dim();
        Parameters {
            layers,
            fingerprint: Dense::zeros(config.fingerprint_width, r),
            fuse: Dense::zeros(r, config.fusion_dim),
            head: Dense::zeros(config.fusion_dim, config.output_dim),
        }
    }

    pub fn init(config: &NetConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fan_in = config.node_feature_dim;
        let layers = config
            .hidden_dims
            .iter()
            .map(|&h| {
                let d = Dense::glorot(fan_in, h, &mut rng);
                fan_in = h;
                d
            })
            .collect();
        let r = config.readout_dim();
        Parameters {
            layers,
            fingerprint: Dense::glorot(config.fingerprint_width, r, &mut rng),
            fuse: Dense::glorot(r, config.fusion_dim, &mut rng),
            head: Dense::glorot(config.fusion_dim, config.output_dim, &mut rng),
        }
    }

    fn denses(&self) -> impl Iterator<Item = (String, &Dense)> {
        self.layers
            .iter()
            .enumerate()
            .map(|(k, d)| (format!("layer{k}"), d))
            .chain([
                ("fingerprint".to_string(), &self.fingerprint),
                ("fuse".to_string(), &self.fuse),
                ("head".to_string(), &self.head),
            ])
    }

    fn denses_mut(&mut self) -> impl Iterator<Item = &mut Dense> {
        self.layers
            .iter_mut()
            .chain([&mut self.fingerprint, &mut self.fuse, &mut self.head])
    }

    /// `(name, shape, values)` for every tensor, in a fixed order.
    pub fn named_tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out = Vec::new();
        for (name, d) in self.denses() {
            out.push((
                format!("{name}.weight"),
                d.weight.shape().to_vec(),
                d.weight.as_slice().expect("standard layout"),
            ));
            out.push((
                format!("{name}.bias"),
                d.bias.shape().to_vec(),
                d.bias.as_slice().expect("standard layout"),
            ));
        }
        out
    }

    /// Mutable flat views of every tensor, same order as [`Self::named_tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for d in self.denses_mut() {
            out.push(d.weight.as_slice_mut().expect("standard layout"));
            out.push(d.bias.as_slice_mut().expect("standard layout"));
        }
        out
    }

    pub fn scalar_count(&self) -> usize {
        self.named_tensors().iter().map(|(_, _, v)| v.len()).sum()
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &Parameters, scale: f64) {
        for (a, b) in self.denses_mut().zip(other.denses().map(|(_, d)| d)) {
            a.weight.scaled_add(scale, &b.weight);
            a.bias.scaled_add(scale, &b.bias);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for d in self.denses_mut() {
            d.weight *= factor;
            d.bias *= factor;
        }
    }
}

/// Configuration plus all trained tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    pub config: NetConfig,
    pub params: Parameters,
}

impl ModelParameters {
    pub fn init(config: NetConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let params = Parameters::init(&config, seed);
        Ok(ModelParameters { config, params })
    }

    pub fn zeros(config: NetConfig) -> Result<Self> {
        config.validate()?;
        let params = Parameters::zeros(&config);
        Ok(ModelParameters { config, params })
    }
}
