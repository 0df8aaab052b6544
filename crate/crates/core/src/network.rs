//! Layered feedforward networks whose connections carry linear or
//! linear-plus-LUT weight functions.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyper::Hyperparameters;
use crate::lut::{GridPos, LutTable};
use crate::visits::{VisitDecay, VisitTable};

/// Output of every bias unit.
pub const BIAS_OUTPUT: f64 = 1.0;

/// Range of the uniform initialization of scalar weights.
const INIT_WEIGHT: f64 = 0.5;
/// Range of the offset and slope of the initial LUT ramps.
const INIT_RAMP: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NetKind {
    /// Linear weight functions only.
    #[serde(rename = "LW")]
    Lw,
    /// LUT weight functions on every connection except those from bias units.
    #[serde(rename = "NLW")]
    Nlw,
}

impl fmt::Display for NetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NetKind::Lw => "LW",
            NetKind::Nlw => "NLW",
        })
    }
}

impl FromStr for NetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lw" => Ok(NetKind::Lw),
            "nlw" => Ok(NetKind::Nlw),
            _ => Err(Error::InvalidArchitecture(format!(
                "unknown network kind `{s}` (expected LW or NLW)"
            ))),
        }
    }
}

/// Layer sizes, input layer first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Architecture(Vec<usize>);

impl Architecture {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::InvalidArchitecture(
                "need an input layer and at least one further layer".into(),
            ));
        }
        if sizes.contains(&0) {
            return Err(Error::InvalidArchitecture("layer sizes must be positive".into()));
        }
        Ok(Self(sizes))
    }

    /// Parses a dash separated size list such as `2-32-32-1`. A leading `X`
    /// stands for `inputs`, the argument count of the data set.
    pub fn parse(spec: &str, inputs: Option<usize>) -> Result<Self> {
        let bad = |m: String| Error::InvalidArchitecture(m);
        let sizes = spec
            .trim()
            .split('-')
            .enumerate()
            .map(|(i, tok)| match tok.trim() {
                "X" | "x" if i == 0 => {
                    inputs.ok_or_else(|| bad(format!("`{spec}`: X needs a data set to resolve")))
                }
                t => t
                    .parse::<usize>()
                    .map_err(|_| bad(format!("`{spec}`: `{t}` is not a positive integer"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(sizes)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.0
    }

    pub fn inputs(&self) -> usize {
        self.0[0]
    }

    pub fn outputs(&self) -> usize {
        *self.0.last().unwrap()
    }

    /// Connections including the bias connections.
    pub fn connection_count(&self) -> usize {
        self.0.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|n| n.to_string()).collect();
        f.write_str(&parts.join("-"))
    }
}

/// Parameters of a LUT connection.
#[derive(Debug, Clone, PartialEq)]
pub struct LutWeight {
    /// Weight of the linear component.
    pub w_l: f64,
    pub lut: LutTable,
    pub visits: VisitTable,
}

/// The weight function of a connection between two nodes.
#[derive(Debug, Clone, PartialEq)]
pub enum Weight {
    Linear { w_s: f64 },
    Lut(LutWeight),
}

impl Weight {
    /// `O = w_s I` or `O = w_l I + r(w_r, I)`; `pos` is the grid position of
    /// `input`.
    #[inline]
    pub fn output(&self, input: f64, pos: GridPos) -> f64 {
        match self {
            Weight::Linear { w_s } => w_s * input,
            Weight::Lut(w) => w.w_l * input + w.lut.at(pos),
        }
    }

    /// Convenience form of [`Weight::output`] that locates `input` itself.
    pub fn eval(&self, input: f64, hp: &Hyperparameters) -> f64 {
        self.output(input, GridPos::locate(input, hp))
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Weight::Linear { w_s } => w_s.is_finite(),
            Weight::Lut(w) => w.w_l.is_finite() && w.lut.is_finite() && w.visits.is_finite(),
        }
    }
}

/// Combination and activation of a node: `tanh` of the summed inputs.
pub fn node_output(incoming: &[f64]) -> f64 {
    incoming.iter().sum::<f64>().tanh()
}

/// Connections feeding one layer, stored destination-major: the weight from
/// source `s` to destination `d` lives at `d * inputs + s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    inputs: usize,
    size: usize,
    weights: Vec<Weight>,
    bias: Vec<f64>,
}

impl Layer {
    pub fn from_parts(inputs: usize, size: usize, weights: Vec<Weight>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() != inputs * size || bias.len() != size {
            return Err(Error::Model(format!(
                "layer {inputs}->{size} needs {} weights and {size} biases, found {} and {}",
                inputs * size,
                weights.len(),
                bias.len()
            )));
        }
        Ok(Self { inputs, size, weights, bias })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn weight(&self, dest: usize, src: usize) -> &Weight {
        &self.weights[dest * self.inputs + src]
    }

    #[inline]
    pub fn weight_mut(&mut self, dest: usize, src: usize) -> &mut Weight {
        &mut self.weights[dest * self.inputs + src]
    }

    pub fn weights(&self) -> &[Weight] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [Weight] {
        &mut self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    /// Mutable access to the weights and biases at once.
    pub fn parts_mut(&mut self) -> (&mut [Weight], &mut [f64]) {
        (&mut self.weights, &mut self.bias)
    }
}

/// Identifies a connection: destination layer (1-based), destination node and
/// source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConnectionId {
    pub layer: usize,
    pub dest: usize,
    pub source: Source,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Node(usize),
    Bias,
}

impl fmt::Display for ConnectionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.source {
            Source::Node(s) => write!(f, "connection s({}, {s}) -> s({}, {})", self.layer - 1, self.layer, self.dest),
            Source::Bias => write!(f, "connection bias({}) -> s({}, {})", self.layer - 1, self.layer, self.dest),
        }
    }
}

/// Per-sample record of a forward pass, consumed by backpropagation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ForwardTrace {
    /// Node outputs per layer; layer 0 holds the raw arguments.
    pub activations: Vec<Vec<f64>>,
    /// Combination values per layer; empty for layer 0.
    pub sums: Vec<Vec<f64>>,
    /// Connection outputs per layer, destination-major, with the bias
    /// connection last for each destination (`inputs + 1` per node).
    pub outputs: Vec<Vec<f64>>,
    /// Grid position of every node output used as a connection input.
    pub positions: Vec<Vec<GridPos>>,
}

impl ForwardTrace {
    /// Input `I` of the connection from `src` in layer `layer - 1`.
    #[inline]
    pub fn input(&self, layer: usize, src: usize) -> f64 {
        self.activations[layer - 1][src]
    }

    pub fn output(&self) -> &[f64] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone)]
pub struct Network {
    kind: NetKind,
    arch: Architecture,
    hp: Hyperparameters,
    layers: Vec<Layer>,
    decay: VisitDecay,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.arch == other.arch && self.hp == other.hp && self.layers == other.layers
    }
}

impl Network {
    /// Builds a randomly initialized network.
    ///
    /// Scalar weights (including biases and linear components) are uniform in
    /// `[-0.5, 0.5]`. Each LUT starts as a ramp `b + c I` with `b` and `c`
    /// uniform in `[-0.25, 0.25]`, and each visit table is filled with `v_p`.
    pub fn init<R: Rng + ?Sized>(arch: Architecture, kind: NetKind, hp: Hyperparameters, rng: &mut R) -> Result<Self> {
        hp.validate()?;
        let mut layers = Vec::with_capacity(arch.sizes().len() - 1);
        for pair in arch.sizes().windows(2) {
            let (inputs, size) = (pair[0], pair[1]);
            let mut weights = Vec::with_capacity(inputs * size);
            let mut bias = Vec::with_capacity(size);
            for _ in 0..size {
                for _ in 0..inputs {
                    weights.push(match kind {
                        NetKind::Lw => Weight::Linear {
                            w_s: rng.random_range(-INIT_WEIGHT..=INIT_WEIGHT),
                        },
                        NetKind::Nlw => {
                            let w_l = rng.random_range(-INIT_WEIGHT..=INIT_WEIGHT);
                            let slope = rng.random_range(-INIT_RAMP..=INIT_RAMP);
                            let offset = rng.random_range(-INIT_RAMP..=INIT_RAMP);
                            Weight::Lut(LutWeight {
                                w_l,
                                lut: LutTable::ramp(offset, slope, &hp),
                                visits: VisitTable::new(hp.r_res, hp.v_p),
                            })
                        }
                    });
                }
                bias.push(rng.random_range(-INIT_WEIGHT..=INIT_WEIGHT));
            }
            layers.push(Layer { inputs, size, weights, bias });
        }
        Ok(Self::assemble(kind, arch, hp, layers))
    }

    /// Reassembles a network from stored layers, checking every invariant.
    pub fn from_parts(kind: NetKind, arch: Architecture, hp: Hyperparameters, layers: Vec<Layer>) -> Result<Self> {
        hp.validate()?;
        let sizes = arch.sizes();
        if layers.len() != sizes.len() - 1 {
            return Err(Error::Model(format!("{} layers stored for architecture {arch}", layers.len())));
        }
        for (l, layer) in layers.iter().enumerate() {
            if layer.inputs != sizes[l] || layer.size != sizes[l + 1] {
                return Err(Error::Model(format!("layer {} does not match architecture {arch}", l + 1)));
            }
            for w in &layer.weights {
                match (kind, w) {
                    (NetKind::Lw, Weight::Linear { .. }) => {}
                    (NetKind::Nlw, Weight::Lut(lw)) => {
                        if lw.lut.len() != hp.r_res || lw.visits.len() != hp.r_res {
                            return Err(Error::Model(format!(
                                "layer {}: table length differs from r_res {}",
                                l + 1,
                                hp.r_res
                            )));
                        }
                    }
                    _ => {
                        return Err(Error::Model(format!("layer {}: connection variant does not match {kind}", l + 1)));
                    }
                }
            }
        }
        Ok(Self::assemble(kind, arch, hp, layers))
    }

    fn assemble(kind: NetKind, arch: Architecture, hp: Hyperparameters, layers: Vec<Layer>) -> Self {
        let decay = VisitDecay::new(&hp);
        Self { kind, arch, hp, layers, decay }
    }

    pub fn kind(&self) -> NetKind {
        self.kind
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hp
    }

    pub fn visit_decay(&self) -> &VisitDecay {
        &self.decay
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Layer feeding node layer `l` (1-based).
    pub fn layer(&self, l: usize) -> &Layer {
        &self.layers[l - 1]
    }

    pub fn layer_mut(&mut self, l: usize) -> &mut Layer {
        &mut self.layers[l - 1]
    }

    /// Splits the network into the read-only coefficients and mutable layers.
    pub(crate) fn split_mut(&mut self) -> (&Hyperparameters, &VisitDecay, &mut [Layer]) {
        (&self.hp, &self.decay, &mut self.layers)
    }

    pub fn connection_count(&self) -> usize {
        self.arch.connection_count()
    }

    pub fn lut_connection_count(&self) -> usize {
        self.layers
            .iter()
            .flat_map(|l| &l.weights)
            .filter(|w| matches!(w, Weight::Lut(_)))
            .count()
    }

    pub fn new_trace(&self) -> ForwardTrace {
        let sizes = self.arch.sizes();
        ForwardTrace {
            activations: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            sums: sizes.iter().enumerate().map(|(l, &n)| vec![0.0; if l == 0 { 0 } else { n }]).collect(),
            outputs: std::iter::once(Vec::new())
                .chain(self.layers.iter().map(|l| vec![0.0; (l.inputs + 1) * l.size]))
                .collect(),
            positions: self.layers.iter().map(|l| vec![GridPos { index: 0, frac: 0.0 }; l.inputs]).collect(),
        }
    }

    /// Forward pass into a reusable trace.
    pub fn forward_into(&self, x: &[f64], trace: &mut ForwardTrace) -> Result<()> {
        if x.len() != self.arch.inputs() {
            return Err(Error::DimensionMismatch {
                expected: self.arch.inputs(),
                actual: x.len(),
            });
        }
        if trace.activations.len() != self.arch.sizes().len() {
            *trace = self.new_trace();
        }
        trace.activations[0].copy_from_slice(x);
        for (l, layer) in self.layers.iter().enumerate() {
            let (before, after) = trace.activations.split_at_mut(l + 1);
            let input = &before[l];
            let act = &mut after[0];
            let positions = &mut trace.positions[l];
            for (p, &v) in positions.iter_mut().zip(input.iter()) {
                *p = GridPos::locate(v, &self.hp);
            }
            let sums = &mut trace.sums[l + 1];
            let outputs = &mut trace.outputs[l + 1];
            let stride = layer.inputs + 1;
            for d in 0..layer.size {
                let row = &layer.weights[d * layer.inputs..(d + 1) * layer.inputs];
                let out = &mut outputs[d * stride..(d + 1) * stride];
                let mut sum = 0.0;
                for s in 0..layer.inputs {
                    let o = row[s].output(input[s], positions[s]);
                    out[s] = o;
                    sum += o;
                }
                let b = layer.bias[d] * BIAS_OUTPUT;
                out[layer.inputs] = b;
                sum += b;
                sums[d] = sum;
                act[d] = sum.tanh();
            }
        }
        Ok(())
    }

    /// Forward pass returning the outputs and a fresh trace.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, ForwardTrace)> {
        let mut trace = self.new_trace();
        self.forward_into(x, &mut trace)?;
        Ok((trace.output().to_vec(), trace))
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.forward(x).map(|(y, _)| y)
    }

    /// Identifier and weight of every connection, biases included.
    pub fn connections(&self) -> impl Iterator<Item = (ConnectionId, Option<&Weight>, f64)> + '_ {
        self.layers.iter().enumerate().flat_map(|(l, layer)| {
            (0..layer.size).flat_map(move |d| {
                (0..=layer.inputs).map(move |s| {
                    if s < layer.inputs {
                        let w = layer.weight(d, s);
                        let id = ConnectionId { layer: l + 1, dest: d, source: Source::Node(s) };
                        (id, Some(w), 0.0)
                    } else {
                        let id = ConnectionId { layer: l + 1, dest: d, source: Source::Bias };
                        (id, None, layer.bias[d])
                    }
                })
            })
        })
    }

    /// First connection holding a non-finite parameter.
    pub fn first_non_finite(&self) -> Option<ConnectionId> {
        self.connections().find_map(|(id, w, b)| {
            let ok = match w {
                Some(w) => w.is_finite(),
                None => b.is_finite(),
            };
            (!ok).then_some(id)
        })
    }
}
