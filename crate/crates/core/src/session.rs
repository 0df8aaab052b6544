//! Training runs: seeded initialization, epoch-shuffled sample order and a
//! resumable training state.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::hyper::Hyperparameters;
use crate::network::{Architecture, NetKind, Network};
use crate::rng::{RngState, SeededRng, STREAM_GATES, STREAM_INIT, STREAM_SHUFFLE};
use crate::train::Stepper;

/// Iterations between full scans of the parameters for non-finite values.
pub const FINITE_CHECK_INTERVAL: u64 = 1000;

/// Draws a network's initial parameters from `seed`.
pub fn init_network(arch: Architecture, kind: NetKind, hp: Hyperparameters, seed: u64) -> Result<Network> {
    Network::init(arch, kind, hp, &mut SeededRng::new(seed, STREAM_INIT))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerState {
    pub epoch: u64,
    pub cursor: usize,
}

/// Cycles through a dataset, reshuffling at every epoch boundary. The order
/// of epoch `k` depends only on the seed and `k`.
#[derive(Debug, Clone)]
pub struct EpochSampler {
    seed: u64,
    order: Vec<usize>,
    state: SamplerState,
}

impl EpochSampler {
    pub fn new(seed: u64, len: usize) -> Result<Self> {
        Self::from_state(seed, len, SamplerState { epoch: 0, cursor: 0 })
    }

    pub fn from_state(seed: u64, len: usize, state: SamplerState) -> Result<Self> {
        if len == 0 {
            return Err(Error::EmptyDataset);
        }
        if state.cursor > len {
            return Err(Error::Model(format!("sampler cursor {} beyond {len} samples", state.cursor)));
        }
        let mut sampler = Self { seed, order: (0..len).collect(), state };
        sampler.shuffle();
        Ok(sampler)
    }

    fn shuffle(&mut self) {
        for (k, slot) in self.order.iter_mut().enumerate() {
            *slot = k;
        }
        let mut rng = SeededRng::new(self.seed, STREAM_SHUFFLE.wrapping_add(self.state.epoch));
        self.order.shuffle(&mut rng);
    }

    pub fn state(&self) -> SamplerState {
        self.state
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Index of the next sample.
    pub fn next_index(&mut self) -> usize {
        if self.state.cursor == self.order.len() {
            self.state.epoch += 1;
            self.state.cursor = 0;
            self.shuffle();
        }
        let i = self.order[self.state.cursor];
        self.state.cursor += 1;
        i
    }
}

/// Everything beyond the network needed to continue a run exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingState {
    pub iteration: u64,
    pub seed: u64,
    pub gates: RngState,
    pub sampler: SamplerState,
}

/// A network together with its sample order and gate stream.
#[derive(Debug, Clone)]
pub struct Trainer {
    net: Network,
    stepper: Stepper,
    gates: SeededRng,
    sampler: EpochSampler,
    iteration: u64,
    seed: u64,
}

impl Trainer {
    pub fn new(net: Network, seed: u64, dataset_len: usize) -> Result<Self> {
        Ok(Self {
            stepper: Stepper::new(&net)?,
            gates: SeededRng::new(seed, STREAM_GATES),
            sampler: EpochSampler::new(seed, dataset_len)?,
            iteration: 0,
            seed,
            net,
        })
    }

    pub fn resume(net: Network, state: &TrainingState, dataset_len: usize) -> Result<Self> {
        let gates = SeededRng::from_state(&state.gates)?;
        if state.gates.seed != state.seed || state.gates.stream != STREAM_GATES {
            return Err(Error::Model("rng state does not belong to this run".into()));
        }
        Ok(Self {
            stepper: Stepper::new(&net)?,
            gates,
            sampler: EpochSampler::from_state(state.seed, dataset_len, state.sampler)?,
            iteration: state.iteration,
            seed: state.seed,
            net,
        })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn into_network(self) -> Network {
        self.net
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn state(&self) -> TrainingState {
        TrainingState {
            iteration: self.iteration,
            seed: self.seed,
            gates: self.gates.state(),
            sampler: self.sampler.state(),
        }
    }

    /// Trains on the next sample of `data` and returns its squared error.
    pub fn step(&mut self, data: &Dataset) -> Result<f64> {
        if data.len() != self.sampler.len() {
            return Err(Error::DimensionMismatch { expected: self.sampler.len(), actual: data.len() });
        }
        let sample = &data.samples[self.sampler.next_index()];
        let err = self.stepper.train_iteration(&mut self.net, &sample.args, &sample.vals, &mut self.gates)?;
        self.iteration += 1;
        if !err.is_finite() || self.iteration.is_multiple_of(FINITE_CHECK_INTERVAL) {
            self.check_finite()?;
        }
        if !err.is_finite() {
            return Err(Error::NonFinite { connection: "network output".into(), iteration: self.iteration });
        }
        Ok(err)
    }

    /// Runs `iterations` steps.
    pub fn run(&mut self, data: &Dataset, iterations: u64) -> Result<()> {
        for _ in 0..iterations {
            self.step(data)?;
        }
        Ok(())
    }

    /// Fails with the first connection holding a non-finite parameter.
    pub fn check_finite(&self) -> Result<()> {
        match self.net.first_non_finite() {
            Some(id) => Err(Error::NonFinite { connection: id.to_string(), iteration: self.iteration }),
            None => Ok(()),
        }
    }
}
