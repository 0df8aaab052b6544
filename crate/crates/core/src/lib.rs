//! Neural networks whose connections carry a learned look-up table next to
//! the usual linear weight, trained on-line by backpropagation.

pub mod bench;
pub mod data;
pub mod error;
pub mod eval;
pub mod hyper;
pub mod lut;
pub mod model;
pub mod network;
pub mod reg;
pub mod rng;
pub mod session;
pub mod train;
pub mod visits;

pub use data::{Dataset, Sample};
pub use error::{Error, Result};
pub use hyper::Hyperparameters;
pub use lut::{GridPos, LutTable};
pub use model::ModelFile;
pub use network::{Architecture, ConnectionId, LutWeight, NetKind, Network, Weight};
pub use rng::{RngState, SeededRng};
pub use session::{init_network, Trainer, TrainingState};
pub use train::Stepper;
