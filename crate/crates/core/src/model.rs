//! Versioned JSON model files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyper::Hyperparameters;
use crate::lut::LutTable;
use crate::network::{Architecture, Layer, LutWeight, NetKind, Network, Weight};
use crate::session::TrainingState;
use crate::visits::VisitTable;

pub const FORMAT: &str = "nlw-model";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    format: String,
    version: u32,
    kind: NetKind,
    architecture: String,
    hyperparameters: Hyperparameters,
    layers: Vec<LayerRecord>,
    training: Option<TrainingState>,
}

/// Connections are stored destination-major: entry `d * inputs + s` runs
/// from source `s` to destination `d`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerRecord {
    bias: Vec<f64>,
    connections: Vec<ConnectionRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ConnectionRecord {
    Linear { w_s: f64 },
    Lut { w_l: f64, lut: Vec<f64>, visits: VisitRecord },
}

/// Raw lazy visit state: stored values and the decay scale applied to them.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VisitRecord {
    values: Vec<f64>,
    scale: f64,
}

/// A network and, for checkpoints, the state needed to continue training.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub network: Network,
    pub training: Option<TrainingState>,
}

impl ModelFile {
    pub fn new(network: Network, training: Option<TrainingState>) -> Self {
        Self { network, training }
    }

    pub fn to_json(&self) -> Result<String> {
        let net = &self.network;
        if let Some(id) = net.first_non_finite() {
            return Err(Error::Model(format!("non-finite parameter in {id}")));
        }
        let layers = net
            .layers()
            .iter()
            .map(|layer| LayerRecord {
                bias: layer.bias().to_vec(),
                connections: layer
                    .weights()
                    .iter()
                    .map(|w| match w {
                        Weight::Linear { w_s } => ConnectionRecord::Linear { w_s: *w_s },
                        Weight::Lut(lw) => {
                            let (values, scale) = lw.visits.stored();
                            ConnectionRecord::Lut {
                                w_l: lw.w_l,
                                lut: lw.lut.values().to_vec(),
                                visits: VisitRecord {
                                    values: values.to_vec(),
                                    scale,
                                },
                            }
                        }
                    })
                    .collect(),
            })
            .collect();
        let doc = Document {
            format: FORMAT.into(),
            version: VERSION,
            kind: net.kind(),
            architecture: net.architecture().to_string(),
            hyperparameters: *net.hyperparameters(),
            layers,
            training: self.training.clone(),
        };
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Document = serde_json::from_str(text)?;
        if doc.format != FORMAT {
            return Err(Error::Model(format!("unknown format {:?}", doc.format)));
        }
        if doc.version != VERSION {
            return Err(Error::Model(format!("unsupported version {}", doc.version)));
        }
        let arch = Architecture::parse(&doc.architecture, None)?;
        let sizes = arch.sizes().to_vec();
        if doc.layers.len() != sizes.len() - 1 {
            return Err(Error::Model(format!("{} layers stored for architecture {arch}", doc.layers.len())));
        }
        let mut layers = Vec::with_capacity(doc.layers.len());
        for (l, record) in doc.layers.into_iter().enumerate() {
            let weights = record
                .connections
                .into_iter()
                .map(|c| match c {
                    ConnectionRecord::Linear { w_s } => Ok(Weight::Linear { w_s }),
                    ConnectionRecord::Lut { w_l, lut, visits } => {
                        let visits = VisitTable::from_parts(visits.values, visits.scale)
                            .ok_or_else(|| Error::Model(format!("layer {}: invalid visit table", l + 1)))?;
                        Ok(Weight::Lut(LutWeight { w_l, lut: LutTable::new(lut), visits }))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            layers.push(Layer::from_parts(sizes[l], sizes[l + 1], weights, record.bias)?);
        }
        let network = Network::from_parts(doc.kind, arch, doc.hyperparameters, layers)?;
        if let Some(id) = network.first_non_finite() {
            return Err(Error::Model(format!("non-finite parameter in {id}")));
        }
        Ok(Self { network, training: doc.training })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = self.to_json()?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Io { .. } => e,
            other => Error::Model(format!("{}: {other}", path.display())),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_two_spirals;
    use crate::session::{init_network, Trainer};

    fn trained(kind: NetKind) -> ModelFile {
        let data = gen_two_spirals();
        let hp = Hyperparameters { r_res: 8, zeta: 0.3, ..Hyperparameters::for_kind(kind) };
        let net = init_network(Architecture::new(vec![2, 3, 1]).unwrap(), kind, hp, 5).unwrap();
        let mut t = Trainer::new(net, 5, data.len()).unwrap();
        t.run(&data, 250).unwrap();
        ModelFile::new(t.network().clone(), Some(t.state()))
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        for kind in [NetKind::Lw, NetKind::Nlw] {
            let model = trained(kind);
            let text = model.to_json().unwrap();
            let back = ModelFile::from_json(&text).unwrap();
            assert_eq!(back, model);
            assert_eq!(back.to_json().unwrap(), text);
        }
    }

    #[test]
    fn load_rejects_bad_tables() {
        let text = trained(NetKind::Nlw).to_json().unwrap();
        let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        doc["layers"][0]["connections"][0]["lut"].as_array_mut().unwrap().pop();
        assert!(ModelFile::from_json(&doc.to_string()).is_err());

        let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        doc["version"] = 99.into();
        assert!(ModelFile::from_json(&doc.to_string()).is_err());

        let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        doc["layers"][1]["connections"][0]["visits"]["values"][0] = 0.0.into();
        assert!(ModelFile::from_json(&doc.to_string()).is_err());

        assert!(ModelFile::from_json("{}").is_err());
    }
}
