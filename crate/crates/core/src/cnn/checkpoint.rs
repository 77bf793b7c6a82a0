use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::{ModelSpec, Network, Tensor, TrainConfig, TrainingHistory};
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StoredTensor {
    shape: Vec<usize>,
    /// Little-endian f32 values, base64.
    data: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    architecture: ModelSpec,
    parameters: Vec<StoredTensor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config: Option<TrainConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    history: Option<TrainingHistory>,
}

pub struct LoadedCheckpoint {
    pub network: Network,
    pub config: Option<TrainConfig>,
    pub history: Option<TrainingHistory>,
}

fn encode(values: &[f32]) -> String {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

fn decode(s: &str) -> Result<Vec<f32>> {
    let bytes = STANDARD
        .decode(s)
        .map_err(|e| Error::Config(format!("checkpoint tensor: {e}")))?;
    if bytes.len() % 4 != 0 {
        return Err(Error::Config("checkpoint tensor length is not a multiple of 4".into()));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect())
}

pub fn checkpoint_to_json(
    model: &Network,
    config: Option<&TrainConfig>,
    history: Option<&TrainingHistory>,
) -> Result<String> {
    let parameters = model
        .parameters()
        .into_iter()
        .zip(model.parameter_shapes())
        .map(|(p, shape)| StoredTensor { shape, data: encode(p) })
        .collect();
    let ck = Checkpoint {
        version: CHECKPOINT_VERSION,
        architecture: model.spec().clone(),
        parameters,
        config: config.cloned(),
        history: history.cloned(),
    };
    Ok(serde_json::to_string(&ck)?)
}

pub fn checkpoint_from_json(text: &str) -> Result<LoadedCheckpoint> {
    let ck: Checkpoint = serde_json::from_str(text)?;
    if ck.version != CHECKPOINT_VERSION {
        return Err(Error::Config(format!(
            "checkpoint version {} is not supported (expected {CHECKPOINT_VERSION})",
            ck.version
        )));
    }
    let mut network = Network::zeroed(&ck.architecture)?;
    let tensors = ck
        .parameters
        .iter()
        .map(|t| Tensor::new(t.shape.clone(), decode(&t.data)?))
        .collect::<Result<Vec<_>>>()?;
    network.load_parameters(&tensors)?;
    Ok(LoadedCheckpoint {
        network,
        config: ck.config,
        history: ck.history,
    })
}

pub fn save_checkpoint(
    model: &Network,
    config: Option<&TrainConfig>,
    history: Option<&TrainingHistory>,
    path: &Path,
) -> Result<()> {
    let text = checkpoint_to_json(model, config, history)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<LoadedCheckpoint> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let net = Network::new(&ModelSpec::reference_classifier(32), 4).unwrap();
        let text = checkpoint_to_json(&net, Some(&TrainConfig::f2()), None).unwrap();
        let back = checkpoint_from_json(&text).unwrap();
        for (a, b) in net.parameters().iter().zip(back.network.parameters()) {
            assert_eq!(a.len(), b.len());
            assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        assert_eq!(back.config.unwrap().name, "F2");
    }

    #[test]
    fn unknown_version_is_rejected() {
        let net = Network::new(&ModelSpec::reference_classifier(16), 0).unwrap();
        let text = checkpoint_to_json(&net, None, None)
            .unwrap()
            .replace("\"version\":1", "\"version\":9");
        assert!(matches!(checkpoint_from_json(&text), Err(Error::Config(_))));
    }
}
