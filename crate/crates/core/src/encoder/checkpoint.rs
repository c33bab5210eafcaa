use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AdamWState, Architecture, EncoderParams, TrainConfig};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "cmm-checkpoint/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedArray {
    pub name: String,
    pub shape: [usize; 2],
    pub values: Vec<f64>,
}

/// Serialized encoder: architecture, parameters in declared segment order,
/// optimizer state laid out the same way, and the training config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub architecture: Architecture,
    pub input_dim: usize,
    pub output_dim: usize,
    pub parameters: Vec<NamedArray>,
    pub optimizer: AdamWState,
    pub config: TrainConfig,
}

impl Checkpoint {
    pub fn new(params: &EncoderParams, optimizer: &AdamWState, config: &TrainConfig) -> Self {
        let parameters = params
            .segments()
            .into_iter()
            .map(|seg| NamedArray {
                name: seg.name.to_string(),
                shape: [seg.rows, seg.cols],
                values: params.values()[seg.range()].to_vec(),
            })
            .collect();
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            architecture: params.architecture(),
            input_dim: params.input_dim(),
            output_dim: params.output_dim(),
            parameters,
            optimizer: optimizer.clone(),
            config: config.clone(),
        }
    }

    pub fn params(&self) -> Result<EncoderParams> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::Schema(format!("unsupported checkpoint format {:?}", self.format)));
        }
        let expected = EncoderParams::zeros(self.architecture, self.input_dim, self.output_dim)?.segments();
        if expected.len() != self.parameters.len() {
            return Err(Error::Schema("checkpoint parameter blocks do not match architecture".into()));
        }
        let mut values = Vec::new();
        for (seg, arr) in expected.iter().zip(&self.parameters) {
            if arr.name != seg.name || arr.shape != [seg.rows, seg.cols] || arr.values.len() != seg.len() {
                return Err(Error::Schema(format!("checkpoint block {:?} has the wrong name or shape", arr.name)));
            }
            values.extend_from_slice(&arr.values);
        }
        EncoderParams::from_values(self.architecture, self.input_dim, self.output_dim, values)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::json("checkpoint", e))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn checkpoint_restores_params() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = EncoderParams::init(Architecture::OneHidden { hidden: 3 }, 4, 5, &mut rng).unwrap();
        let ckpt = Checkpoint::new(&params, &AdamWState::new(params.len()), &TrainConfig::default());
        let back: Checkpoint = serde_json::from_str(&ckpt.to_json().unwrap()).unwrap();
        assert_eq!(back.params().unwrap(), params);
        assert_eq!(back.parameters[0].name, "hidden_weight");

        let mut broken = back.clone();
        broken.parameters[1].values.pop();
        assert!(broken.params().is_err());
    }
}
