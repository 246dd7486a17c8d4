//! JSON checkpoints: config, every parameter tensor and the role assignment.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{DpGcnModel, ModelConfig};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "dpgcn-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredTensor {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    /// Row-major values.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: ModelConfig,
    pub params: Vec<StoredTensor>,
    /// Role id of every node the model was trained with.
    pub member_of: Vec<usize>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, serde_json::to_string(self)?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let ckpt: Checkpoint = serde_json::from_str(&text)?;
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unexpected format {:?}", ckpt.format)));
        }
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "version {} is not supported (expected {CHECKPOINT_VERSION})",
                ckpt.version
            )));
        }
        Ok(ckpt)
    }
}

impl DpGcnModel {
    pub fn to_checkpoint(&self, member_of: &[usize], metadata: BTreeMap<String, String>) -> Checkpoint {
        let params = self
            .params
            .ids()
            .map(|id| {
                let v = self.params.value(id);
                StoredTensor {
                    name: self.params.name(id).to_string(),
                    rows: v.nrows(),
                    cols: v.ncols(),
                    values: v.iter().copied().collect(),
                }
            })
            .collect();
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: self.config,
            params,
            member_of: member_of.to_vec(),
            metadata,
        }
    }

    /// Rebuilds the architecture from the stored config and loads every tensor.
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let mut model = DpGcnModel::new(ckpt.config, 0)?;
        if model.params.len() != ckpt.params.len() {
            return Err(Error::Checkpoint(format!(
                "config implies {} tensors, checkpoint holds {}",
                model.params.len(),
                ckpt.params.len()
            )));
        }
        for stored in &ckpt.params {
            let id = model
                .params
                .find(&stored.name)
                .ok_or_else(|| Error::Checkpoint(format!("unexpected tensor {:?}", stored.name)))?;
            let expected = model.params.get(id).shape();
            if expected != (stored.rows, stored.cols) || stored.values.len() != stored.rows * stored.cols {
                return Err(Error::Checkpoint(format!(
                    "tensor {:?} is {}x{} with {} values, expected {:?}",
                    stored.name,
                    stored.rows,
                    stored.cols,
                    stored.values.len(),
                    expected
                )));
            }
            model.params.get_mut(id).value =
                Array2::from_shape_vec((stored.rows, stored.cols), stored.values.clone())
                    .expect("length checked");
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let mut c = ModelConfig::new(9, 3);
        c.hidden = 5;
        c.heads = 2;
        let m = DpGcnModel::new(c, 17).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        m.to_checkpoint(&[0; 9], BTreeMap::new()).save(&path).unwrap();
        let back = DpGcnModel::from_checkpoint(&Checkpoint::load(&path).unwrap()).unwrap();
        for id in m.params.ids() {
            assert_eq!(m.params.value(id), back.params.value(id));
        }
    }

    #[test]
    fn rejects_mismatched_tensors() {
        let c = ModelConfig::new(4, 2);
        let m = DpGcnModel::new(c, 1).unwrap();
        let mut ckpt = m.to_checkpoint(&[0; 4], BTreeMap::new());
        ckpt.params[0].rows += 1;
        assert!(DpGcnModel::from_checkpoint(&ckpt).is_err());
        let mut ckpt = m.to_checkpoint(&[0; 4], BTreeMap::new());
        ckpt.version = 99;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        ckpt.save(&path).unwrap();
        assert!(matches!(Checkpoint::load(&path), Err(Error::Checkpoint(_))));
    }
}
