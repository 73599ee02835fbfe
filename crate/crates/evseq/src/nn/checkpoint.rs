use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{ArrayD, IxDyn};
use serde::{Deserialize, Serialize};

use crate::data::FeatureSchema;
use crate::error::{Error, Result};
use crate::nn::config::ModelConfig;
use crate::nn::params::ParameterStore;

const MAGIC: &[u8; 8] = b"EVSQCKPT";
const FORMAT_VERSION: u32 = 1;

/// JSON header of a checkpoint file, followed on disk by the named f32
/// arrays in directory order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u32,
    /// Training strategy that produced the parameters.
    pub method: String,
    pub schema: FeatureSchema,
    pub model: ModelConfig,
    /// Snapshot of the training configuration.
    pub train: serde_json::Value,
    pub seed: u64,
    pub step: u64,
    pub config_hash: String,
    /// Mean total loss per epoch.
    #[serde(default)]
    pub loss_curve: Vec<f64>,
    /// Per-component curves, learned scalars, and anything else worth
    /// keeping (e.g. temperature/bias trajectories).
    #[serde(default)]
    pub extra: serde_json::Value,
    /// Array directory: (name, shape), in file order.
    pub params: Vec<(String, Vec<usize>)>,
}

/// Named parameter collections plus the header describing how they were
/// trained. Values are stored in f32 on disk; the in-memory store is rounded
/// to f32 on construction so a save/load round trip is exact.
#[derive(Debug, Clone)]
pub struct ModelCheckpoint {
    pub header: CheckpointHeader,
    pub store: ParameterStore,
}

impl ModelCheckpoint {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        method: &str,
        schema: FeatureSchema,
        model: ModelConfig,
        train: serde_json::Value,
        seed: u64,
        step: u64,
        config_hash: String,
        mut store: ParameterStore,
    ) -> Self {
        store.round_to_f32();
        let params = store
            .iter()
            .map(|(name, value)| (name.to_owned(), value.shape().to_vec()))
            .collect();
        ModelCheckpoint {
            header: CheckpointHeader {
                format_version: FORMAT_VERSION,
                method: method.to_owned(),
                schema,
                model,
                train,
                seed,
                step,
                config_hash,
                loss_curve: Vec::new(),
                extra: serde_json::Value::Null,
                params,
            },
            store,
        }
    }

    /// Writes atomically: a temp file in the target directory, then rename.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let tmp = path.with_extension("tmp");
        {
            let file = File::create(&tmp)?;
            let mut writer = BufWriter::new(file);
            let header = serde_json::to_vec(&self.header)?;
            writer.write_all(MAGIC)?;
            writer.write_all(&FORMAT_VERSION.to_le_bytes())?;
            writer.write_all(&(header.len() as u64).to_le_bytes())?;
            writer.write_all(&header)?;
            for (name, _) in &self.header.params {
                let value = self.store.value(name);
                for &x in value.iter() {
                    writer.write_all(&(x as f32).to_le_bytes())?;
                }
            }
            writer.flush()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ModelCheckpoint> {
        let file = File::open(path.as_ref())?;
        let mut reader = BufReader::new(file);

        let mut magic = [0u8; 8];
        reader.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("bad magic bytes".into()));
        }
        let mut word = [0u8; 4];
        reader.read_exact(&mut word)?;
        let version = u32::from_le_bytes(word);
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {version} (expected {FORMAT_VERSION})"
            )));
        }
        let mut len_bytes = [0u8; 8];
        reader.read_exact(&mut len_bytes)?;
        let header_len = u64::from_le_bytes(len_bytes) as usize;
        let mut header_buf = vec![0u8; header_len];
        reader.read_exact(&mut header_buf)?;
        let header: CheckpointHeader = serde_json::from_slice(&header_buf)?;

        let mut store = ParameterStore::new();
        for (name, shape) in &header.params {
            let count: usize = shape.iter().product();
            let mut buf = vec![0u8; count * 4];
            reader.read_exact(&mut buf).map_err(|_| {
                Error::Checkpoint(format!("truncated array `{name}` (expected {count} f32s)"))
            })?;
            let values: Vec<f64> = buf
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                .collect();
            let array = ArrayD::from_shape_vec(IxDyn(shape), values)
                .map_err(|e| Error::Checkpoint(format!("array `{name}`: {e}")))?;
            store.register(name, array)?;
        }
        Ok(ModelCheckpoint { header, store })
    }
}
