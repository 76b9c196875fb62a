//! Versioned checkpoint file.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "CHRONOLM"            8-byte magic
//! version               u32
//! header_len            u64
//! header                JSON: {config, meta, tensors: [{name, shape, offset}]}
//! zero padding          up to the next 64-byte file offset
//! payload               f32 tensors; `offset` is relative to the payload
//!                       start and every tensor begins on a 64-byte boundary
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{Architecture, ModelConfig};
use super::model::Model;
use super::Real;

pub const MAGIC: &[u8; 8] = b"CHRONOLM";
pub const FORMAT_VERSION: u32 = 1;
const ALIGN: usize = 64;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {found} (expected {FORMAT_VERSION})")]
    UnsupportedVersion { found: u32 },
    #[error("truncated checkpoint: need {needed} bytes, file has {actual}")]
    Truncated { needed: usize, actual: usize },
    #[error("corrupt checkpoint header: {0}")]
    CorruptHeader(String),
    #[error("tensor directory does not match config: {0}")]
    ShapeMismatch(String),
    #[error("cannot combine checkpoints: {0}")]
    Incompatible(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Summary of a training run's per-step loss curve.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossDigest {
    pub steps: u64,
    pub first: Option<f64>,
    pub last: Option<f64>,
    /// SHA-256 over the little-endian f64 loss values.
    pub sha256: String,
}

impl LossDigest {
    pub fn of(curve: &[f64]) -> Self {
        let mut h = Sha256::new();
        for v in curve {
            h.update(v.to_le_bytes());
        }
        LossDigest {
            steps: curve.len() as u64,
            first: curve.first().copied(),
            last: curve.last().copied(),
            sha256: hex::encode(h.finalize()),
        }
    }
}

/// How a checkpoint came to be.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Origin {
    Init,
    Pretrain {
        first_year: i32,
        last_year: i32,
        epochs: u32,
    },
    Continual {
        year: i32,
        sentences: usize,
    },
    ShuffledOnePass {
        first_year: i32,
        last_year: i32,
    },
    Interpolated {
        a_year: i32,
        b_year: i32,
        lambda: f64,
    },
    RandomMatched {
        reference_year: i32,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: u32,
    pub seed: u64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub trained_through_year: i32,
    pub total_steps: u64,
    pub loss: LossDigest,
    pub origin: Origin,
    #[serde(default)]
    pub hyperparams: Option<TrainRecord>,
}

impl CheckpointMeta {
    pub fn init(year: i32) -> Self {
        CheckpointMeta {
            trained_through_year: year,
            total_steps: 0,
            loss: LossDigest::of(&[]),
            origin: Origin::Init,
            hyperparams: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub meta: CheckpointMeta,
    pub tensors: Vec<NamedTensor>,
}

#[derive(Serialize, Deserialize)]
struct DirEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    meta: CheckpointMeta,
    tensors: Vec<DirEntry>,
}

fn align_up(n: usize) -> usize {
    n.div_ceil(ALIGN) * ALIGN
}

impl Checkpoint {
    pub fn from_model<T: Real>(model: &Model<T>, meta: CheckpointMeta) -> Self {
        let tensors = model
            .arch
            .specs
            .iter()
            .zip(&model.params)
            .map(|(s, p)| NamedTensor {
                name: s.name.clone(),
                shape: s.shape.clone(),
                data: p.iter().map(|&v| Real::to_f32(v)).collect(),
            })
            .collect();
        Checkpoint {
            config: model.config.clone(),
            meta,
            tensors,
        }
    }

    pub fn to_model<T: Real>(&self) -> crate::Result<Model<T>> {
        self.validate()?;
        let params = self
            .tensors
            .iter()
            .map(|t| t.data.iter().map(|&v| T::from_f32(v)).collect())
            .collect();
        Model::from_params(self.config.clone(), params)
    }

    pub fn tensor(&self, name: &str) -> Option<&NamedTensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    /// Checks that the tensor directory matches the architecture implied by
    /// the config, name for name and shape for shape.
    pub fn validate(&self) -> Result<(), CheckpointError> {
        self.config
            .validate()
            .map_err(|e| CheckpointError::ShapeMismatch(e.to_string()))?;
        let arch = Architecture::new(&self.config);
        if arch.specs.len() != self.tensors.len() {
            return Err(CheckpointError::ShapeMismatch(format!(
                "expected {} tensors, found {}",
                arch.specs.len(),
                self.tensors.len()
            )));
        }
        for (s, t) in arch.specs.iter().zip(&self.tensors) {
            if s.name != t.name || s.shape != t.shape || t.data.len() != s.numel() {
                return Err(CheckpointError::ShapeMismatch(format!(
                    "expected {} {:?}, found {} {:?}",
                    s.name, s.shape, t.name, t.shape
                )));
            }
        }
        Ok(())
    }

    /// Same architecture and tensor directory. The init seed may differ.
    pub fn same_layout(&self, other: &Checkpoint) -> bool {
        ModelConfig {
            seed: 0,
            ..self.config.clone()
        } == ModelConfig {
            seed: 0,
            ..other.config.clone()
        } && self.tensors.len() == other.tensors.len()
            && self
                .tensors
                .iter()
                .zip(&other.tensors)
                .all(|(a, b)| a.name == b.name && a.shape == b.shape)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut entries = Vec::with_capacity(self.tensors.len());
        let mut offset = 0usize;
        for t in &self.tensors {
            entries.push(DirEntry {
                name: t.name.clone(),
                shape: t.shape.clone(),
                offset,
            });
            offset = align_up(offset + t.data.len() * 4);
        }
        let header = Header {
            config: self.config.clone(),
            meta: self.meta.clone(),
            tensors: entries,
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(align_up(20 + json.len()) + offset);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        out.resize(align_up(out.len()), 0);
        let data_start = out.len();
        for (t, e) in self.tensors.iter().zip(&header.tensors) {
            out.resize(data_start + e.offset, 0);
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out.resize(data_start + offset, 0);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let need = |n: usize| {
            if bytes.len() < n {
                Err(CheckpointError::Truncated {
                    needed: n,
                    actual: bytes.len(),
                })
            } else {
                Ok(())
            }
        };
        need(8)?;
        if &bytes[..8] != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        need(20)?;
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(CheckpointError::UnsupportedVersion { found: version });
        }
        let header_len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
        need(20 + header_len)?;
        let header: Header = serde_json::from_slice(&bytes[20..20 + header_len])
            .map_err(|e| CheckpointError::CorruptHeader(e.to_string()))?;
        let data_start = align_up(20 + header_len);
        let payload_len = header
            .tensors
            .iter()
            .map(|e| align_up(e.offset + e.shape.iter().product::<usize>() * 4))
            .max()
            .unwrap_or(0);
        need(data_start + payload_len)?;
        let mut tensors = Vec::with_capacity(header.tensors.len());
        for e in header.tensors {
            let n: usize = e.shape.iter().product();
            let start = data_start + e.offset;
            need(start + n * 4)?;
            let data = bytes[start..start + n * 4]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect();
            tensors.push(NamedTensor {
                name: e.name,
                shape: e.shape,
                data,
            });
        }
        let ckpt = Checkpoint {
            config: header.config,
            meta: header.meta,
            tensors,
        };
        ckpt.validate()?;
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        fs::write(path, self.to_bytes()).map_err(|source| CheckpointError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let bytes = fs::read(path).map_err(|source| CheckpointError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }
}

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
