//! Checkpoint series: base pretraining, yearly continual steps, the
//! registry file, interpolation and the matched-moments random baseline.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusSlice;
use crate::mlm::{
    sha256_hex, train, Checkpoint, CheckpointError, CheckpointMeta, LossDigest, MaskingPolicy,
    Model, ModelConfig, Origin, TrainHp,
};
use crate::rng::{derive_seed, rng_from};
use crate::vocab::{encode, EncodedSequence, Vocabulary};
use crate::{Error, Result};

const CONTINUAL_STREAM: u64 = 0x636f_6e74;
const RANDOM_STREAM: u64 = 0x7261_6e64;

/// Encodes every sentence of the given slices, in order.
pub fn encode_slices<'a>(
    slices: impl IntoIterator<Item = &'a CorpusSlice>,
    vocab: &Vocabulary,
    max_len: usize,
) -> Vec<EncodedSequence> {
    slices
        .into_iter()
        .flat_map(|s| {
            s.texts()
                .map(|t| encode(t, vocab, max_len))
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Non-special ids that occur in `seqs`, ascending.
pub fn present_ids(seqs: &[EncodedSequence]) -> Vec<u32> {
    let set: BTreeSet<u32> = seqs
        .iter()
        .flat_map(|s| s.ids[..s.length].iter().copied())
        .filter(|&id| !Vocabulary::is_special(id))
        .collect();
    set.into_iter().collect()
}

fn policy_for(config: &ModelConfig, seqs: &[EncodedSequence]) -> MaskingPolicy {
    MaskingPolicy::standard(config.vocab_size).with_pool(present_ids(seqs))
}

fn check_vocab(config: &ModelConfig, vocab: &Vocabulary) -> Result<()> {
    if config.vocab_size != vocab.size() {
        return Err(Error::Config(format!(
            "model vocab_size {} does not match vocabulary of {} tokens",
            config.vocab_size,
            vocab.size()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub checkpoint: Checkpoint,
    pub losses: Vec<f64>,
    pub epoch_losses: Vec<f64>,
}

/// Trains the base model from scratch on every slice up to `base_year`.
pub fn pretrain_base(
    slices: &BTreeMap<i32, CorpusSlice>,
    base_year: i32,
    vocab: &Vocabulary,
    config: &ModelConfig,
    hp: &TrainHp,
) -> Result<Trained> {
    check_vocab(config, vocab)?;
    let used: Vec<&CorpusSlice> = slices.range(..=base_year).map(|(_, s)| s).collect();
    let first_year = match used.first() {
        Some(s) => s.year,
        None => {
            return Err(Error::Config(format!(
                "no corpus slice at or before {base_year}"
            )))
        }
    };
    let seqs = encode_slices(used.iter().copied(), vocab, config.max_len);
    if seqs.is_empty() {
        return Err(Error::Config(format!(
            "slices up to {base_year} contain no sentences"
        )));
    }
    let model = Model::<f32>::init(config.clone())?;
    let out = train(model, &seqs, hp, &policy_for(config, &seqs))?;
    let meta = CheckpointMeta {
        trained_through_year: base_year,
        total_steps: out.losses.len() as u64,
        loss: LossDigest::of(&out.losses),
        origin: Origin::Pretrain {
            first_year,
            last_year: base_year,
            epochs: hp.epochs,
        },
        hyperparams: Some(hp.record()),
    };
    Ok(Trained {
        checkpoint: Checkpoint::from_model(&out.model, meta),
        losses: out.losses,
        epoch_losses: out.epoch_losses,
    })
}

/// One epoch of continual training of `prev` on the next year's slice.
///
/// The optimizer starts fresh, so the result depends only on `prev`, the
/// slice and `hp`. `hp.epochs` is ignored. An empty slice returns `prev`
/// with updated metadata.
pub fn continual_step(
    prev: &Checkpoint,
    slice: &CorpusSlice,
    vocab: &Vocabulary,
    hp: &TrainHp,
) -> Result<Trained> {
    let expected = prev.meta.trained_through_year + 1;
    if slice.year != expected {
        return Err(Error::Sequencing(format!(
            "checkpoint is trained through {}, so the next slice must be {expected}, got {}",
            prev.meta.trained_through_year, slice.year
        )));
    }
    check_vocab(&prev.config, vocab)?;
    let seqs = encode_slices([slice], vocab, prev.config.max_len);
    let mut hp = hp.clone();
    hp.epochs = 1;
    hp.seed = derive_seed(hp.seed, &[CONTINUAL_STREAM, slice.year as u64]);
    let (model_ckpt, losses, epoch_losses) = if seqs.is_empty() {
        log::warn!("slice {} is empty; checkpoint carried forward", slice.year);
        (prev.clone(), Vec::new(), Vec::new())
    } else {
        let model = prev.to_model::<f32>()?;
        let out = train(model, &seqs, &hp, &policy_for(&prev.config, &seqs))?;
        (
            Checkpoint::from_model(&out.model, prev.meta.clone()),
            out.losses,
            out.epoch_losses,
        )
    };
    let meta = CheckpointMeta {
        trained_through_year: slice.year,
        total_steps: prev.meta.total_steps + losses.len() as u64,
        loss: LossDigest::of(&losses),
        origin: Origin::Continual {
            year: slice.year,
            sentences: seqs.len(),
        },
        hyperparams: Some(hp.record()),
    };
    Ok(Trained {
        checkpoint: Checkpoint { meta, ..model_ckpt },
        losses,
        epoch_losses,
    })
}

/// The one-time comparison model: a single epoch over the union of the
/// slices in `first..=last`, globally shuffled.
pub fn shuffled_one_pass(
    slices: &BTreeMap<i32, CorpusSlice>,
    first: i32,
    last: i32,
    vocab: &Vocabulary,
    config: &ModelConfig,
    hp: &TrainHp,
) -> Result<Trained> {
    check_vocab(config, vocab)?;
    let seqs = encode_slices(
        slices.range(first..=last).map(|(_, s)| s),
        vocab,
        config.max_len,
    );
    if seqs.is_empty() {
        return Err(Error::Config(format!("no sentences in {first}..={last}")));
    }
    let hp = TrainHp {
        epochs: 1,
        ..hp.clone()
    };
    let out = train(
        Model::<f32>::init(config.clone())?,
        &seqs,
        &hp,
        &policy_for(config, &seqs),
    )?;
    let meta = CheckpointMeta {
        trained_through_year: last,
        total_steps: out.losses.len() as u64,
        loss: LossDigest::of(&out.losses),
        origin: Origin::ShuffledOnePass {
            first_year: first,
            last_year: last,
        },
        hyperparams: Some(hp.record()),
    };
    Ok(Trained {
        checkpoint: Checkpoint::from_model(&out.model, meta),
        losses: out.losses,
        epoch_losses: out.epoch_losses,
    })
}

/// Elementwise `(1 - λ)·a + λ·b`. The endpoints return `a` or `b` exactly.
pub fn interpolate(a: &Checkpoint, b: &Checkpoint, lambda: f64) -> Result<Checkpoint> {
    if !a.same_layout(b) {
        return Err(
            CheckpointError::Incompatible("configs or tensor directories differ".into()).into(),
        );
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Config(format!(
            "interpolation weight {lambda} outside [0, 1]"
        )));
    }
    let tensors = a
        .tensors
        .iter()
        .zip(&b.tensors)
        .map(|(ta, tb)| {
            let data = if lambda == 0.0 {
                ta.data.clone()
            } else if lambda == 1.0 {
                tb.data.clone()
            } else {
                ta.data
                    .iter()
                    .zip(&tb.data)
                    .map(|(&x, &y)| ((1.0 - lambda) * x as f64 + lambda * y as f64) as f32)
                    .collect()
            };
            crate::mlm::NamedTensor {
                name: ta.name.clone(),
                shape: ta.shape.clone(),
                data,
            }
        })
        .collect();
    let meta = CheckpointMeta {
        trained_through_year: a.meta.trained_through_year.max(b.meta.trained_through_year),
        total_steps: 0,
        loss: LossDigest::of(&[]),
        origin: Origin::Interpolated {
            a_year: a.meta.trained_through_year,
            b_year: b.meta.trained_through_year,
            lambda,
        },
        hyperparams: None,
    };
    Ok(Checkpoint {
        config: a.config.clone(),
        meta,
        tensors,
    })
}

/// Replaces every tensor by i.i.d. normal draws rescaled so that the
/// tensor's mean and population variance equal the reference's exactly.
/// A zero-variance tensor becomes constant at its mean.
pub fn random_matched(reference: &Checkpoint, seed: u64) -> Checkpoint {
    let tensors = reference
        .tensors
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let n = t.data.len() as f64;
            let mean = t.data.iter().map(|&v| v as f64).sum::<f64>() / n;
            let var = t
                .data
                .iter()
                .map(|&v| (v as f64 - mean).powi(2))
                .sum::<f64>()
                / n;
            let mut rng = rng_from(seed, &[RANDOM_STREAM, i as u64]);
            let z: Vec<f64> = (0..t.data.len())
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let zm = z.iter().sum::<f64>() / n;
            let zs = (z.iter().map(|v| (v - zm).powi(2)).sum::<f64>() / n).sqrt();
            let data = if var == 0.0 || zs == 0.0 {
                vec![mean as f32; t.data.len()]
            } else {
                let sd = var.sqrt();
                z.iter()
                    .map(|v| (mean + sd * (v - zm) / zs) as f32)
                    .collect()
            };
            crate::mlm::NamedTensor {
                name: t.name.clone(),
                shape: t.shape.clone(),
                data,
            }
        })
        .collect();
    let meta = CheckpointMeta {
        trained_through_year: reference.meta.trained_through_year,
        total_steps: 0,
        loss: LossDigest::of(&[]),
        origin: Origin::RandomMatched {
            reference_year: reference.meta.trained_through_year,
            seed,
        },
        hyperparams: None,
    };
    Checkpoint {
        config: reference.config.clone(),
        meta,
        tensors,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRef {
    /// Relative to the registry file's directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesEntry {
    pub year: i32,
    pub path: String,
    pub sha256: String,
}

/// `series.json`: the ordered list of checkpoints of one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRegistry {
    pub base_year: i32,
    pub entries: Vec<SeriesEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocab: Option<FileRef>,
    #[serde(skip)]
    pub root: PathBuf,
}

pub const REGISTRY_FILE: &str = "series.json";

pub fn checkpoint_file_name(year: i32) -> String {
    format!("model_{year}.ckpt")
}

impl SeriesRegistry {
    pub fn new(root: &Path, base_year: i32) -> Self {
        SeriesRegistry {
            base_year,
            entries: Vec::new(),
            vocab: None,
            root: root.to_path_buf(),
        }
    }

    pub fn years(&self) -> Vec<i32> {
        self.entries.iter().map(|e| e.year).collect()
    }

    /// Writes `ckpt` next to the registry and appends it as the next year.
    pub fn push(&mut self, ckpt: &Checkpoint) -> Result<()> {
        let year = ckpt.meta.trained_through_year;
        let expected = self.entries.last().map_or(self.base_year, |e| e.year + 1);
        if year != expected {
            return Err(Error::Sequencing(format!(
                "registry expects year {expected}, got {year}"
            )));
        }
        let name = checkpoint_file_name(year);
        let bytes = ckpt.to_bytes();
        let path = self.root.join(&name);
        fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
        self.entries.push(SeriesEntry {
            year,
            path: name,
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    pub fn set_vocab(&mut self, vocab_file: &Path) -> Result<()> {
        let bytes = fs::read(vocab_file).map_err(|e| Error::io(vocab_file, e))?;
        let name = vocab_file
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let local = self.root.join(&name);
        if local != vocab_file {
            fs::write(&local, &bytes).map_err(|e| Error::io(&local, e))?;
        }
        self.vocab = Some(FileRef {
            path: name,
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    pub fn load_vocab(&self) -> Result<Vocabulary> {
        let v = self
            .vocab
            .as_ref()
            .ok_or_else(|| Error::Config("registry has no vocabulary".into()))?;
        let path = self.root.join(&v.path);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        if sha256_hex(&bytes) != v.sha256 {
            return Err(Error::Malformed(format!(
                "{} does not match its recorded digest",
                path.display()
            )));
        }
        Vocabulary::read_tsv(&path)
    }

    pub fn checkpoint(&self, year: i32) -> Result<Checkpoint> {
        let e = self
            .entries
            .iter()
            .find(|e| e.year == year)
            .ok_or_else(|| Error::Config(format!("series has no checkpoint for {year}")))?;
        let path = self.root.join(&e.path);
        let bytes = fs::read(&path).map_err(|err| Error::io(&path, err))?;
        if sha256_hex(&bytes) != e.sha256 {
            return Err(Error::Malformed(format!(
                "{} does not match its recorded digest",
                path.display()
            )));
        }
        let ckpt = Checkpoint::from_bytes(&bytes)?;
        if ckpt.meta.trained_through_year != year {
            return Err(Error::Malformed(format!(
                "{} is trained through {}, registry says {year}",
                path.display(),
                ckpt.meta.trained_through_year
            )));
        }
        Ok(ckpt)
    }

    /// Checks the chain property: years start at `base_year` and step by one.
    pub fn validate(&self) -> Result<()> {
        for (i, e) in self.entries.iter().enumerate() {
            if e.year != self.base_year + i as i32 {
                return Err(Error::Malformed(format!(
                    "registry entry {i} has year {}, expected {}",
                    e.year,
                    self.base_year + i as i32
                )));
            }
        }
        Ok(())
    }

    pub fn save(&self) -> Result<PathBuf> {
        let path = self.root.join(REGISTRY_FILE);
        let json = serde_json::to_string_pretty(self)?;
        fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    /// Loads a registry from its JSON file; paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut reg: SeriesRegistry = serde_json::from_str(&text)
            .map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))?;
        reg.root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        reg.validate()?;
        Ok(reg)
    }
}

/// Per-year loss record emitted while building a series.
#[derive(Debug, Clone, PartialEq)]
pub struct StepLosses {
    pub year: i32,
    pub losses: Vec<f64>,
}

/// Pretrains the base model and chains continual steps through `through`,
/// writing every checkpoint and `series.json` into `out_dir`.
#[allow(clippy::too_many_arguments)]
pub fn build_series(
    slices: &BTreeMap<i32, CorpusSlice>,
    vocab: &Vocabulary,
    vocab_file: Option<&Path>,
    config: &ModelConfig,
    hp: &TrainHp,
    continual_hp: &TrainHp,
    base_year: i32,
    through: i32,
    out_dir: &Path,
) -> Result<(SeriesRegistry, Vec<StepLosses>)> {
    if through < base_year {
        return Err(Error::Config(format!(
            "--through {through} precedes base year {base_year}"
        )));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut reg = SeriesRegistry::new(out_dir, base_year);
    if let Some(v) = vocab_file {
        reg.set_vocab(v)?;
    }
    let base = pretrain_base(slices, base_year, vocab, config, hp)?;
    log::info!("base {base_year}: {} steps", base.losses.len());
    reg.push(&base.checkpoint)?;
    let mut curves = vec![StepLosses {
        year: base_year,
        losses: base.losses,
    }];
    let mut prev = base.checkpoint;
    for year in base_year + 1..=through {
        let empty = CorpusSlice {
            year,
            sentences: Vec::new(),
        };
        let slice = slices.get(&year).unwrap_or_else(|| {
            log::warn!("no slice for {year}; treating it as empty");
            &empty
        });
        let next = continual_step(&prev, slice, vocab, continual_hp)?;
        log::info!("continual {year}: {} steps", next.losses.len());
        reg.push(&next.checkpoint)?;
        curves.push(StepLosses {
            year,
            losses: next.losses,
        });
        prev = next.checkpoint;
    }
    reg.save()?;
    Ok((reg, curves))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CleanSentence;

    fn tiny_ckpt(seed: u64) -> Checkpoint {
        let cfg = ModelConfig {
            n_layers: 1,
            n_heads: 2,
            d_model: 8,
            d_ff: 16,
            max_len: 8,
            seed,
            ..ModelConfig::desk(20)
        };
        Checkpoint::from_model(
            &Model::<f32>::init(cfg).unwrap(),
            CheckpointMeta::init(2008),
        )
    }

    #[test]
    fn interpolation_identities() {
        let (a, b) = (tiny_ckpt(1), tiny_ckpt(2));
        assert_eq!(interpolate(&a, &a, 0.5).unwrap().tensors, a.tensors);
        assert_eq!(interpolate(&a, &b, 0.0).unwrap().tensors, a.tensors);
        assert_eq!(interpolate(&a, &b, 1.0).unwrap().tensors, b.tensors);
        assert_eq!(
            interpolate(&a, &b, 0.5).unwrap().tensors,
            interpolate(&b, &a, 0.5).unwrap().tensors
        );
        let ab1 = interpolate(&a, &b, 1.0).unwrap();
        assert_eq!(
            interpolate(&a, &ab1, 0.5).unwrap().tensors,
            interpolate(&a, &b, 0.5).unwrap().tensors
        );
    }

    #[test]
    fn interpolation_arithmetic() {
        let mut a = tiny_ckpt(1);
        let mut b = a.clone();
        a.tensors[0].data[..2].copy_from_slice(&[0.0, 2.0]);
        b.tensors[0].data[..2].copy_from_slice(&[2.0, 4.0]);
        assert_eq!(
            &interpolate(&a, &b, 0.5).unwrap().tensors[0].data[..2],
            &[1.0, 3.0]
        );
    }

    #[test]
    fn interpolation_rejects_mismatched_layouts() {
        let a = tiny_ckpt(1);
        let mut cfg = a.config.clone();
        cfg.d_ff = 32;
        let b = Checkpoint::from_model(
            &Model::<f32>::init(cfg).unwrap(),
            CheckpointMeta::init(2008),
        );
        assert!(matches!(
            interpolate(&a, &b, 0.5),
            Err(Error::Checkpoint(CheckpointError::Incompatible(_)))
        ));
    }

    #[test]
    fn random_matched_keeps_moments_and_constants() {
        let a = tiny_ckpt(1);
        let r = random_matched(&a, 9);
        assert_eq!(r, random_matched(&a, 9));
        for (x, y) in a.tensors.iter().zip(&r.tensors) {
            let stats = |d: &[f32]| {
                let n = d.len() as f64;
                let m = d.iter().map(|&v| v as f64).sum::<f64>() / n;
                (
                    m,
                    d.iter().map(|&v| (v as f64 - m).powi(2)).sum::<f64>() / n,
                )
            };
            let ((m1, v1), (m2, v2)) = (stats(&x.data), stats(&y.data));
            assert!((m1 - m2).abs() <= 1e-6 * (1.0 + m1.abs()));
            assert!((v1 - v2).abs() <= 1e-5 * v1.max(1e-12));
            if x.name.ends_with(".gain") {
                assert!(y.data.iter().all(|&v| v == 1.0));
            }
        }
        assert_ne!(r.tensors[0].data, a.tensors[0].data);
    }

    #[test]
    fn continual_step_requires_next_year() {
        let a = tiny_ckpt(1);
        let mut counts = std::collections::HashMap::new();
        for i in 0..10 {
            counts.insert(format!("w{i}"), 2);
        }
        let vocab = crate::vocab::build_vocab(&counts, 1, None).unwrap();
        let slice = |year| CorpusSlice {
            year,
            sentences: vec![CleanSentence {
                doc_id: "d".into(),
                year,
                text: "w1 w2 w3 w4".into(),
            }],
        };
        let hp = TrainHp::default();
        assert!(matches!(
            continual_step(&a, &slice(2010), &vocab, &hp),
            Err(Error::Sequencing(_))
        ));
        assert!(matches!(
            continual_step(&a, &slice(2008), &vocab, &hp),
            Err(Error::Sequencing(_))
        ));
        let next = continual_step(&a, &slice(2009), &vocab, &hp).unwrap();
        assert_eq!(next.checkpoint.meta.trained_through_year, 2009);
        assert_eq!(next.checkpoint.config, a.config);
        let empty = CorpusSlice {
            year: 2009,
            sentences: vec![],
        };
        let same = continual_step(&a, &empty, &vocab, &hp).unwrap();
        assert_eq!(same.checkpoint.tensors, a.tensors);
        assert_eq!(same.checkpoint.meta.trained_through_year, 2009);
    }
}
