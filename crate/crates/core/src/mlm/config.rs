use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Encoder hyperparameters. Serialized verbatim into checkpoint headers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_model: usize,
    pub d_ff: usize,
    pub max_len: usize,
    pub vocab_size: usize,
    pub dropout: f32,
    pub seed: u64,
    #[serde(default)]
    pub tie_embeddings: bool,
    /// Dense + GELU + layer norm before the vocabulary projection.
    #[serde(default = "default_true")]
    pub head_transform: bool,
}

fn default_true() -> bool {
    true
}

impl ModelConfig {
    /// 2 layers, 4 heads, d_model 64, d_ff 256, max_len 128, dropout 0.
    pub fn desk(vocab_size: usize) -> Self {
        ModelConfig {
            n_layers: 2,
            n_heads: 4,
            d_model: 64,
            d_ff: 256,
            max_len: 128,
            vocab_size,
            dropout: 0.0,
            seed: 0,
            tie_embeddings: false,
            head_transform: true,
        }
    }

    /// BERT-base geometry: 12 layers, 12 heads, 768 hidden, max_len 512.
    pub fn base(vocab_size: usize) -> Self {
        ModelConfig {
            n_layers: 12,
            n_heads: 12,
            d_model: 768,
            d_ff: 3072,
            max_len: 512,
            vocab_size,
            dropout: 0.1,
            seed: 0,
            tie_embeddings: false,
            head_transform: true,
        }
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_layers == 0 || self.n_heads == 0 || self.d_model == 0 || self.d_ff == 0 {
            return bad("layer, head and width counts must be positive".into());
        }
        if self.d_model % self.n_heads != 0 {
            return bad(format!(
                "d_model {} not divisible by n_heads {}",
                self.d_model, self.n_heads
            ));
        }
        if self.max_len < 2 {
            return bad("max_len must be at least 2".into());
        }
        if self.vocab_size <= crate::vocab::NUM_SPECIALS {
            return bad(format!(
                "vocab_size {} leaves no room for words",
                self.vocab_size
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
}

impl TensorSpec {
    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_embedding(&self) -> bool {
        self.name.starts_with("embedding.")
    }

    pub fn is_bias_or_norm(&self) -> bool {
        self.name.ends_with(".bias") || self.name.ends_with(".gain")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerIdx {
    pub q_w: usize,
    pub q_b: usize,
    pub k_w: usize,
    pub k_b: usize,
    pub v_w: usize,
    pub v_b: usize,
    pub o_w: usize,
    pub o_b: usize,
    pub ln1_g: usize,
    pub ln1_b: usize,
    pub up_w: usize,
    pub up_b: usize,
    pub down_w: usize,
    pub down_b: usize,
    pub ln2_g: usize,
    pub ln2_b: usize,
}

/// Positions of every parameter tensor in the flat tensor list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Indices {
    pub word: usize,
    pub pos: usize,
    pub layers: Vec<LayerIdx>,
    pub final_g: usize,
    pub final_b: usize,
    pub head_w: Option<usize>,
    pub head_b: Option<usize>,
    pub head_g: Option<usize>,
    pub head_beta: Option<usize>,
    /// `None` when tied to the word embedding.
    pub dec_w: Option<usize>,
    pub dec_b: usize,
}

/// Tensor directory implied by a config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub specs: Vec<TensorSpec>,
    pub idx: Indices,
}

impl Architecture {
    pub fn new(cfg: &ModelConfig) -> Self {
        let mut specs = Vec::new();
        let mut push = |name: String, shape: Vec<usize>| {
            specs.push(TensorSpec { name, shape });
            specs.len() - 1
        };
        let (d, f, v) = (cfg.d_model, cfg.d_ff, cfg.vocab_size);
        let word = push("embedding.word".into(), vec![v, d]);
        let pos = push("embedding.position".into(), vec![cfg.max_len, d]);
        let mut layers = Vec::with_capacity(cfg.n_layers);
        for l in 0..cfg.n_layers {
            let p = |s: &str| format!("layer.{l}.{s}");
            layers.push(LayerIdx {
                ln1_g: push(p("attention.norm.gain"), vec![d]),
                ln1_b: push(p("attention.norm.bias"), vec![d]),
                q_w: push(p("attention.query.weight"), vec![d, d]),
                q_b: push(p("attention.query.bias"), vec![d]),
                k_w: push(p("attention.key.weight"), vec![d, d]),
                k_b: push(p("attention.key.bias"), vec![d]),
                v_w: push(p("attention.value.weight"), vec![d, d]),
                v_b: push(p("attention.value.bias"), vec![d]),
                o_w: push(p("attention.output.weight"), vec![d, d]),
                o_b: push(p("attention.output.bias"), vec![d]),
                ln2_g: push(p("ffn.norm.gain"), vec![d]),
                ln2_b: push(p("ffn.norm.bias"), vec![d]),
                up_w: push(p("ffn.up.weight"), vec![f, d]),
                up_b: push(p("ffn.up.bias"), vec![f]),
                down_w: push(p("ffn.down.weight"), vec![d, f]),
                down_b: push(p("ffn.down.bias"), vec![d]),
            });
        }
        let final_g = push("final_norm.gain".into(), vec![d]);
        let final_b = push("final_norm.bias".into(), vec![d]);
        let (head_w, head_b, head_g, head_beta) = if cfg.head_transform {
            (
                Some(push("head.transform.weight".into(), vec![d, d])),
                Some(push("head.transform.bias".into(), vec![d])),
                Some(push("head.norm.gain".into(), vec![d])),
                Some(push("head.norm.bias".into(), vec![d])),
            )
        } else {
            (None, None, None, None)
        };
        let dec_w = (!cfg.tie_embeddings).then(|| push("head.decoder.weight".into(), vec![v, d]));
        let dec_b = push("head.decoder.bias".into(), vec![v]);
        Architecture {
            specs,
            idx: Indices {
                word,
                pos,
                layers,
                final_g,
                final_b,
                head_w,
                head_b,
                head_g,
                head_beta,
                dec_w,
                dec_b,
            },
        }
    }

    pub fn decoder_weight(&self) -> usize {
        self.idx.dec_w.unwrap_or(self.idx.word)
    }

    pub fn num_parameters(&self) -> usize {
        self.specs.iter().map(TensorSpec::numel).sum()
    }
}
