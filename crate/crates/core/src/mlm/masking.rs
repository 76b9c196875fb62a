//! BERT-style dynamic masking.

use rand::Rng as _;

use crate::rng::rng_from;
use crate::vocab::{EncodedSequence, CLS_ID, MASK_ID, NUM_SPECIALS, PAD_ID, SEP_ID};

/// Label value at positions that are not predicted.
pub const IGNORE_LABEL: i64 = -100;

#[derive(Debug, Clone, PartialEq)]
pub struct MaskingPolicy {
    /// Probability that an eligible position is selected for prediction.
    pub select_prob: f64,
    /// Of selected positions: fraction replaced by `[MASK]`.
    pub mask_frac: f64,
    /// Of selected positions: fraction replaced by a random word.
    pub random_frac: f64,
    /// Ids random replacements are drawn from, uniformly.
    pub replacement_pool: Vec<u32>,
}

impl MaskingPolicy {
    /// 15% selection, split 80/10/10, replacements from every non-special id.
    pub fn standard(vocab_size: usize) -> Self {
        MaskingPolicy {
            select_prob: 0.15,
            mask_frac: 0.80,
            random_frac: 0.10,
            replacement_pool: (NUM_SPECIALS as u32..vocab_size as u32).collect(),
        }
    }

    pub fn with_pool(mut self, pool: Vec<u32>) -> Self {
        self.replacement_pool = pool;
        self
    }
}

/// A batch ready for the encoder: `[batch, max_len]` row-major matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedBatch {
    pub batch: usize,
    pub max_len: usize,
    pub input_ids: Vec<u32>,
    pub labels: Vec<i64>,
    pub attention_mask: Vec<u8>,
}

impl MaskedBatch {
    /// Unmasked batch (every label ignored).
    pub fn from_sequences(seqs: &[EncodedSequence]) -> Self {
        let max_len = seqs.first().map_or(0, |s| s.ids.len());
        let mut input_ids = Vec::with_capacity(seqs.len() * max_len);
        let mut attention_mask = Vec::with_capacity(seqs.len() * max_len);
        for s in seqs {
            assert_eq!(
                s.ids.len(),
                max_len,
                "sequences in a batch must share max_len"
            );
            input_ids.extend_from_slice(&s.ids);
            attention_mask.extend_from_slice(&s.attention_mask);
        }
        MaskedBatch {
            batch: seqs.len(),
            max_len,
            labels: vec![IGNORE_LABEL; input_ids.len()],
            input_ids,
            attention_mask,
        }
    }

    pub fn ids(&self, b: usize) -> &[u32] {
        &self.input_ids[b * self.max_len..(b + 1) * self.max_len]
    }

    pub fn mask(&self, b: usize) -> &[u8] {
        &self.attention_mask[b * self.max_len..(b + 1) * self.max_len]
    }

    pub fn labels(&self, b: usize) -> &[i64] {
        &self.labels[b * self.max_len..(b + 1) * self.max_len]
    }

    pub fn num_targets(&self) -> usize {
        self.labels.iter().filter(|&&l| l != IGNORE_LABEL).count()
    }
}

pub fn is_eligible(id: u32, attention: u8) -> bool {
    attention != 0 && !matches!(id, CLS_ID | SEP_ID | PAD_ID)
}

/// Selects and corrupts positions. The random stream is a pure function of
/// `seed`; training derives one seed per (epoch, batch) for dynamic masking.
pub fn apply_masking(seqs: &[EncodedSequence], policy: &MaskingPolicy, seed: u64) -> MaskedBatch {
    let mut batch = MaskedBatch::from_sequences(seqs);
    let mut rng = rng_from(seed, &[0x6d61_736b]);
    for i in 0..batch.input_ids.len() {
        let id = batch.input_ids[i];
        if !is_eligible(id, batch.attention_mask[i]) {
            continue;
        }
        if rng.random::<f64>() >= policy.select_prob {
            continue;
        }
        batch.labels[i] = id as i64;
        let r = rng.random::<f64>();
        if r < policy.mask_frac {
            batch.input_ids[i] = MASK_ID;
        } else if r < policy.mask_frac + policy.random_frac && !policy.replacement_pool.is_empty() {
            let k = rng.random_range(0..policy.replacement_pool.len());
            batch.input_ids[i] = policy.replacement_pool[k];
        }
    }
    batch
}
