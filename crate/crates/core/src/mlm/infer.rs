//! Fill-mask inference and sentence features.

use super::model::Model;
use super::ops::softmax_in_place;
use super::Real;
use crate::vocab::{encode, EncodedSequence, Vocabulary, MASK_ID, NUM_SPECIALS};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub token: String,
    pub id: u32,
    pub probability: f64,
}

/// Probability distribution over the non-special vocabulary at the single
/// `[MASK]` of `sentence`. Index `i` holds the probability of id
/// `NUM_SPECIALS + i`.
pub fn mask_distribution<T: Real>(
    model: &Model<T>,
    vocab: &Vocabulary,
    sentence: &str,
) -> Result<Vec<f64>> {
    let seq = encode(sentence, vocab, model.config.max_len);
    let masks: Vec<usize> = (0..seq.length).filter(|&p| seq.ids[p] == MASK_ID).collect();
    if masks.len() != 1 {
        return Err(Error::Malformed(format!(
            "fill-mask needs exactly one [MASK] within the first {} tokens, found {}",
            model.config.max_len - 2,
            masks.len()
        )));
    }
    let logits = model.logits_at(&seq.ids, &seq.attention_mask, masks[0]);
    let mut words: Vec<f64> = logits[NUM_SPECIALS..].iter().map(|v| v.f64()).collect();
    softmax_in_place(&mut words);
    Ok(words)
}

/// Top-`k` words at the mask, by probability then by id.
pub fn fill_mask<T: Real>(
    model: &Model<T>,
    vocab: &Vocabulary,
    sentence: &str,
    k: usize,
) -> Result<Vec<Prediction>> {
    let probs = mask_distribution(model, vocab, sentence)?;
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    Ok(order
        .into_iter()
        .take(k)
        .map(|i| {
            let id = (NUM_SPECIALS + i) as u32;
            Prediction {
                token: vocab.token(id).to_string(),
                id,
                probability: probs[i],
            }
        })
        .collect())
}

/// Probability of one word at the mask.
pub fn token_probability<T: Real>(
    model: &Model<T>,
    vocab: &Vocabulary,
    sentence: &str,
    token: &str,
) -> Result<f64> {
    let id = vocab
        .id(token)
        .filter(|&id| !Vocabulary::is_special(id))
        .ok_or_else(|| Error::OutOfVocabulary(token.to_string()))?;
    let probs = mask_distribution(model, vocab, sentence)?;
    Ok(probs[id as usize - NUM_SPECIALS])
}

fn encode_for<T: Real>(model: &Model<T>, vocab: &Vocabulary, text: &str) -> EncodedSequence {
    encode(text, vocab, model.config.max_len)
}

/// Final-layer hidden state at the `[CLS]` position.
pub fn encode_cls<T: Real>(model: &Model<T>, vocab: &Vocabulary, text: &str) -> Vec<f64> {
    let seq = encode_for(model, vocab, text);
    let hidden = model.hidden_states(&seq.ids, &seq.attention_mask);
    hidden[..model.config.d_model]
        .iter()
        .map(|v| v.f64())
        .collect()
}

/// Mean of the final-layer hidden states over all non-padding positions.
pub fn encode_mean<T: Real>(model: &Model<T>, vocab: &Vocabulary, text: &str) -> Vec<f64> {
    let seq = encode_for(model, vocab, text);
    let d = model.config.d_model;
    let hidden = model.hidden_states(&seq.ids, &seq.attention_mask);
    let mut out = vec![0.0; d];
    for row in hidden.chunks(d) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v.f64();
        }
    }
    out.iter_mut().for_each(|o| *o /= seq.length as f64);
    out
}
