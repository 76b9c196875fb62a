//! Pre-norm transformer encoder with an MLM head and hand-written backprop.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::config::{Architecture, LayerIdx, ModelConfig};
use super::masking::{MaskedBatch, IGNORE_LABEL};
use super::ops::{
    axpy, dot, gelu, gelu_grad, layer_norm, layer_norm_back, linear, linear_back, softmax_in_place,
    NormCache,
};
use super::Real;
use crate::rng::{rng_from, seeded, Rng};
use crate::{Error, Result};

/// Standard deviation of the normal initializer.
pub const INIT_STD: f64 = 0.02;

/// Sequences per gradient accumulation chunk. Fixed so that the reduction
/// order, and therefore every bit of the result, is independent of the
/// number of worker threads.
const GRAD_CHUNK: usize = 4;

pub type Grads<T> = Vec<Vec<T>>;

#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    pub config: ModelConfig,
    pub arch: Architecture,
    /// One flat row-major buffer per entry of `arch.specs`.
    pub params: Vec<Vec<T>>,
}

struct LayerCache<T> {
    ln1: NormCache<T>,
    a: Vec<T>,
    q: Vec<T>,
    k: Vec<T>,
    v: Vec<T>,
    probs: Vec<T>,
    ctx: Vec<T>,
    drop1: Option<Vec<T>>,
    ln2: NormCache<T>,
    c: Vec<T>,
    u: Vec<T>,
    gu: Vec<T>,
    drop2: Option<Vec<T>>,
}

struct EncoderCache<T> {
    ids: Vec<u32>,
    len: usize,
    layers: Vec<LayerCache<T>>,
    final_norm: NormCache<T>,
}

struct HeadCache<T> {
    positions: Vec<usize>,
    hs: Vec<T>,
    t: Vec<T>,
    norm: Option<NormCache<T>>,
    n: Vec<T>,
}

/// Logits for every position of a batch, `[batch, max_len, vocab]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Logits<T> {
    pub batch: usize,
    pub max_len: usize,
    pub vocab: usize,
    pub data: Vec<T>,
}

impl<T: Real> Logits<T> {
    pub fn at(&self, b: usize, p: usize) -> &[T] {
        let off = (b * self.max_len + p) * self.vocab;
        &self.data[off..off + self.vocab]
    }
}

fn apply_dropout<T: Real>(x: &mut [T], p: f32, rng: Option<&mut Rng>) -> Option<Vec<T>> {
    let rng = rng?;
    if p <= 0.0 {
        return None;
    }
    let keep = T::of(1.0 / (1.0 - p as f64));
    let mask: Vec<T> = (0..x.len())
        .map(|_| {
            if rng.random::<f32>() < p {
                T::zero()
            } else {
                keep
            }
        })
        .collect();
    for (v, m) in x.iter_mut().zip(&mask) {
        *v *= *m;
    }
    Some(mask)
}

impl<T: Real> Model<T> {
    /// Seeded initialization: weights ~ N(0, 0.02), biases 0, norm gains 1.
    ///
    /// Values are drawn in `f32` so `Model<f32>` and `Model<f64>` built from
    /// the same config start from identical numbers.
    pub fn init(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let arch = Architecture::new(&config);
        let mut rng = seeded(config.seed);
        let normal = Normal::new(0.0f32, INIT_STD as f32).expect("valid normal");
        let params = arch
            .specs
            .iter()
            .map(|s| {
                if s.name.ends_with(".gain") {
                    vec![T::one(); s.numel()]
                } else if s.name.ends_with(".bias") {
                    vec![T::zero(); s.numel()]
                } else {
                    (0..s.numel())
                        .map(|_| T::from_f32(normal.sample(&mut rng)))
                        .collect()
                }
            })
            .collect();
        Ok(Model {
            config,
            arch,
            params,
        })
    }

    pub fn from_params(config: ModelConfig, params: Vec<Vec<T>>) -> Result<Self> {
        config.validate()?;
        let arch = Architecture::new(&config);
        if params.len() != arch.specs.len()
            || params
                .iter()
                .zip(&arch.specs)
                .any(|(p, s)| p.len() != s.numel())
        {
            return Err(Error::Contract(
                "parameter buffers do not match the architecture".into(),
            ));
        }
        Ok(Model {
            config,
            arch,
            params,
        })
    }

    pub fn zero_grads(&self) -> Grads<T> {
        self.params
            .iter()
            .map(|p| vec![T::zero(); p.len()])
            .collect()
    }

    pub fn tensor(&self, name: &str) -> Option<&[T]> {
        self.arch
            .specs
            .iter()
            .position(|s| s.name == name)
            .map(|i| self.params[i].as_slice())
    }

    fn p(&self, i: usize) -> &[T] {
        &self.params[i]
    }

    /// Runs the encoder over `ids[..len]`. Keys with `key_mask == false`
    /// receive `-inf` attention scores.
    fn encode_seq(
        &self,
        ids: &[u32],
        key_mask: &[bool],
        mut dropout: Option<&mut Rng>,
    ) -> (Vec<T>, EncoderCache<T>) {
        let cfg = &self.config;
        let (d, ff, nh, dh) = (cfg.d_model, cfg.d_ff, cfg.n_heads, cfg.head_dim());
        let len = ids.len();
        let idx = &self.arch.idx;
        let word = self.p(idx.word);
        let pos = self.p(idx.pos);
        let mut x = vec![T::zero(); len * d];
        for (p, &id) in ids.iter().enumerate() {
            let row = &mut x[p * d..(p + 1) * d];
            let w = &word[id as usize * d..(id as usize + 1) * d];
            let pe = &pos[p * d..(p + 1) * d];
            for i in 0..d {
                row[i] = w[i] + pe[i];
            }
        }
        let scale = T::of(1.0 / (dh as f64).sqrt());
        let mut layers = Vec::with_capacity(cfg.n_layers);
        for li in &idx.layers {
            let (a, ln1) = layer_norm(&x, len, d, self.p(li.ln1_g), self.p(li.ln1_b));
            let q = linear(&a, len, d, self.p(li.q_w), self.p(li.q_b), d);
            let k = linear(&a, len, d, self.p(li.k_w), self.p(li.k_b), d);
            let v = linear(&a, len, d, self.p(li.v_w), self.p(li.v_b), d);
            let mut probs = vec![T::zero(); nh * len * len];
            let mut ctx = vec![T::zero(); len * d];
            for h in 0..nh {
                let off = h * dh;
                for i in 0..len {
                    let row = &mut probs[(h * len + i) * len..(h * len + i + 1) * len];
                    let qi = &q[i * d + off..i * d + off + dh];
                    let mut any = false;
                    for j in 0..len {
                        row[j] = if key_mask[j] {
                            any = true;
                            dot(qi, &k[j * d + off..j * d + off + dh]) * scale
                        } else {
                            T::neg_infinity()
                        };
                    }
                    if !any {
                        row.iter_mut().for_each(|r| *r = T::zero());
                        continue;
                    }
                    softmax_in_place(row);
                    let ci = &mut ctx[i * d + off..i * d + off + dh];
                    for j in 0..len {
                        if row[j] != T::zero() {
                            axpy(row[j], &v[j * d + off..j * d + off + dh], ci);
                        }
                    }
                }
            }
            let mut o = linear(&ctx, len, d, self.p(li.o_w), self.p(li.o_b), d);
            let drop1 = apply_dropout(&mut o, cfg.dropout, dropout.as_deref_mut());
            for i in 0..len * d {
                x[i] += o[i];
            }
            let (c, ln2) = layer_norm(&x, len, d, self.p(li.ln2_g), self.p(li.ln2_b));
            let u = linear(&c, len, d, self.p(li.up_w), self.p(li.up_b), ff);
            let gu: Vec<T> = u.iter().map(|&z| gelu(z)).collect();
            let mut f = linear(&gu, len, ff, self.p(li.down_w), self.p(li.down_b), d);
            let drop2 = apply_dropout(&mut f, cfg.dropout, dropout.as_deref_mut());
            for i in 0..len * d {
                x[i] += f[i];
            }
            layers.push(LayerCache {
                ln1,
                a,
                q,
                k,
                v,
                probs,
                ctx,
                drop1,
                ln2,
                c,
                u,
                gu,
                drop2,
            });
        }
        let (hidden, final_norm) = layer_norm(&x, len, d, self.p(idx.final_g), self.p(idx.final_b));
        let cache = EncoderCache {
            ids: ids.to_vec(),
            len,
            layers,
            final_norm,
        };
        (hidden, cache)
    }

    fn head(&self, hidden: &[T], positions: &[usize]) -> (Vec<T>, HeadCache<T>) {
        let d = self.config.d_model;
        let vsz = self.config.vocab_size;
        let idx = &self.arch.idx;
        let rows = positions.len();
        let mut hs = Vec::with_capacity(rows * d);
        for &p in positions {
            hs.extend_from_slice(&hidden[p * d..(p + 1) * d]);
        }
        let (t, norm, n) = match (idx.head_w, idx.head_b, idx.head_g, idx.head_beta) {
            (Some(w), Some(b), Some(g), Some(beta)) => {
                let t = linear(&hs, rows, d, self.p(w), self.p(b), d);
                let gt: Vec<T> = t.iter().map(|&z| gelu(z)).collect();
                let (n, norm) = layer_norm(&gt, rows, d, self.p(g), self.p(beta));
                (t, Some(norm), n)
            }
            _ => (Vec::new(), None, hs.clone()),
        };
        let logits = linear(
            &n,
            rows,
            d,
            self.p(self.arch.decoder_weight()),
            self.p(idx.dec_b),
            vsz,
        );
        (
            logits,
            HeadCache {
                positions: positions.to_vec(),
                hs,
                t,
                norm,
                n,
            },
        )
    }

    fn head_back(&self, dlogits: &[T], hc: &HeadCache<T>, grads: &mut Grads<T>, dhidden: &mut [T]) {
        let d = self.config.d_model;
        let vsz = self.config.vocab_size;
        let idx = &self.arch.idx;
        let rows = hc.positions.len();
        let dec_w = self.arch.decoder_weight();
        let (dw, db) = two_mut(grads, dec_w, idx.dec_b);
        let dn = linear_back(dlogits, &hc.n, rows, d, self.p(dec_w), vsz, dw, db);
        let dhs = match (idx.head_w, idx.head_b, idx.head_g, idx.head_beta, &hc.norm) {
            (Some(w), Some(b), Some(g), Some(beta), Some(norm)) => {
                let (dg, dbeta) = two_mut(grads, g, beta);
                let dgt = layer_norm_back(&dn, norm, rows, d, self.p(g), dg, dbeta);
                let dt: Vec<T> = dgt
                    .iter()
                    .zip(&hc.t)
                    .map(|(&g, &z)| g * gelu_grad(z))
                    .collect();
                let (dw, db) = two_mut(grads, w, b);
                linear_back(&dt, &hc.hs, rows, d, self.p(w), d, dw, db)
            }
            _ => dn,
        };
        for (r, &p) in hc.positions.iter().enumerate() {
            axpy(
                T::one(),
                &dhs[r * d..(r + 1) * d],
                &mut dhidden[p * d..(p + 1) * d],
            );
        }
    }

    fn encoder_back(&self, dhidden: &[T], ec: &EncoderCache<T>, grads: &mut Grads<T>) {
        let cfg = &self.config;
        let (d, ff, nh, dh) = (cfg.d_model, cfg.d_ff, cfg.n_heads, cfg.head_dim());
        let len = ec.len;
        let idx = &self.arch.idx;
        let scale = T::of(1.0 / (dh as f64).sqrt());
        let (dg, db) = two_mut(grads, idx.final_g, idx.final_b);
        let mut dx = layer_norm_back(dhidden, &ec.final_norm, len, d, self.p(idx.final_g), dg, db);
        for (li, lc) in idx.layers.iter().zip(&ec.layers).rev() {
            let li: &LayerIdx = li;
            // FFN branch
            let mut df = dx.clone();
            if let Some(m) = &lc.drop2 {
                df.iter_mut().zip(m).for_each(|(g, &m)| *g *= m);
            }
            let (dw, db) = two_mut(grads, li.down_w, li.down_b);
            let dgu = linear_back(&df, &lc.gu, len, ff, self.p(li.down_w), d, dw, db);
            let du: Vec<T> = dgu
                .iter()
                .zip(&lc.u)
                .map(|(&g, &z)| g * gelu_grad(z))
                .collect();
            let (dw, db) = two_mut(grads, li.up_w, li.up_b);
            let dc = linear_back(&du, &lc.c, len, d, self.p(li.up_w), ff, dw, db);
            let (dg, db) = two_mut(grads, li.ln2_g, li.ln2_b);
            let dx1_norm = layer_norm_back(&dc, &lc.ln2, len, d, self.p(li.ln2_g), dg, db);
            for i in 0..len * d {
                dx[i] += dx1_norm[i];
            }
            // attention branch
            let mut d_o = dx.clone();
            if let Some(m) = &lc.drop1 {
                d_o.iter_mut().zip(m).for_each(|(g, &m)| *g *= m);
            }
            let (dw, db) = two_mut(grads, li.o_w, li.o_b);
            let dctx = linear_back(&d_o, &lc.ctx, len, d, self.p(li.o_w), d, dw, db);
            let mut dq = vec![T::zero(); len * d];
            let mut dk = vec![T::zero(); len * d];
            let mut dv = vec![T::zero(); len * d];
            let mut dp = vec![T::zero(); len];
            for h in 0..nh {
                let off = h * dh;
                for i in 0..len {
                    let row = &lc.probs[(h * len + i) * len..(h * len + i + 1) * len];
                    let dci = &dctx[i * d + off..i * d + off + dh];
                    let mut weighted = T::zero();
                    for j in 0..len {
                        if row[j] == T::zero() {
                            dp[j] = T::zero();
                            continue;
                        }
                        dp[j] = dot(dci, &lc.v[j * d + off..j * d + off + dh]);
                        weighted += row[j] * dp[j];
                        axpy(row[j], dci, &mut dv[j * d + off..j * d + off + dh]);
                    }
                    let qi = &lc.q[i * d + off..i * d + off + dh];
                    for j in 0..len {
                        if row[j] == T::zero() {
                            continue;
                        }
                        let ds = row[j] * (dp[j] - weighted) * scale;
                        axpy(
                            ds,
                            &lc.k[j * d + off..j * d + off + dh],
                            &mut dq[i * d + off..i * d + off + dh],
                        );
                        axpy(ds, qi, &mut dk[j * d + off..j * d + off + dh]);
                    }
                }
            }
            let (dw, db) = two_mut(grads, li.q_w, li.q_b);
            let mut da = linear_back(&dq, &lc.a, len, d, self.p(li.q_w), d, dw, db);
            let (dw, db) = two_mut(grads, li.k_w, li.k_b);
            let dak = linear_back(&dk, &lc.a, len, d, self.p(li.k_w), d, dw, db);
            let (dw, db) = two_mut(grads, li.v_w, li.v_b);
            let dav = linear_back(&dv, &lc.a, len, d, self.p(li.v_w), d, dw, db);
            for i in 0..len * d {
                da[i] += dak[i] + dav[i];
            }
            let (dg, db) = two_mut(grads, li.ln1_g, li.ln1_b);
            let dxin = layer_norm_back(&da, &lc.ln1, len, d, self.p(li.ln1_g), dg, db);
            for i in 0..len * d {
                dx[i] += dxin[i];
            }
        }
        for (p, &id) in ec.ids.iter().enumerate() {
            let row = &dx[p * d..(p + 1) * d];
            axpy(
                T::one(),
                row,
                &mut grads[idx.word][id as usize * d..(id as usize + 1) * d],
            );
            axpy(T::one(), row, &mut grads[idx.pos][p * d..(p + 1) * d]);
        }
    }

    /// Cross-entropy summed over labelled positions of one sequence, with
    /// gradients (multiplied by `scale`) accumulated into `grads`.
    fn seq_loss_grad(
        &self,
        ids: &[u32],
        attention: &[u8],
        labels: &[i64],
        scale: T,
        grads: &mut Grads<T>,
        dropout: Option<&mut Rng>,
    ) -> f64 {
        let len = attention.iter().rposition(|&m| m != 0).map_or(0, |p| p + 1);
        let positions: Vec<usize> = (0..len).filter(|&p| labels[p] != IGNORE_LABEL).collect();
        if positions.is_empty() {
            return 0.0;
        }
        let key_mask: Vec<bool> = attention[..len].iter().map(|&m| m != 0).collect();
        let (hidden, ec) = self.encode_seq(&ids[..len], &key_mask, dropout);
        let (mut logits, hc) = self.head(&hidden, &positions);
        let vsz = self.config.vocab_size;
        let mut loss = 0.0;
        for (r, &p) in positions.iter().enumerate() {
            let row = &mut logits[r * vsz..(r + 1) * vsz];
            let target = labels[p] as usize;
            let target_logit = row[target];
            let lse = softmax_in_place(row);
            loss += (lse - target_logit).f64();
            row[target] -= T::one();
            row.iter_mut().for_each(|g| *g *= scale);
        }
        let mut dhidden = vec![T::zero(); len * self.config.d_model];
        self.head_back(&logits, &hc, grads, &mut dhidden);
        self.encoder_back(&dhidden, &ec, grads);
        loss
    }

    /// Mean masked-LM loss over a batch and its gradient.
    ///
    /// With no labelled positions the loss is 0 and every gradient is zero.
    /// `dropout_seed` seeds per-sequence dropout masks; `None` disables dropout.
    pub fn loss_and_grad(
        &self,
        batch: &MaskedBatch,
        dropout_seed: Option<u64>,
    ) -> Result<(f64, Grads<T>)> {
        self.check_batch(batch)?;
        let total = batch.num_targets();
        if total == 0 {
            log::warn!("batch has no masked positions; loss defined as 0");
            return Ok((0.0, self.zero_grads()));
        }
        let scale = T::of(1.0 / total as f64);
        let seqs: Vec<usize> = (0..batch.batch).collect();
        let partials: Vec<(f64, Grads<T>)> = seqs
            .par_chunks(GRAD_CHUNK)
            .map(|chunk| {
                let mut g = self.zero_grads();
                let mut loss = 0.0;
                for &b in chunk {
                    let mut rng = dropout_seed.map(|s| rng_from(s, &[b as u64]));
                    loss += self.seq_loss_grad(
                        batch.ids(b),
                        batch.mask(b),
                        batch.labels(b),
                        scale,
                        &mut g,
                        rng.as_mut(),
                    );
                }
                (loss, g)
            })
            .collect();
        let mut iter = partials.into_iter();
        let (mut loss, mut grads) = iter.next().expect("batch is non-empty");
        for (l, g) in iter {
            loss += l;
            for (acc, part) in grads.iter_mut().zip(&g) {
                axpy(T::one(), part, acc);
            }
        }
        Ok((loss / total as f64, grads))
    }

    fn check_batch(&self, batch: &MaskedBatch) -> Result<()> {
        if batch.max_len > self.config.max_len {
            return Err(Error::Contract(format!(
                "batch length {} exceeds model max_len {}",
                batch.max_len, self.config.max_len
            )));
        }
        if let Some(&bad) = batch
            .input_ids
            .iter()
            .find(|&&id| id as usize >= self.config.vocab_size)
        {
            return Err(Error::Contract(format!(
                "token id {bad} outside vocabulary of {}",
                self.config.vocab_size
            )));
        }
        Ok(())
    }

    /// Logits at every position, padding included. Dropout is off.
    pub fn forward(&self, batch: &MaskedBatch) -> Result<Logits<T>> {
        self.check_batch(batch)?;
        let (n, len, vsz) = (batch.batch, batch.max_len, self.config.vocab_size);
        let rows: Vec<Vec<T>> = (0..n)
            .into_par_iter()
            .map(|b| {
                let key_mask: Vec<bool> = batch.mask(b).iter().map(|&m| m != 0).collect();
                let (hidden, _) = self.encode_seq(batch.ids(b), &key_mask, None);
                let positions: Vec<usize> = (0..len).collect();
                self.head(&hidden, &positions).0
            })
            .collect();
        let mut data = Vec::with_capacity(n * len * vsz);
        rows.into_iter().for_each(|r| data.extend(r));
        Ok(Logits {
            batch: n,
            max_len: len,
            vocab: vsz,
            data,
        })
    }

    /// Final-layer hidden states `[len, d_model]` for the non-padding prefix.
    pub fn hidden_states(&self, ids: &[u32], attention: &[u8]) -> Vec<T> {
        let len = attention.iter().rposition(|&m| m != 0).map_or(0, |p| p + 1);
        let key_mask = vec![true; len];
        self.encode_seq(&ids[..len], &key_mask, None).0
    }

    /// Logits of the output head at one position.
    pub fn logits_at(&self, ids: &[u32], attention: &[u8], position: usize) -> Vec<T> {
        let hidden = self.hidden_states(ids, attention);
        self.head(&hidden, &[position]).0
    }

    pub fn to_f64(&self) -> Model<f64> {
        Model {
            config: self.config.clone(),
            arch: self.arch.clone(),
            params: self
                .params
                .iter()
                .map(|p| p.iter().map(|v| v.f64()).collect())
                .collect(),
        }
    }
}

fn two_mut<T>(v: &mut [Vec<T>], a: usize, b: usize) -> (&mut [T], &mut [T]) {
    assert_ne!(a, b);
    if a < b {
        let (lo, hi) = v.split_at_mut(b);
        (&mut lo[a], &mut hi[0])
    } else {
        let (lo, hi) = v.split_at_mut(a);
        (&mut hi[0], &mut lo[b])
    }
}

/// Mean cross-entropy of `logits` against `labels` over non-ignored positions.
/// Returns 0 (and logs a warning) when nothing is labelled.
pub fn mlm_loss<T: Real>(logits: &Logits<T>, labels: &[i64]) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for b in 0..logits.batch {
        for p in 0..logits.max_len {
            let label = labels[b * logits.max_len + p];
            if label == IGNORE_LABEL {
                continue;
            }
            let mut row: Vec<T> = logits.at(b, p).to_vec();
            let target = row[label as usize];
            let lse = softmax_in_place(&mut row);
            total += (lse - target).f64();
            count += 1;
        }
    }
    if count == 0 {
        log::warn!("no masked positions; loss defined as 0");
        return 0.0;
    }
    total / count as f64
}
