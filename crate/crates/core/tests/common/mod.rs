//! Independent oracles shared by the integration suites.
#![allow(dead_code)]

pub mod graph;

use chronolm::mlm::{MaskedBatch, Model, ModelConfig, Real};
use chronolm::rng::seeded;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// A model whose every parameter, gains and biases included, is random.
pub fn random_model<T: Real>(cfg: ModelConfig, seed: u64, std: f64) -> Model<T> {
    let mut m = Model::<T>::init(cfg).unwrap();
    let mut rng = seeded(seed);
    let normal = Normal::new(0.0, std).unwrap();
    for (spec, p) in m.arch.specs.iter().zip(m.params.iter_mut()) {
        let base = if spec.name.ends_with(".gain") {
            1.0
        } else {
            0.0
        };
        for v in p.iter_mut() {
            *v = T::of(base + normal.sample(&mut rng) as f32 as f64);
        }
    }
    m
}

fn layer_norm(x: &[f64], g: &[f64], b: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    x.iter()
        .enumerate()
        .map(|(i, v)| (v - mean) / (var + 1e-12).sqrt() * g[i] + b[i])
        .collect()
}

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + ((2.0 / std::f64::consts::PI).sqrt() * (x + 0.044715 * x.powi(3))).tanh())
}

fn dense(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let din = x.len();
    (0..b.len())
        .map(|o| {
            let mut s = b[o];
            for i in 0..din {
                s += w[o * din + i] * x[i];
            }
            s
        })
        .collect()
}

/// Plain-loop encoder + head. Returns logits for every position of `ids`.
pub fn naive_logits(m: &Model<f64>, ids: &[u32], attention: &[u8]) -> Vec<Vec<f64>> {
    let c = &m.config;
    let (d, nh) = (c.d_model, c.n_heads);
    let dh = d / nh;
    let t = |name: &str| m.tensor(name).unwrap_or_else(|| panic!("missing {name}"));
    let word = t("embedding.word");
    let pos = t("embedding.position");
    let len = ids.len();
    let mut x: Vec<Vec<f64>> = (0..len)
        .map(|p| {
            (0..d)
                .map(|i| word[ids[p] as usize * d + i] + pos[p * d + i])
                .collect()
        })
        .collect();
    for l in 0..c.n_layers {
        let n = |s: &str| format!("layer.{l}.{s}");
        let a: Vec<Vec<f64>> = x
            .iter()
            .map(|r| {
                layer_norm(
                    r,
                    t(&n("attention.norm.gain")),
                    t(&n("attention.norm.bias")),
                )
            })
            .collect();
        let q: Vec<Vec<f64>> = a
            .iter()
            .map(|r| {
                dense(
                    t(&n("attention.query.weight")),
                    t(&n("attention.query.bias")),
                    r,
                )
            })
            .collect();
        let k: Vec<Vec<f64>> = a
            .iter()
            .map(|r| {
                dense(
                    t(&n("attention.key.weight")),
                    t(&n("attention.key.bias")),
                    r,
                )
            })
            .collect();
        let v: Vec<Vec<f64>> = a
            .iter()
            .map(|r| {
                dense(
                    t(&n("attention.value.weight")),
                    t(&n("attention.value.bias")),
                    r,
                )
            })
            .collect();
        let mut ctx = vec![vec![0.0; d]; len];
        for h in 0..nh {
            for i in 0..len {
                let mut s = vec![f64::NEG_INFINITY; len];
                for j in 0..len {
                    if attention[j] != 0 {
                        s[j] = (0..dh)
                            .map(|e| q[i][h * dh + e] * k[j][h * dh + e])
                            .sum::<f64>()
                            / (dh as f64).sqrt();
                    }
                }
                let mx = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = s.iter().map(|v| (v - mx).exp()).sum();
                for j in 0..len {
                    let p = (s[j] - mx).exp() / z;
                    for e in 0..dh {
                        ctx[i][h * dh + e] += p * v[j][h * dh + e];
                    }
                }
            }
        }
        for i in 0..len {
            let o = dense(
                t(&n("attention.output.weight")),
                t(&n("attention.output.bias")),
                &ctx[i],
            );
            for e in 0..d {
                x[i][e] += o[e];
            }
            let cn = layer_norm(&x[i], t(&n("ffn.norm.gain")), t(&n("ffn.norm.bias")));
            let u: Vec<f64> = dense(t(&n("ffn.up.weight")), t(&n("ffn.up.bias")), &cn)
                .into_iter()
                .map(gelu)
                .collect();
            let f = dense(t(&n("ffn.down.weight")), t(&n("ffn.down.bias")), &u);
            for e in 0..d {
                x[i][e] += f[e];
            }
        }
    }
    let dec = if c.tie_embeddings {
        word
    } else {
        t("head.decoder.weight")
    };
    x.iter()
        .map(|r| {
            let hidden = layer_norm(r, t("final_norm.gain"), t("final_norm.bias"));
            let z = if c.head_transform {
                let tr: Vec<f64> = dense(
                    t("head.transform.weight"),
                    t("head.transform.bias"),
                    &hidden,
                )
                .into_iter()
                .map(gelu)
                .collect();
                layer_norm(&tr, t("head.norm.gain"), t("head.norm.bias"))
            } else {
                hidden
            };
            dense(dec, t("head.decoder.bias"), &z)
        })
        .collect()
}

/// Largest relative error between analytic gradients and central differences
/// over `probes` random entries of every tensor.
///
/// Relative error is `|g - fd| / max(|g|, |fd|, floor)`; the floor keeps
/// entries whose true gradient is below the difference noise from dominating.
pub fn mlm_grad_check<T: Real>(
    m: &Model<T>,
    batch: &MaskedBatch,
    probes: usize,
    h: f64,
    floor: f64,
    seed: u64,
) -> (f64, String) {
    let (_, grads) = m.loss_and_grad(batch, None).unwrap();
    let mut rng = seeded(seed);
    let mut worst = (0.0, String::new());
    for (ti, spec) in m.arch.specs.iter().enumerate() {
        for _ in 0..probes {
            let j = rng.random_range(0..spec.numel());
            let mut plus = m.clone();
            plus.params[ti][j] += T::of(h);
            let mut minus = m.clone();
            minus.params[ti][j] -= T::of(h);
            let step = (plus.params[ti][j] - minus.params[ti][j]).f64();
            let fd = (plus.loss_and_grad(batch, None).unwrap().0
                - minus.loss_and_grad(batch, None).unwrap().0)
                / step;
            let g = grads[ti][j].f64();
            let rel = (g - fd).abs() / g.abs().max(fd.abs()).max(floor);
            if rel > worst.0 {
                worst = (
                    rel,
                    format!("{}[{j}] analytic {g:e} numeric {fd:e}", spec.name),
                );
            }
        }
    }
    worst
}
