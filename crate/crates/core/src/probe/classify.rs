//! Probe classifiers and F1 scores.

use crate::{Error, Result};

/// A classifier the performance matrix can fit per cell.
pub trait ProbeClassifier: Sync {
    fn name(&self) -> &str;

    /// Fits on `(x, y)` with labels in `0..n_classes` and predicts `test`.
    fn fit_predict(
        &self,
        x: &[Vec<f64>],
        y: &[usize],
        n_classes: usize,
        test: &[Vec<f64>],
    ) -> Result<Vec<usize>>;
}

/// Multinomial logistic regression trained by full-batch gradient descent
/// on standardized features.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegression {
    pub lr: f64,
    pub max_epochs: usize,
    /// Stops when the loss improves by less than this.
    pub tol: f64,
}

impl Default for LogisticRegression {
    fn default() -> Self {
        LogisticRegression {
            lr: 0.5,
            max_epochs: 500,
            tol: 1e-6,
        }
    }
}

/// Column means and standard deviations (population; zero sd becomes 1).
pub fn standardizer(x: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let d = x.first().map_or(0, Vec::len);
    let n = x.len().max(1) as f64;
    let mut mean = vec![0.0; d];
    for row in x {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut sd = vec![0.0; d];
    for row in x {
        for ((s, v), m) in sd.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    for s in sd.iter_mut() {
        *s = (*s / n).sqrt();
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    (mean, sd)
}

fn apply(x: &[Vec<f64>], mean: &[f64], sd: &[f64]) -> Vec<Vec<f64>> {
    x.iter()
        .map(|r| {
            r.iter()
                .zip(mean)
                .zip(sd)
                .map(|((v, m), s)| (v - m) / s)
                .collect()
        })
        .collect()
}

fn softmax(z: &mut [f64]) {
    let mx = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in z.iter_mut() {
        *v = (*v - mx).exp();
        s += *v;
    }
    z.iter_mut().for_each(|v| *v /= s);
}

impl LogisticRegression {
    /// Returns `(weights [k][d+1], mean, sd)`; the last weight column is the bias.
    pub fn fit(
        &self,
        x: &[Vec<f64>],
        y: &[usize],
        k: usize,
    ) -> Result<(Vec<Vec<f64>>, Vec<f64>, Vec<f64>)> {
        let distinct: std::collections::BTreeSet<usize> = y.iter().copied().collect();
        if distinct.len() < 2 {
            return Err(Error::Degenerate(format!(
                "training set has {} class(es); need at least 2",
                distinct.len()
            )));
        }
        let (mean, sd) = standardizer(x);
        let xs = apply(x, &mean, &sd);
        let d = mean.len();
        let n = xs.len() as f64;
        let mut w = vec![vec![0.0; d + 1]; k];
        let mut prev = f64::INFINITY;
        let mut p = vec![0.0; k];
        for _ in 0..self.max_epochs {
            let mut g = vec![vec![0.0; d + 1]; k];
            let mut loss = 0.0;
            for (row, &label) in xs.iter().zip(y) {
                for c in 0..k {
                    p[c] = w[c][d] + w[c][..d].iter().zip(row).map(|(a, b)| a * b).sum::<f64>();
                }
                softmax(&mut p);
                loss -= p[label].max(1e-300).ln();
                for c in 0..k {
                    let e = p[c] - if c == label { 1.0 } else { 0.0 };
                    for j in 0..d {
                        g[c][j] += e * row[j];
                    }
                    g[c][d] += e;
                }
            }
            loss /= n;
            for c in 0..k {
                for j in 0..=d {
                    w[c][j] -= self.lr * g[c][j] / n;
                }
            }
            if (prev - loss).abs() < self.tol {
                break;
            }
            prev = loss;
        }
        Ok((w, mean, sd))
    }
}

impl ProbeClassifier for LogisticRegression {
    fn name(&self) -> &str {
        "logistic-regression"
    }

    fn fit_predict(
        &self,
        x: &[Vec<f64>],
        y: &[usize],
        k: usize,
        test: &[Vec<f64>],
    ) -> Result<Vec<usize>> {
        let (w, mean, sd) = self.fit(x, y, k)?;
        let d = mean.len();
        Ok(apply(test, &mean, &sd)
            .iter()
            .map(|row| {
                let scores: Vec<f64> = w
                    .iter()
                    .map(|wc| wc[d] + wc[..d].iter().zip(row).map(|(a, b)| a * b).sum::<f64>())
                    .collect();
                (0..k).fold(0, |best, c| if scores[c] > scores[best] { c } else { best })
            })
            .collect())
    }
}

/// Macro F1 over the classes that occur in `truth` or `pred`.
pub fn macro_f1(truth: &[usize], pred: &[usize]) -> f64 {
    let classes: std::collections::BTreeSet<usize> = truth.iter().chain(pred).copied().collect();
    if classes.is_empty() {
        return 0.0;
    }
    classes
        .iter()
        .map(|&c| binary_f1(truth, pred, c))
        .sum::<f64>()
        / classes.len() as f64
}

/// F1 of class `positive`; 0 when it is neither present nor predicted.
pub fn binary_f1(truth: &[usize], pred: &[usize], positive: usize) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&t, &p) in truth.iter().zip(pred) {
        match (t == positive, p == positive) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            _ => {}
        }
    }
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    #[test]
    fn separable_two_class() {
        let x: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                vec![
                    if i < 20 {
                        -1.0 - i as f64 * 0.1
                    } else {
                        1.0 + i as f64 * 0.1
                    },
                    0.3,
                ]
            })
            .collect();
        let y: Vec<usize> = (0..40).map(|i| (i >= 20) as usize).collect();
        let pred = LogisticRegression::default()
            .fit_predict(&x, &y, 2, &x)
            .unwrap();
        assert_eq!(macro_f1(&y, &pred), 1.0);
    }

    #[test]
    fn random_labels_are_near_chance() {
        let mut rng = seeded(5);
        let k = 4;
        let mut total = 0.0;
        let reps = 10;
        for _ in 0..reps {
            let x: Vec<Vec<f64>> = (0..400)
                .map(|_| (0..5).map(|_| rng.random::<f64>()).collect())
                .collect();
            let y: Vec<usize> = (0..400).map(|i| i % k).collect();
            let xt: Vec<Vec<f64>> = (0..400)
                .map(|_| (0..5).map(|_| rng.random::<f64>()).collect())
                .collect();
            let yt: Vec<usize> = (0..400).map(|i| i % k).collect();
            let pred = LogisticRegression::default()
                .fit_predict(&x, &y, k, &xt)
                .unwrap();
            total += macro_f1(&yt, &pred);
        }
        let mean = total / reps as f64;
        assert!((mean - 1.0 / k as f64).abs() < 0.1, "{mean}");
    }

    #[test]
    fn single_class_is_degenerate() {
        let x = vec![vec![1.0], vec![2.0]];
        assert!(matches!(
            LogisticRegression::default().fit(&x, &[0, 0], 2),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn f1_values() {
        assert_eq!(binary_f1(&[1, 1, 0, 0], &[1, 0, 1, 0], 1), 0.5);
        assert_eq!(macro_f1(&[0, 1, 2], &[0, 1, 2]), 1.0);
        assert_eq!(binary_f1(&[0, 0], &[0, 0], 1), 0.0);
    }
}
