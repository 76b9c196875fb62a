//! PCA of flattened checkpoint weights through the Gram matrix.

use glob::Pattern;
use nalgebra::{DMatrix, SymmetricEigen};

use crate::mlm::Checkpoint;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    /// Row `i` holds the first two principal coordinates of input row `i`.
    pub coords: Vec<[f64; 2]>,
    /// Fraction of total variance explained by each component.
    pub explained: [f64; 2],
    /// Unit-norm principal axes in the input space.
    pub components: [Vec<f64>; 2],
    pub mean: Vec<f64>,
}

/// Tensor names matched by a comma-separated list of globs, in name order.
pub fn select_tensors(ckpt: &Checkpoint, selector: &str) -> Result<Vec<String>> {
    let pats: Vec<Pattern> = selector
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| Pattern::new(s).map_err(|e| Error::Config(format!("bad layer glob `{s}`: {e}"))))
        .collect::<Result<_>>()?;
    let mut names: Vec<String> = ckpt
        .tensors
        .iter()
        .filter(|t| pats.iter().any(|p| p.matches(&t.name)))
        .map(|t| t.name.clone())
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(Error::Config(format!(
            "selector `{selector}` matches no tensor"
        )));
    }
    Ok(names)
}

/// Concatenates the selected tensors of each checkpoint into one row.
pub fn flatten(ckpts: &[Checkpoint], selector: &str) -> Result<(Vec<Vec<f64>>, Vec<String>)> {
    let first = ckpts
        .first()
        .ok_or_else(|| Error::Config("no checkpoints given".into()))?;
    let names = select_tensors(first, selector)?;
    let mut rows = Vec::with_capacity(ckpts.len());
    for c in ckpts {
        let mut row = Vec::new();
        for name in &names {
            let t = c
                .tensor(name)
                .ok_or_else(|| Error::Contract(format!("checkpoint lacks tensor {name}")))?;
            let want = &first.tensor(name).expect("selected from first").shape;
            if &t.shape != want {
                return Err(Error::Contract(format!(
                    "tensor {name} has shape {:?}, expected {want:?}",
                    t.shape
                )));
            }
            row.extend(t.data.iter().map(|&v| v as f64));
        }
        rows.push(row);
    }
    Ok((rows, names))
}

/// Top-2 PCA of `rows` (n × D, n small). Each axis is oriented so that its
/// largest-magnitude loading is positive.
pub fn pca2(rows: &[Vec<f64>]) -> Result<Pca> {
    let n = rows.len();
    if n < 3 {
        return Err(Error::Config(format!("PCA needs at least 3 rows, got {n}")));
    }
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::Contract("PCA rows differ in length".into()));
    }
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();
    let gram = DMatrix::from_fn(n, n, |i, j| {
        centered[i]
            .iter()
            .zip(&centered[j])
            .map(|(a, b)| a * b)
            .sum::<f64>()
    });
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let total: f64 = eig.eigenvalues.iter().map(|&l| l.max(0.0)).sum();
    if total <= 0.0 {
        return Err(Error::Degenerate(
            "all rows are identical; no variance to explain".into(),
        ));
    }
    let mut coords = vec![[0.0; 2]; n];
    let mut explained = [0.0; 2];
    let mut components = [vec![0.0; d], vec![0.0; d]];
    for k in 0..2 {
        let idx = order[k];
        let lambda = eig.eigenvalues[idx].max(0.0);
        explained[k] = lambda / total;
        if lambda <= total * 1e-15 {
            continue;
        }
        let u = eig.eigenvectors.column(idx);
        let s = lambda.sqrt();
        let mut axis = vec![0.0; d];
        for (i, row) in centered.iter().enumerate() {
            for (a, v) in axis.iter_mut().zip(row) {
                *a += u[i] * v;
            }
        }
        axis.iter_mut().for_each(|a| *a /= s);
        let pivot =
            axis.iter().enumerate().fold(
                0,
                |best, (i, v)| if v.abs() > axis[best].abs() { i } else { best },
            );
        let sign = if axis[pivot] < 0.0 { -1.0 } else { 1.0 };
        axis.iter_mut().for_each(|a| *a *= sign);
        for i in 0..n {
            coords[i][k] = sign * u[i] * s;
        }
        components[k] = axis;
    }
    Ok(Pca {
        coords,
        explained,
        components,
        mean,
    })
}

pub fn pca_weights(ckpts: &[Checkpoint], selector: &str) -> Result<Pca> {
    let (rows, _) = flatten(ckpts, selector)?;
    pca2(&rows)
}
