//! Principal component projection for plotting document vectors.
//!
//! Eigenvectors come from a cyclic Jacobi sweep over whichever of the
//! covariance (`dim x dim`) or Gram (`n x n`) matrix is smaller.

use crate::error::{Error, Result};

/// Fitted projection.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Unit principal directions, one per output component.
    pub components: Vec<Vec<f64>>,
    /// Variance captured by each component, non-increasing.
    pub explained_variance: Vec<f64>,
    /// Projected coordinates, one row per input vector.
    pub scores: Vec<Vec<f64>>,
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations. Returns
/// eigenvalues sorted descending with matching column eigenvectors.
fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&i| v.iter().map(|row| row[i]).collect())
        .collect();
    (values, vectors)
}

fn normalize_in_place(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Flips `v` so its largest-magnitude entry is positive.
fn fix_sign(v: &mut [f64]) {
    let pivot = v
        .iter()
        .copied()
        .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

impl Pca {
    pub fn fit<T: Copy + Into<f64>>(vectors: &[Vec<T>], out_dim: usize) -> Result<Pca> {
        let n = vectors.len();
        if n < 2 {
            return Err(Error::DegenerateInput(format!("need at least 2 vectors, got {n}")));
        }
        let dim = vectors[0].len();
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::DegenerateInput("vectors differ in dimension".into()));
        }
        if out_dim == 0 || out_dim > dim {
            return Err(Error::Config(format!("out_dim {out_dim} must lie in 1..={dim}")));
        }
        let x: Vec<Vec<f64>> = vectors
            .iter()
            .map(|v| v.iter().map(|&e| e.into()).collect())
            .collect();
        let mut mean = vec![0.0; dim];
        for row in &x {
            for (m, &e) in mean.iter_mut().zip(row) {
                *m += e;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let centered: Vec<Vec<f64>> = x
            .iter()
            .map(|row| row.iter().zip(&mean).map(|(e, m)| e - m).collect())
            .collect();
        if centered.iter().flatten().all(|&e| e == 0.0) {
            return Err(Error::DegenerateInput("all vectors are identical".into()));
        }
        let denom = (n - 1) as f64;

        let mut components = Vec::with_capacity(out_dim);
        let mut variances = Vec::with_capacity(out_dim);
        if dim <= n {
            let mut cov = vec![vec![0.0; dim]; dim];
            for row in &centered {
                for i in 0..dim {
                    for j in i..dim {
                        cov[i][j] += row[i] * row[j];
                    }
                }
            }
            for i in 0..dim {
                for j in i..dim {
                    cov[i][j] /= denom;
                    cov[j][i] = cov[i][j];
                }
            }
            let (values, vectors) = jacobi_eigen(cov);
            for (val, vec) in values.into_iter().zip(vectors).take(out_dim) {
                components.push(vec);
                variances.push(val.max(0.0));
            }
        } else {
            // Gram route: if G u = l u with G = X X^T, then X^T u / |X^T u|
            // is a covariance eigenvector with variance l / (n - 1).
            let gram: Vec<Vec<f64>> = centered
                .iter()
                .map(|a| {
                    centered
                        .iter()
                        .map(|b| a.iter().zip(b).map(|(x, y)| x * y).sum())
                        .collect()
                })
                .collect();
            let (values, vectors) = jacobi_eigen(gram);
            let tol = 1e-12 * values.first().copied().unwrap_or(0.0).abs();
            for (val, u) in values.into_iter().zip(vectors).take(out_dim) {
                let mut dir = vec![0.0; dim];
                if val > tol {
                    for (row, &ui) in centered.iter().zip(&u) {
                        for (d, &e) in dir.iter_mut().zip(row) {
                            *d += ui * e;
                        }
                    }
                    normalize_in_place(&mut dir);
                }
                components.push(dir);
                variances.push((val / denom).max(0.0));
            }
        }
        while components.len() < out_dim {
            components.push(vec![0.0; dim]);
            variances.push(0.0);
        }
        for c in components.iter_mut() {
            fix_sign(c);
        }
        let scores = centered
            .iter()
            .map(|row| {
                components
                    .iter()
                    .map(|c| c.iter().zip(row).map(|(a, b)| a * b).sum())
                    .collect()
            })
            .collect();
        Ok(Pca {
            mean,
            components,
            explained_variance: variances,
            scores,
        })
    }

    /// Maps projected coordinates back into the input space.
    pub fn reconstruct(&self, score: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, &s) in self.components.iter().zip(score) {
            for (o, &e) in out.iter_mut().zip(c) {
                *o += s * e;
            }
        }
        out
    }
}

/// Projects `vectors` onto their top `out_dim` principal components.
pub fn pca_project<T: Copy + Into<f64>>(vectors: &[Vec<T>], out_dim: usize) -> Result<Vec<Vec<f64>>> {
    Pca::fit(vectors, out_dim).map(|p| p.scores)
}
