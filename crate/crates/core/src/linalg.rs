//! Small dense symmetric kernels and a banded Cholesky factorization.

use crate::error::{Error, Result};

/// Cyclic Jacobi on a row-major symmetric `n x n` matrix.
/// Returns eigenvalues; `vectors` receives eigenvectors as columns.
pub fn jacobi_eigen(a: &[f64], n: usize, vectors: &mut [f64]) -> Vec<f64> {
    let mut m = a.to_vec();
    vectors.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..n {
        vectors[i * n + i] = 1.0;
    }
    if n == 1 {
        return vec![m[0]];
    }
    let scale: f64 = m.iter().map(|v| v * v).sum::<f64>().sqrt();
    for _sweep in 0..60 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[p * n + q] * m[p * n + q];
            }
        }
        if off.sqrt() <= 1e-17 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = vectors[k * n + p];
                    let vkq = vectors[k * n + q];
                    vectors[k * n + p] = c * vkp - s * vkq;
                    vectors[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    (0..n).map(|i| m[i * n + i]).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Perron {
    pub value: f64,
    /// Nonnegative, unit Euclidean norm.
    pub vector: Vec<f64>,
    pub residual: f64,
}

/// Largest eigenvalue of a symmetric matrix with nonnegative off-diagonal entries,
/// with its nonnegative eigenvector.
pub fn perron(s: &[f64], n: usize) -> Result<Perron> {
    if s.len() != n * n {
        return Err(Error::Dimension(format!("expected {} entries, got {}", n * n, s.len())));
    }
    let scale = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (s[i * n + j], s[j * n + i]);
            if (a - b).abs() > 1e-12 * (1.0 + scale) {
                return Err(Error::Validation(format!("matrix not symmetric at ({i},{j}): {a} vs {b}")));
            }
            if a < 0.0 {
                return Err(Error::Validation(format!("negative off-diagonal entry {a} at ({i},{j})")));
            }
        }
    }
    Ok(perron_unchecked(s, n))
}

pub(crate) fn perron_unchecked(s: &[f64], n: usize) -> Perron {
    if n == 1 {
        return Perron { value: s[0], vector: vec![1.0], residual: 0.0 };
    }
    if n == 2 {
        let (a, b, c) = (s[0], 0.5 * (s[1] + s[2]), s[3]);
        let half = 0.5 * (a - c);
        let root = (half * half + b * b).sqrt();
        let value = 0.5 * (a + c) + root;
        // eigenvector of [[a,b],[b,c]] for the larger root, chosen to avoid cancellation
        let (mut v0, mut v1) = if half >= 0.0 { (half + root, b) } else { (b, root - half) };
        let norm = (v0 * v0 + v1 * v1).sqrt();
        if norm == 0.0 {
            v0 = 1.0;
            v1 = 0.0;
        } else {
            v0 /= norm;
            v1 /= norm;
        }
        return Perron { value, vector: vec![v0.abs(), v1.abs()], residual: 0.0 };
    }
    let shift = (0..n).fold(0.0f64, |m, i| m.max(s[i * n + i].abs())) + 1.0;
    let mut shifted = s.to_vec();
    for i in 0..n {
        shifted[i * n + i] += shift;
    }
    let mut vecs = vec![0.0; n * n];
    let vals = jacobi_eigen(&shifted, n, &mut vecs);
    let mut best = 0;
    for k in 1..n {
        if vals[k] > vals[best] {
            best = k;
        }
    }
    let mut v: Vec<f64> = (0..n).map(|i| vecs[i * n + best]).collect();
    let sum: f64 = v.iter().sum();
    if sum < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v.iter_mut().for_each(|x| *x = x.max(0.0));
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    let value = vals[best] - shift;
    let mut residual = 0.0f64;
    for i in 0..n {
        let r: f64 = (0..n).map(|j| s[i * n + j] * v[j]).sum::<f64>() - value * v[i];
        residual = residual.max(r.abs());
    }
    Perron { value, vector: v, residual }
}

/// Principal eigenvalue of a symmetric matrix with nonnegative off-diagonals.
pub fn perron_value(s: &[f64], n: usize) -> Result<f64> {
    perron(s, n).map(|p| p.value)
}

/// `exp(S)` for symmetric `S`, written into `out`.
pub fn sym_exp(s: &[f64], n: usize, out: &mut [f64]) {
    match n {
        1 => out[0] = s[0].exp(),
        2 => {
            let (a, b, c) = (s[0], 0.5 * (s[1] + s[2]), s[3]);
            let mean = 0.5 * (a + c);
            let half = 0.5 * (a - c);
            let r = (half * half + b * b).sqrt();
            let e = mean.exp();
            let ch = r.cosh();
            // sinh(r)/r, stable near zero
            let shc = if r < 1e-4 { 1.0 + r * r / 6.0 } else { r.sinh() / r };
            out[0] = e * (ch + half * shc);
            out[1] = e * b * shc;
            out[2] = out[1];
            out[3] = e * (ch - half * shc);
        }
        _ => {
            let mut vecs = vec![0.0; n * n];
            let vals = jacobi_eigen(s, n, &mut vecs);
            for i in 0..n {
                for j in 0..n {
                    out[i * n + j] = (0..n).map(|k| vecs[i * n + k] * vals[k].exp() * vecs[j * n + k]).sum();
                }
            }
        }
    }
}

/// Symmetric positive definite band matrix, lower band stored row-wise:
/// `band[p * (bw + 1) + k] = A[p][p - k]`.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    pub size: usize,
    pub bw: usize,
    pub band: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(size: usize, bw: usize) -> Self {
        Self { size, bw, band: vec![0.0; size * (bw + 1)] }
    }

    pub fn add(&mut self, p: usize, q: usize, v: f64) {
        let (p, q) = if p >= q { (p, q) } else { (q, p) };
        let k = p - q;
        debug_assert!(k <= self.bw);
        self.band[p * (self.bw + 1) + k] += v;
    }

    pub fn get(&self, p: usize, q: usize) -> f64 {
        let (p, q) = if p >= q { (p, q) } else { (q, p) };
        let k = p - q;
        if k > self.bw {
            0.0
        } else {
            self.band[p * (self.bw + 1) + k]
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let w = self.bw + 1;
        y.iter_mut().for_each(|v| *v = 0.0);
        for p in 0..self.size {
            y[p] += self.band[p * w] * x[p];
            for k in 1..=self.bw.min(p) {
                let a = self.band[p * w + k];
                y[p] += a * x[p - k];
                y[p - k] += a * x[p];
            }
        }
    }

    /// Cholesky factor of `self - shift * I`; fails if not positive definite.
    pub fn cholesky_shifted(&self, shift: f64) -> Result<BandCholesky> {
        let w = self.bw + 1;
        let mut l = self.band.clone();
        for p in 0..self.size {
            l[p * w] -= shift;
        }
        for p in 0..self.size {
            let lo = p.saturating_sub(self.bw);
            for q in lo..=p {
                // L[p][q] = (A[p][q] - sum_{r<q} L[p][r] L[q][r]) / L[q][q]
                let mut sum = l[p * w + (p - q)];
                let rlo = lo.max(q.saturating_sub(self.bw));
                for r in rlo..q {
                    sum -= l[p * w + (p - r)] * l[q * w + (q - r)];
                }
                if q == p {
                    if sum <= 0.0 || !sum.is_finite() {
                        return Err(Error::Factorization(format!("pivot {sum:e} at row {p}")));
                    }
                    l[p * w] = sum.sqrt();
                } else {
                    l[p * w + (p - q)] = sum / l[q * w];
                }
            }
        }
        Ok(BandCholesky { size: self.size, bw: self.bw, l })
    }
}

#[derive(Debug, Clone)]
pub struct BandCholesky {
    size: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn solve(&self, x: &mut [f64]) {
        let w = self.bw + 1;
        for p in 0..self.size {
            let mut s = x[p];
            for r in p.saturating_sub(self.bw)..p {
                s -= self.l[p * w + (p - r)] * x[r];
            }
            x[p] = s / self.l[p * w];
        }
        for p in (0..self.size).rev() {
            let mut s = x[p];
            for r in p + 1..(p + self.bw + 1).min(self.size) {
                s -= self.l[r * w + (r - p)] * x[r];
            }
            x[p] = s / self.l[p * w];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perron_examples() {
        assert!((perron_value(&[0.0, 1.0, 1.0, 0.0], 2).unwrap() - 1.0).abs() < 1e-12);
        let d = [3.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 2.0];
        assert!((perron_value(&d, 3).unwrap() - 3.0).abs() < 1e-12);
        let p = perron(&[1.0, 2.0, 2.0, 1.0], 2).unwrap();
        assert!((p.value - 3.0).abs() < 1e-12);
        assert!((p.vector[0] - p.vector[1]).abs() < 1e-12);
    }

    #[test]
    fn perron_rejects_bad_input() {
        assert!(matches!(perron(&[0.0, -1.0, -1.0, 0.0], 2), Err(Error::Validation(_))));
        assert!(matches!(perron(&[0.0, 1.0, 2.0, 0.0], 2), Err(Error::Validation(_))));
        assert!(matches!(perron(&[0.0, 1.0, 2.0], 2), Err(Error::Dimension(_))));
    }

    #[test]
    fn jacobi_general() {
        let s = [2.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, -1.0];
        let p = perron(&s, 3).unwrap();
        assert!(p.residual < 1e-12);
        assert!(p.vector.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn exp_two_by_two_matches_series() {
        let s = [0.3, 0.7, 0.7, -0.2];
        let mut out = [0.0; 4];
        sym_exp(&s, 2, &mut out);
        let mut generic = [0.0; 4];
        let mut vecs = [0.0; 4];
        let vals = jacobi_eigen(&s, 2, &mut vecs);
        for i in 0..2 {
            for j in 0..2 {
                generic[i * 2 + j] = (0..2).map(|k| vecs[i * 2 + k] * vals[k].exp() * vecs[j * 2 + k]).sum();
            }
        }
        for k in 0..4 {
            assert!((out[k] - generic[k]).abs() < 1e-13);
        }
    }

    #[test]
    fn band_cholesky_solves() {
        let n = 12;
        let mut a = BandMatrix::zeros(n, 2);
        for p in 0..n {
            a.add(p, p, 4.0);
            if p >= 1 {
                a.add(p, p - 1, -1.0);
            }
            if p >= 2 {
                a.add(p, p - 2, 0.5);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut b = vec![0.0; n];
        a.matvec(&x, &mut b);
        let f = a.cholesky_shifted(0.0).unwrap();
        f.solve(&mut b);
        for i in 0..n {
            assert!((b[i] - x[i]).abs() < 1e-12);
        }
        assert!(a.cholesky_shifted(10.0).is_err());
    }
}
