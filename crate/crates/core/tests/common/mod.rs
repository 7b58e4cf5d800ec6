#![allow(dead_code)]

use lsrefit_core::Instance;
use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sylvester Hadamard matrix of order `2^k`.
pub fn hadamard(k: u32) -> DMatrix<f64> {
    let mut h = DMatrix::from_element(1, 1, 1.0);
    for _ in 0..k {
        let m = h.nrows();
        let mut next = DMatrix::zeros(2 * m, 2 * m);
        for i in 0..m {
            for j in 0..m {
                let v = h[(i, j)];
                next[(i, j)] = v;
                next[(i, j + m)] = v;
                next[(i + m, j)] = v;
                next[(i + m, j + m)] = -v;
            }
        }
        h = next;
    }
    h
}

/// `p` randomly chosen, randomly signed Hadamard columns of order `2^k`:
/// entries ±1, so `XᵀX = n·I` holds exactly in floating point.
pub fn orthogonal_design<R: Rng>(k: u32, p: usize, rng: &mut R) -> DMatrix<f64> {
    let h = hadamard(k);
    let n = h.nrows();
    let cols = sample(rng, n, p).into_vec();
    let flips: Vec<f64> = (0..p).map(|_| if rng.random_bool(0.5) { -1.0 } else { 1.0 }).collect();
    DMatrix::from_fn(n, p, |i, j| flips[j] * h[(i, cols[j])])
}

pub fn normals<R: Rng>(rng: &mut R, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

/// Instance with known noise on a given design.
pub fn instance_on(x: DMatrix<f64>, beta_star: DVector<f64>, sigma: f64, eps: DVector<f64>) -> Instance {
    let y = &x * &beta_star + &eps * sigma;
    let support = (0..beta_star.len()).filter(|&j| beta_star[j] != 0.0).collect();
    Instance { x, y, beta_star, noise: Some(eps), sigma, support }
}

/// Soft thresholding written out from the KKT conditions of an orthogonal design.
pub fn orthogonal_lasso(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let n = x.nrows() as f64;
    let z = x.transpose() * y / n;
    let t = lambda / (2.0 * n);
    z.map(|v| if v > t { v - t } else if v < -t { v + t } else { 0.0 })
}

/// Textbook Gauss-Jordan inversion with partial pivoting.
pub fn gauss_jordan_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    let k = a.nrows();
    let mut m = a.clone();
    let mut inv = DMatrix::<f64>::identity(k, k);
    for c in 0..k {
        let piv = (c..k).max_by(|&i, &j| m[(i, c)].abs().total_cmp(&m[(j, c)].abs())).unwrap();
        m.swap_rows(c, piv);
        inv.swap_rows(c, piv);
        let d = m[(c, c)];
        assert!(d.abs() > 1e-300, "singular matrix");
        for j in 0..k {
            m[(c, j)] /= d;
            inv[(c, j)] /= d;
        }
        for r in 0..k {
            if r != c {
                let f = m[(r, c)];
                for j in 0..k {
                    m[(r, j)] -= f * m[(c, j)];
                    inv[(r, j)] -= f * inv[(c, j)];
                }
            }
        }
    }
    inv
}

/// `max |X_iᵀX_j|` over ordered pairs by explicit triple loop.
pub fn brute_coherence(x: &DMatrix<f64>, a: &[usize]) -> (f64, f64) {
    let (n, p) = x.shape();
    let mut all = 0.0_f64;
    let mut within = 0.0_f64;
    for &i in a {
        for j in 0..p {
            if i == j {
                continue;
            }
            let mut s = 0.0;
            for r in 0..n {
                s += x[(r, i)] * x[(r, j)];
            }
            all = all.max(s.abs());
            if a.contains(&j) {
                within = within.max(s.abs());
            }
        }
    }
    (all, within)
}
