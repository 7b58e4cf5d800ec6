//! Synthetic regression problems with equicorrelated Gaussian designs.
//!
//! Column `j` of the design is `√n (κv + (1−κ)ξ_j) / ‖κv + (1−κ)ξ_j‖₂` with
//! `v, ξ_1, …, ξ_p` i.i.d. standard normal in `ℝⁿ`. The regression vector is
//! `(1/s, 2/s, …, 1, 0, …, 0)` and the outcome is `Y = Xβ* + σε`.
//!
//! Every repetition draws from its own ChaCha20 stream: the key is derived from
//! the scenario seed and the stream number is the repetition index, so the
//! instance for `(cfg, rep)` does not depend on which other repetitions ran.
//! Draw order inside a stream is `v`, `ξ_1..ξ_p`, then `ε`.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{dot, mat_vec};

/// Identifier of the generator and sub-stream scheme, recorded in run metadata.
pub const PRNG_ID: &str = "ChaCha20Rng (rand_chacha 0.9); key = seed_from_u64(seed), stream = repetition index; normals via rand_distr 0.5 StandardNormal (ziggurat)";

/// Whether `v` and `ξ_j` are redrawn for each repetition.
pub const DESIGN_REDRAW: &str = "per-repetition";

/// Generative parameters of one simulation setting.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ScenarioConfig {
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub sigma: f64,
    pub kappa: f64,
    pub seed: u64,
    pub repetitions: usize,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::InvalidConfig(format!(
                "n and p must be positive (n = {}, p = {})",
                self.n, self.p
            )));
        }
        if self.s > self.p {
            return Err(Error::InvalidConfig(format!("s = {} exceeds p = {}", self.s, self.p)));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidConfig(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(Error::InvalidConfig(format!("kappa must lie in [0, 1], got {}", self.kappa)));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be positive".into()));
        }
        Ok(())
    }
}

/// One realized regression problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub beta_star: DVector<f64>,
    /// Standard normal noise; `None` when the outcome was observed rather than simulated.
    pub noise: Option<DVector<f64>>,
    pub sigma: f64,
    /// True support `{j : β*_j ≠ 0}`, zero-based and sorted.
    pub support: Vec<usize>,
}

impl Instance {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }
}

/// RNG stream for repetition `rep` of a scenario seeded with `seed`.
pub fn repetition_rng(seed: u64, rep: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

fn standard_normal_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Draws a design whose columns all have squared norm `n`.
pub fn generate_design<R: Rng + ?Sized>(
    n: usize,
    p: usize,
    kappa: f64,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidConfig(format!("design needs n, p >= 1 (got {n}x{p})")));
    }
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::InvalidConfig(format!("kappa must lie in [0, 1], got {kappa}")));
    }
    let v = standard_normal_vec(rng, n);
    let scale = libm::sqrt(n as f64);
    let mut data = Vec::with_capacity(n * p);
    for j in 0..p {
        let xi = standard_normal_vec(rng, n);
        let col: Vec<f64> = v
            .iter()
            .zip(&xi)
            .map(|(a, b)| kappa * a + (1.0 - kappa) * b)
            .collect();
        let norm = libm::sqrt(dot(&col, &col));
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::DegenerateColumn { column: j });
        }
        data.extend(col.iter().map(|c| scale * c / norm));
    }
    Ok(DMatrix::from_vec(n, p, data))
}

/// `(1/s, 2/s, …, 1, 0, …, 0)`; the zero vector when `s = 0`.
pub fn generate_beta(p: usize, s: usize) -> Result<DVector<f64>> {
    if s > p {
        return Err(Error::InvalidConfig(format!("s = {s} exceeds p = {p}")));
    }
    Ok(DVector::from_fn(p, |j, _| if j < s { (j + 1) as f64 / s as f64 } else { 0.0 }))
}

/// Realizes repetition `rep` of a scenario. Pure in `(cfg, rep)`.
pub fn generate_instance(cfg: &ScenarioConfig, rep: u64) -> Result<Instance> {
    cfg.validate()?;
    let mut rng = repetition_rng(cfg.seed, rep);
    let x = generate_design(cfg.n, cfg.p, cfg.kappa, &mut rng)?;
    let beta_star = generate_beta(cfg.p, cfg.s)?;
    let eps = DVector::from_vec(standard_normal_vec(&mut rng, cfg.n));
    let signal = mat_vec(&x, beta_star.as_slice());
    let y = DVector::from_iterator(
        cfg.n,
        signal.iter().zip(eps.iter()).map(|(s, e)| s + cfg.sigma * e),
    );
    Ok(Instance {
        x,
        y,
        beta_star,
        noise: Some(eps),
        sigma: cfg.sigma,
        support: (0..cfg.s).collect(),
    })
}
