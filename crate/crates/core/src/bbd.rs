//! Bernoulli ballistic deposition: the same dynamics with `{0, 1}`-valued
//! block heights, evaluated through the backward last-passage program, and
//! empirical checks of the growth bound `E h_T(0) <= C (sigma p T^2)^{1/(2 - zeta)}`.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cone::{max_collect_count, AttainableSet, ConeSample};
use crate::error::{check_positive, Error, Result};
use crate::field::FieldSeed;
use crate::heavy_tail::HeightDistribution;
use crate::stats::linear_fit;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BbdConfig {
    pub sigma: f64,
    pub p: f64,
    pub horizon: f64,
    /// Exponent with `p = T^{-zeta}`; `0` for fixed `p = 1`.
    pub zeta: f64,
    pub reps: usize,
}

impl BbdConfig {
    /// Configuration with `p = T^{-zeta}` recomputed from the horizon.
    pub fn with_zeta(sigma: f64, horizon: f64, zeta: f64, reps: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&zeta) {
            return Err(Error::Domain {
                name: "zeta",
                value: zeta,
                range: "[0, 1]",
            });
        }
        check_positive("T", horizon)?;
        let p = horizon.powf(-zeta).min(1.0);
        let cfg = Self {
            sigma,
            p,
            horizon,
            zeta,
            reps,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        HeightDistribution::bernoulli(self.sigma)?;
        check_positive("T", self.horizon)?;
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::Domain {
                name: "p",
                value: self.p,
                range: "(0, 1]",
            });
        }
        Ok(())
    }

    /// The growth parameter `sigma p T^2`.
    pub fn load(&self) -> f64 {
        self.sigma * self.p * self.horizon * self.horizon
    }

    /// Exponent of the upper bound, `1 / (2 - zeta)`.
    pub fn bound_exponent(&self) -> f64 {
        1.0 / (2.0 - self.zeta)
    }
}

pub fn bbd_sample(seed: FieldSeed, cfg: &BbdConfig) -> Result<ConeSample> {
    cfg.validate()?;
    let dist = HeightDistribution::bernoulli(cfg.sigma)?;
    ConeSample::generate(seed, cfg.horizon, cfg.p, &dist)
}

/// `h_T(0)` of the Bernoulli model for the field of `seed`; integer-valued.
pub fn bbd_height(seed: FieldSeed, cfg: &BbdConfig) -> Result<f64> {
    Ok(bbd_sample(seed, cfg)?.height())
}

/// Per-cell mean height, the input to [`scaling_exponent`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BbdCell {
    pub sigma: f64,
    pub p: f64,
    pub horizon: f64,
    pub zeta: f64,
    pub mean_height: f64,
}

impl BbdCell {
    pub fn load(&self) -> f64 {
        self.sigma * self.p * self.horizon * self.horizon
    }
}

/// Least-squares slope of `ln(mean height)` against `ln(sigma p T^2)`.
///
/// Requires at least four distinct loads spanning two decades, one common
/// `zeta`, and positive means.
pub fn scaling_exponent(cells: &[BbdCell]) -> Result<f64> {
    let Some(first) = cells.first() else {
        return Err(Error::InsufficientSpread("no cells".into()));
    };
    if cells.iter().any(|c| (c.zeta - first.zeta).abs() > 1e-12) {
        return Err(Error::InsufficientSpread("cells mix different zeta".into()));
    }
    if let Some(c) = cells.iter().find(|c| c.mean_height.is_nan() || c.mean_height <= 0.0) {
        return Err(Error::InsufficientSpread(format!(
            "non-positive mean height at load {}",
            c.load()
        )));
    }
    let mut loads: Vec<f64> = cells.iter().map(BbdCell::load).collect();
    loads.sort_by(f64::total_cmp);
    loads.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    if loads.len() < 4 {
        return Err(Error::InsufficientSpread(format!(
            "{} distinct loads, need 4",
            loads.len()
        )));
    }
    if loads[loads.len() - 1] / loads[0] < 100.0 {
        return Err(Error::InsufficientSpread("loads span less than two decades".into()));
    }
    let xs: Vec<f64> = cells.iter().map(|c| c.load().ln()).collect();
    let ys: Vec<f64> = cells.iter().map(|c| c.mean_height.ln()).collect();
    Ok(linear_fit(&xs, &ys)?.0)
}

/// Conditional-expectation estimate of the height from the cone alone:
/// `sum_r P(Binomial(N, sigma) = r) L_r`, where `L_r` is the largest number of
/// points a compatible path collects among the first `r` points of a uniform
/// random ordering. Unbiased for the Bernoulli-model mean height because the
/// unit marks form a uniformly random subset independent of the geometry.
pub fn binomial_mixture_height<R: Rng + ?Sized>(att: &AttainableSet, sigma: f64, rng: &mut R) -> f64 {
    let n = att.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut selected = vec![false; n];
    let mut total = 0.0;
    for (r, &idx) in order.iter().enumerate() {
        selected[idx] = true;
        let count = max_collect_count(att, &selected) as f64;
        total += binomial_pmf(n, r + 1, sigma) * count;
    }
    total
}

fn binomial_pmf(n: usize, r: usize, q: f64) -> f64 {
    if q >= 1.0 {
        return if r == n { 1.0 } else { 0.0 };
    }
    let ln_choose: f64 = (1..=r).map(|i| ((n - r + i) as f64 / i as f64).ln()).sum();
    (ln_choose + r as f64 * q.ln() + (n - r) as f64 * (1.0 - q).ln()).exp()
}
