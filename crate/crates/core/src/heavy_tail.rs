//! Block-height laws and the extreme-value quantities derived from them.
//!
//! Quantitative results only hold for a continuous law whose tail is regularly
//! varying with index `alpha` in `(0, 2)`. Exact Pareto tails make the
//! slowly varying factor constant, so the normalizing sequence `a_t` and the
//! centering constants have closed forms. The Bernoulli law exists for the
//! auxiliary Bernoulli deposition model and is rejected wherever a regularly
//! varying tail is required.

use std::fmt;

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{check_alpha, check_open_unit, check_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum HeightDistribution {
    /// `P(eta > x) = (x_min / x)^alpha` for `x >= x_min`.
    Pareto { alpha: f64, x_min: f64 },
    /// `P(eta = 1) = sigma`, `P(eta = 0) = 1 - sigma`.
    Bernoulli { sigma: f64 },
}

impl fmt::Display for HeightDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Pareto { alpha, x_min } => write!(f, "Pareto(alpha={alpha}, x_min={x_min})"),
            Self::Bernoulli { sigma } => write!(f, "Bernoulli(sigma={sigma})"),
        }
    }
}

impl HeightDistribution {
    pub fn pareto(alpha: f64, x_min: f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_positive("x_min", x_min)?;
        Ok(Self::Pareto { alpha, x_min })
    }

    pub fn bernoulli(sigma: f64) -> Result<Self> {
        if sigma > 0.0 && sigma <= 1.0 {
            Ok(Self::Bernoulli { sigma })
        } else {
            Err(Error::Domain {
                name: "sigma",
                value: sigma,
                range: "(0, 1]",
            })
        }
    }

    /// Re-checks the invariants of a value that may have been built by hand
    /// or deserialized.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Pareto { alpha, x_min } => Self::pareto(alpha, x_min).map(|_| ()),
            Self::Bernoulli { sigma } => Self::bernoulli(sigma).map(|_| ()),
        }
    }

    /// Regular-variation index, when the law has one.
    pub fn alpha(&self) -> Option<f64> {
        match *self {
            Self::Pareto { alpha, .. } => Some(alpha),
            Self::Bernoulli { .. } => None,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::Pareto { alpha, x_min } => {
                if x < x_min {
                    0.0
                } else {
                    1.0 - (x_min / x).powf(alpha)
                }
            }
            Self::Bernoulli { sigma } => {
                if x < 0.0 {
                    0.0
                } else if x < 1.0 {
                    1.0 - sigma
                } else {
                    1.0
                }
            }
        }
    }

    /// Inverse-CDF sample `F^{-1}(u)` for `u` in the open unit interval.
    pub fn sample_height(&self, u: f64) -> Result<f64> {
        check_open_unit("u", u)?;
        Ok(self.quantile(u))
    }

    /// `F^{-1}(u)` without validating `u`; callers guarantee `0 < u < 1`.
    pub(crate) fn quantile(&self, u: f64) -> f64 {
        match *self {
            Self::Pareto { alpha, x_min } => x_min * (1.0 - u).powf(-1.0 / alpha),
            Self::Bernoulli { sigma } => {
                if u > 1.0 - sigma {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn require_pareto(&self, operation: &'static str) -> Result<(f64, f64)> {
        match *self {
            Self::Pareto { alpha, x_min } => Ok((alpha, x_min)),
            Self::Bernoulli { .. } => Err(Error::UnsupportedDistribution {
                operation,
                dist: self.to_string(),
            }),
        }
    }

    /// Normalizing sequence `a_t = F^{-1}(1 - 1/t)`, the order of magnitude
    /// of the largest of `t` i.i.d. heights.
    pub fn a_scale(&self, t: f64) -> Result<f64> {
        let (alpha, x_min) = self.require_pareto("a_scale")?;
        if t.is_nan() || t <= 1.0 || !t.is_finite() {
            return Err(Error::Domain {
                name: "t",
                value: t,
                range: "(1, inf)",
            });
        }
        Ok(x_min * t.powf(1.0 / alpha))
    }

    /// Centering `c_T` for the random-deposition stable limit:
    /// zero for `alpha < 1`, the truncated mean `T * int_0^{a_T} x dF` for
    /// `alpha = 1` and the full mean `T * E[eta]` for `alpha > 1`.
    pub fn c_centering(&self, horizon: f64) -> Result<f64> {
        let (alpha, x_min) = self.require_pareto("c_centering")?;
        check_positive("T", horizon)?;
        Ok(if alpha < 1.0 {
            0.0
        } else if alpha == 1.0 {
            // int_{x_min}^{a_T} x * x_min / x^2 dx = x_min * ln(a_T / x_min) = x_min * ln T
            if horizon <= 1.0 {
                0.0
            } else {
                horizon * x_min * horizon.ln()
            }
        } else {
            horizon * alpha * x_min / (alpha - 1.0)
        })
    }

    /// Mean block height, infinite when `alpha <= 1`.
    pub fn mean(&self) -> f64 {
        match *self {
            Self::Pareto { alpha, x_min } if alpha > 1.0 => alpha * x_min / (alpha - 1.0),
            Self::Pareto { .. } => f64::INFINITY,
            Self::Bernoulli { sigma } => sigma,
        }
    }
}

/// The decreasing limit weights `M_i = X_i^{-1/alpha}`, where `X_1 < X_2 < ...`
/// are the arrival times of a unit-rate Poisson process on the half line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSequence {
    m: Vec<f64>,
    alpha: f64,
}

impl WeightSequence {
    /// Builds the weights from explicit Poisson arrival times.
    pub fn from_arrivals(arrivals: &[f64], alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if arrivals.is_empty() {
            return Err(Error::EmptySample);
        }
        let m: Vec<f64> = arrivals.iter().map(|x| x.powf(-1.0 / alpha)).collect();
        Self::new(m, alpha)
    }

    pub fn new(m: Vec<f64>, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if let Some(bad) = m.iter().find(|w| w.is_nan() || **w <= 0.0 || !w.is_finite()) {
            return Err(Error::Degenerate(format!("non-positive or infinite weight {bad}")));
        }
        if let Some(i) = m.windows(2).position(|w| w[0] <= w[1]) {
            return Err(Error::Degenerate(format!(
                "weights not strictly decreasing at index {i}: {} <= {}",
                m[i],
                m[i + 1]
            )));
        }
        Ok(Self { m, alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.m
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.m
    }
}

/// Samples the first `k` limit weights.
pub fn weight_sequence<R: Rng + ?Sized>(k: usize, alpha: f64, rng: &mut R) -> Result<WeightSequence> {
    check_alpha(alpha)?;
    if k == 0 {
        return Err(Error::Domain {
            name: "k",
            value: 0.0,
            range: "[1, inf)",
        });
    }
    let mut arrivals = Vec::with_capacity(k);
    let mut x = 0.0_f64;
    while arrivals.len() < k {
        let gap: f64 = rng.sample(Exp1);
        // A gap below float resolution would produce a tie; redraw it.
        if x + gap > x {
            x += gap;
            arrivals.push(x);
        }
    }
    WeightSequence::from_arrivals(&arrivals, alpha)
}
