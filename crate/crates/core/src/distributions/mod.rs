//! Regular valuation distributions, virtual values and optimal reserves.
//!
//! A [`ValuationDistribution`] is immutable once built and can be shared
//! freely across threads; sampling takes the caller's RNG and always goes
//! through the quantile function, so a fixed seed yields a fixed stream of
//! valuations regardless of distribution kind.

mod normal;
mod reserve;
mod revenue;
mod spec;

pub use reserve::ReserveSolution;
pub use revenue::{single_round_revenue, single_round_revenue_with_alphas};
pub use spec::{Bound, DistributionSpec};

use crate::error::{Error, Result};
use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// The parametric family of a distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistributionKind {
    Uniform,
    Normal,
    TruncatedNormal,
    Exponential,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Uniform,
    Normal {
        mean: f64,
        sd: f64,
    },
    /// Standardized truncation points `a`, `b` and the normal mass between them.
    TruncatedNormal {
        mean: f64,
        sd: f64,
        a: f64,
        b: f64,
        mass: f64,
    },
    /// Rate; the location is the lower support bound.
    Exponential {
        rate: f64,
    },
    /// Piecewise-linear CDF through `(xs[i], ps[i])`.
    Tabulated {
        xs: Vec<f64>,
        ps: Vec<f64>,
    },
}

/// A valuation distribution `F` with density `f` on `[lo, hi]`; `hi` (and for
/// the normal, `lo`) may be infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionSpec", into = "DistributionSpec")]
pub struct ValuationDistribution {
    shape: Shape,
    lo: f64,
    hi: f64,
}

/// Normal probability mass of `(x, y)`, computed on whichever tail keeps
/// precision.
fn normal_mass(x: f64, y: f64) -> f64 {
    if x >= 0.0 {
        normal::sf(x) - normal::sf(y)
    } else if y <= 0.0 {
        normal::cdf(y) - normal::cdf(x)
    } else {
        1.0 - normal::cdf(x) - normal::sf(y)
    }
}

fn check_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {x}")))
    }
}

impl ValuationDistribution {
    /// Uniform on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        check_finite("uniform lower bound", lo)?;
        check_finite("uniform upper bound", hi)?;
        if lo >= hi {
            return Err(Error::Domain(format!("degenerate uniform support [{lo}, {hi}]")));
        }
        Ok(Self {
            shape: Shape::Uniform,
            lo,
            hi,
        })
    }

    /// Untruncated normal.
    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        check_finite("mean", mean)?;
        check_finite("standard deviation", sd)?;
        if sd <= 0.0 {
            return Err(Error::Domain(format!("standard deviation must be positive, got {sd}")));
        }
        Ok(Self {
            shape: Shape::Normal { mean, sd },
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        })
    }

    /// Normal with mean `mean` and deviation `sd` conditioned on `[lo, hi]`.
    pub fn truncated_normal(mean: f64, sd: f64, lo: f64, hi: f64) -> Result<Self> {
        check_finite("mean", mean)?;
        check_finite("standard deviation", sd)?;
        if sd <= 0.0 {
            return Err(Error::Domain(format!("standard deviation must be positive, got {sd}")));
        }
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::Domain(format!("degenerate truncation interval [{lo}, {hi}]")));
        }
        let a = (lo - mean) / sd;
        let b = (hi - mean) / sd;
        let mass = normal_mass(a, b);
        if mass <= 0.0 || !mass.is_finite() {
            return Err(Error::Domain(format!(
                "truncation interval [{lo}, {hi}] carries no normal mass"
            )));
        }
        Ok(Self {
            shape: Shape::TruncatedNormal { mean, sd, a, b, mass },
            lo,
            hi,
        })
    }

    /// Exponential with the given rate, shifted to start at `loc`.
    pub fn exponential(rate: f64, loc: f64) -> Result<Self> {
        check_finite("rate", rate)?;
        check_finite("location", loc)?;
        if rate <= 0.0 {
            return Err(Error::Domain(format!("rate must be positive, got {rate}")));
        }
        Ok(Self {
            shape: Shape::Exponential { rate },
            lo: loc,
            hi: f64::INFINITY,
        })
    }

    /// Distribution with a piecewise-linear CDF through `points = [(x, F(x))]`.
    /// The `x` must be strictly increasing, `F` nondecreasing from 0 to 1.
    pub fn tabulated(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Domain("a CDF table needs at least two points".into()));
        }
        for &(x, p) in points {
            check_finite("table abscissa", x)?;
            check_finite("table probability", p)?;
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Domain("table abscissae must be strictly increasing".into()));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::Domain("table CDF values must be nondecreasing".into()));
            }
        }
        let first = points[0].1;
        let last = points[points.len() - 1].1;
        if first.abs() > 1e-12 || (last - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "table CDF must run from 0 to 1, got {first} to {last}"
            )));
        }
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let mut ps: Vec<f64> = points.iter().map(|p| p.1).collect();
        ps[0] = 0.0;
        *ps.last_mut().unwrap() = 1.0;
        let (lo, hi) = (xs[0], xs[xs.len() - 1]);
        Ok(Self {
            shape: Shape::Tabulated { xs, ps },
            lo,
            hi,
        })
    }

    pub fn kind(&self) -> DistributionKind {
        match self.shape {
            Shape::Uniform => DistributionKind::Uniform,
            Shape::Normal { .. } => DistributionKind::Normal,
            Shape::TruncatedNormal { .. } => DistributionKind::TruncatedNormal,
            Shape::Exponential { .. } => DistributionKind::Exponential,
            Shape::Tabulated { .. } => DistributionKind::Tabulated,
        }
    }

    /// Support bounds `(lo, hi)`.
    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// True when `v` lies in the closed support.
    pub fn in_support(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    pub fn cdf(&self, v: f64) -> f64 {
        if v <= self.lo {
            return 0.0;
        }
        if v >= self.hi {
            return 1.0;
        }
        match &self.shape {
            Shape::Uniform => (v - self.lo) / (self.hi - self.lo),
            Shape::Normal { mean, sd } => normal::cdf((v - mean) / sd),
            Shape::TruncatedNormal { mean, sd, a, mass, .. } => {
                (normal_mass(*a, (v - mean) / sd) / mass).clamp(0.0, 1.0)
            }
            Shape::Exponential { rate } => -(-rate * (v - self.lo)).exp_m1(),
            Shape::Tabulated { xs, ps } => interpolate(xs, ps, v),
        }
    }

    /// Survival function `1 - F(v)`, accurate in the upper tail.
    pub fn sf(&self, v: f64) -> f64 {
        if v <= self.lo {
            return 1.0;
        }
        if v >= self.hi {
            return 0.0;
        }
        match &self.shape {
            Shape::Normal { mean, sd } => normal::sf((v - mean) / sd),
            Shape::TruncatedNormal { mean, sd, b, mass, .. } => {
                (normal_mass((v - mean) / sd, *b) / mass).clamp(0.0, 1.0)
            }
            Shape::Exponential { rate } => (-rate * (v - self.lo)).exp(),
            _ => 1.0 - self.cdf(v),
        }
    }

    pub fn pdf(&self, v: f64) -> f64 {
        if v < self.lo || v > self.hi {
            return 0.0;
        }
        match &self.shape {
            Shape::Uniform => 1.0 / (self.hi - self.lo),
            Shape::Normal { mean, sd } => normal::pdf((v - mean) / sd) / sd,
            Shape::TruncatedNormal { mean, sd, mass, .. } => normal::pdf((v - mean) / sd) / (sd * mass),
            Shape::Exponential { rate } => rate * (-rate * (v - self.lo)).exp(),
            Shape::Tabulated { .. } => {
                // central difference, one-sided at the table ends
                let h = 1e-7 * (self.hi - self.lo);
                let left = (v - h).max(self.lo);
                let right = (v + h).min(self.hi);
                (self.cdf(right) - self.cdf(left)) / (right - left)
            }
        }
    }

    /// Inverse CDF on `[0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return self.lo;
        }
        if u >= 1.0 {
            return self.hi;
        }
        let x = match &self.shape {
            Shape::Uniform => self.lo + u * (self.hi - self.lo),
            Shape::Normal { mean, sd } => mean + sd * normal::quantile(u),
            Shape::TruncatedNormal { mean, sd, a, b, mass } => {
                let z = if *a >= 0.0 {
                    normal::inverse_sf(normal::sf(*a) - u * mass)
                } else {
                    let target = normal::cdf(*a) + u * mass;
                    if target <= 0.5 {
                        normal::quantile(target)
                    } else {
                        normal::inverse_sf(normal::sf(*b) + (1.0 - u) * mass)
                    }
                };
                mean + sd * z
            }
            Shape::Exponential { rate } => self.lo - (-u).ln_1p() / rate,
            Shape::Tabulated { xs, ps } => {
                let k = ps.partition_point(|&p| p < u);
                if k == 0 {
                    xs[0]
                } else {
                    let (p0, p1) = (ps[k - 1], ps[k]);
                    let (x0, x1) = (xs[k - 1], xs[k]);
                    if p1 > p0 {
                        x0 + (u - p0) / (p1 - p0) * (x1 - x0)
                    } else {
                        x0
                    }
                }
            }
        };
        x.clamp(self.lo, self.hi)
    }

    /// Draws one valuation by inverting the CDF at an open-unit uniform.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        self.quantile(u)
    }

    pub fn mean(&self) -> f64 {
        match &self.shape {
            Shape::Uniform => 0.5 * (self.lo + self.hi),
            Shape::Normal { mean, .. } => *mean,
            Shape::TruncatedNormal { mean, sd, a, b, mass } => mean + sd * (normal::pdf(*a) - normal::pdf(*b)) / mass,
            Shape::Exponential { rate } => self.lo + 1.0 / rate,
            Shape::Tabulated { xs, ps } => xs
                .windows(2)
                .zip(ps.windows(2))
                .map(|(x, p)| 0.5 * (x[0] + x[1]) * (p[1] - p[0]))
                .sum(),
        }
    }

    /// A scale used for bracketing and grid spacing (a standard deviation or
    /// its analogue).
    pub fn scale(&self) -> f64 {
        match &self.shape {
            Shape::Normal { sd, .. } | Shape::TruncatedNormal { sd, .. } => *sd,
            Shape::Exponential { rate } => 1.0 / rate,
            Shape::Uniform | Shape::Tabulated { .. } => (self.hi - self.lo) / 12f64.sqrt(),
        }
    }

    /// Support with infinite ends replaced by the `1 - tail` (upper) and
    /// `tail` (lower) quantiles.
    pub fn effective_support(&self, tail: f64) -> (f64, f64) {
        let lo = if self.lo.is_finite() {
            self.lo
        } else {
            self.quantile(tail)
        };
        let hi = if self.hi.is_finite() {
            self.hi
        } else {
            self.quantile(1.0 - tail)
        };
        (lo, hi)
    }
}

fn interpolate(xs: &[f64], ps: &[f64], v: f64) -> f64 {
    let k = xs.partition_point(|&x| x <= v);
    if k == 0 {
        return ps[0];
    }
    if k == xs.len() {
        return ps[k - 1];
    }
    let (x0, x1) = (xs[k - 1], xs[k]);
    ps[k - 1] + (v - x0) / (x1 - x0) * (ps[k] - ps[k - 1])
}
