//! Virtual values, the regularity check, and the optimal reserve solver.

use super::ValuationDistribution;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Maximum number of geometric bracket expansions on an unbounded side.
const MAX_EXPANSIONS: u32 = 64;
const MAX_BISECTIONS: u32 = 400;

/// Output of [`ValuationDistribution::optimal_reserve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReserveSolution {
    pub reserve: f64,
    /// Virtual value at `reserve`.
    pub residual: f64,
    pub iterations: u32,
}

impl ValuationDistribution {
    /// `v - (1 - F(v)) / f(v)`.
    pub fn virtual_value(&self, v: f64) -> Result<f64> {
        if !v.is_finite() || !self.in_support(v) {
            return Err(Error::Domain(format!(
                "virtual value requested at {v}, outside the support [{}, {}]",
                self.lo, self.hi
            )));
        }
        let density = self.pdf(v);
        if density <= 0.0 {
            return Err(Error::Domain(format!("density vanishes at {v}")));
        }
        Ok(v - self.sf(v) / density)
    }

    /// Virtual value, extended by its limits where the density underflows:
    /// `v` when no mass remains above, `-inf` otherwise.
    fn virtual_value_extended(&self, v: f64) -> f64 {
        match self.virtual_value(v) {
            Ok(phi) => phi,
            Err(_) if self.sf(v) == 0.0 => v,
            Err(_) => f64::NEG_INFINITY,
        }
    }

    /// True iff the virtual value is strictly increasing across `grid_size`
    /// evenly spaced interior points of the support. Unbounded ends are cut at
    /// the 0.001 / 0.999 quantiles. A grid point with zero density counts as
    /// a violation.
    pub fn check_regularity(&self, grid_size: usize) -> Result<bool> {
        if grid_size < 2 {
            return Err(Error::Domain(format!("grid size must be at least 2, got {grid_size}")));
        }
        let (lo, hi) = self.effective_support(1e-3);
        if !(hi > lo) {
            return Err(Error::Domain(format!("degenerate support [{lo}, {hi}]")));
        }
        let step = (hi - lo) / grid_size as f64;
        let mut prev = f64::NEG_INFINITY;
        for i in 0..grid_size {
            let v = lo + (i as f64 + 0.5) * step;
            let phi = match self.virtual_value(v) {
                Ok(phi) => phi,
                Err(_) => return Ok(false),
            };
            if phi <= prev {
                return Ok(false);
            }
            prev = phi;
        }
        Ok(true)
    }

    /// Root of the virtual value by bisection, with `|residual| <= tolerance`.
    ///
    /// When the virtual value is already nonnegative at a finite lower support
    /// bound, no reserve inside the support binds and the bound itself is
    /// returned with the (positive) virtual value as residual.
    pub fn optimal_reserve(&self, tolerance: f64) -> Result<ReserveSolution> {
        if !(tolerance > 0.0) {
            return Err(Error::Domain(format!("tolerance must be positive, got {tolerance}")));
        }
        if !self.check_regularity(1000)? {
            return Err(Error::Irregular(format!("{:?} distribution", self.kind())));
        }
        let center = self.mean();
        let spread = self.scale().max(f64::MIN_POSITIVE);

        let mut low = if self.lo.is_finite() {
            let phi = self.virtual_value_extended(self.lo);
            if phi >= 0.0 {
                return Ok(ReserveSolution {
                    reserve: self.lo,
                    residual: phi,
                    iterations: 0,
                });
            }
            self.lo
        } else {
            let mut found = None;
            for k in 0..MAX_EXPANSIONS {
                let x = center - spread * 2f64.powi(k as i32);
                if self.virtual_value_extended(x) < 0.0 {
                    found = Some(x);
                    break;
                }
            }
            found.ok_or_else(|| Error::Solver("no negative virtual value below the mean".into()))?
        };

        let mut high = if self.hi.is_finite() {
            if self.virtual_value_extended(self.hi) <= 0.0 {
                return Err(Error::Solver(format!(
                    "virtual value is nonpositive at the support maximum {}",
                    self.hi
                )));
            }
            self.hi
        } else {
            let mut found = None;
            for k in 0..MAX_EXPANSIONS {
                let x = center + spread * 2f64.powi(k as i32);
                if self.virtual_value_extended(x) > 0.0 {
                    found = Some(x);
                    break;
                }
            }
            found.ok_or_else(|| Error::Solver(format!("no sign change after {MAX_EXPANSIONS} bracket expansions")))?
        };

        for iteration in 1..=MAX_BISECTIONS {
            let mid = 0.5 * (low + high);
            let phi = self.virtual_value_extended(mid);
            if phi.abs() <= tolerance {
                return Ok(ReserveSolution {
                    reserve: mid,
                    residual: phi,
                    iterations: iteration,
                });
            }
            if phi < 0.0 {
                low = mid;
            } else {
                high = mid;
            }
            if high - low <= 4.0 * f64::EPSILON * mid.abs().max(1.0) {
                break;
            }
        }
        Err(Error::Solver(format!(
            "bisection stalled in [{low}, {high}] without reaching tolerance {tolerance}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn virtual_value_examples() {
        let u = ValuationDistribution::uniform(0.0, 1.0).unwrap();
        assert!((u.virtual_value(0.75).unwrap() - 0.5).abs() < 1e-15);
        let e = ValuationDistribution::exponential(1.0, 0.0).unwrap();
        assert!((e.virtual_value(2.0).unwrap() - 1.0).abs() < 1e-12);
        let low = ValuationDistribution::truncated_normal(1.0, 0.4, 0.0, 3.0).unwrap();
        assert!(low.virtual_value(0.796).unwrap().abs() < 1e-2);
    }

    #[test]
    fn virtual_value_domain_errors() {
        let u = ValuationDistribution::uniform(0.0, 1.0).unwrap();
        assert!(matches!(u.virtual_value(1.5), Err(Error::Domain(_))));
        assert!(matches!(u.virtual_value(f64::NAN), Err(Error::Domain(_))));
        let gap = ValuationDistribution::tabulated(&[(0.0, 0.0), (1.0, 0.5), (10.0, 0.5), (11.0, 1.0)]).unwrap();
        assert!(matches!(gap.virtual_value(5.0), Err(Error::Domain(_))));
    }

    #[test]
    fn regularity_examples() {
        let u = ValuationDistribution::uniform(0.0, 1.0).unwrap();
        assert!(u.check_regularity(1000).unwrap());
        let n = ValuationDistribution::normal(3.0, 0.8).unwrap();
        assert!(n.check_regularity(1000).unwrap());
        let gap = ValuationDistribution::tabulated(&[(0.0, 0.0), (1.0, 0.5), (10.0, 0.5), (11.0, 1.0)]).unwrap();
        assert!(!gap.check_regularity(1000).unwrap());
        assert!(u.check_regularity(1).is_err());
    }

    #[test]
    fn irregular_input_is_rejected_by_the_solver() {
        let gap = ValuationDistribution::tabulated(&[(0.0, 0.0), (1.0, 0.5), (10.0, 0.5), (11.0, 1.0)]).unwrap();
        assert!(matches!(gap.optimal_reserve(1e-9), Err(Error::Irregular(_))));
    }

    #[test]
    fn uniform_reserve_is_one_half() {
        let sol = ValuationDistribution::uniform(0.0, 1.0)
            .unwrap()
            .optimal_reserve(1e-9)
            .unwrap();
        assert!((sol.reserve - 0.5).abs() <= 1e-9);
    }

    #[test]
    fn nonbinding_reserve_returns_support_minimum() {
        // virtual value v - 1 is already positive at the shifted origin 2
        let e = ValuationDistribution::exponential(1.0, 2.0).unwrap();
        let sol = e.optimal_reserve(1e-9).unwrap();
        assert_eq!(sol.reserve, 2.0);
        assert!((sol.residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_reserve_is_inverse_rate() {
        let e = ValuationDistribution::exponential(0.5, 0.0).unwrap();
        let sol = e.optimal_reserve(1e-10).unwrap();
        assert!((sol.reserve - 2.0).abs() < 1e-9);
    }
}
