//! Standard normal helpers with tail-accurate survival function.

use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub(crate) fn pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

pub(crate) fn cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

pub(crate) fn sf(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

/// Inverse of `cdf` on (0, 1).
pub(crate) fn quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let z = -SQRT_2 * erfc_inv(2.0 * p);
    // one Newton step against the accurate cdf
    if p < 0.5 {
        z - (cdf(z) - p) / pdf(z)
    } else {
        z + (sf(z) - (1.0 - p)) / pdf(z)
    }
}

/// Inverse of `sf` on (0, 1); precise when `q` is tiny.
pub(crate) fn inverse_sf(q: f64) -> f64 {
    -quantile(q)
}
