//! Real spherical harmonics with component normalization.
//!
//! Evaluated in Cartesian form (associated Legendre polynomials divided by
//! `sin^m θ`, times the real and imaginary parts of `(x + iy)^m`), so there is
//! no singularity at the poles. No Condon-Shortley phase is applied, which
//! makes the degree-1 block exactly `√3 (y, z, x)`.

use super::{check_degree, IrrepsLayout, SteerableTensor};
use crate::geom::Vec3;
use crate::{Error, Result};

const UNIT_TOL: f64 = 1e-9;

/// Number of coefficients for degrees `0..=l_max`.
pub fn sh_len(l_max: u32) -> usize {
    ((l_max + 1) * (l_max + 1)) as usize
}

/// Spherical-harmonic embedding of a unit direction as a steerable tensor with
/// layout `1x0e + 1x1o + ... + 1x(l_max)`.
pub fn real_spherical_harmonics(direction: Vec3, l_max: u32) -> Result<SteerableTensor> {
    check_degree(l_max)?;
    let n = crate::geom::norm(direction);
    if !((n - 1.0).abs() <= UNIT_TOL) {
        return Err(Error::Precondition(format!(
            "direction must be a unit vector, |x| = {n}"
        )));
    }
    let mut coeffs = vec![0.0; sh_len(l_max)];
    sh_into(l_max, direction, &mut coeffs);
    SteerableTensor::new(IrrepsLayout::spherical_harmonics(l_max)?, coeffs)
}

/// Writes the harmonics of degrees `0..=l_max` into `out[..sh_len(l_max)]`.
///
/// The caller guarantees `direction` is unit length and `l_max <= 8`. Index of
/// `(l, m)` is `l² + l + m`.
pub fn sh_into(l_max: u32, direction: Vec3, out: &mut [f64]) {
    let l_max = l_max as usize;
    let [x, y, z] = direction;

    // q[l][m] = P_l^m(z) / sin^m(θ)
    let mut q = [[0.0f64; 9]; 9];
    let mut double_fact = 1.0;
    for m in 0..=l_max {
        if m > 0 {
            double_fact *= (2 * m - 1) as f64;
        }
        q[m][m] = double_fact;
        if m < l_max {
            q[m + 1][m] = (2 * m + 1) as f64 * z * q[m][m];
        }
        for l in (m + 2)..=l_max {
            q[l][m] = ((2 * l - 1) as f64 * z * q[l - 1][m] - (l + m - 1) as f64 * q[l - 2][m])
                / (l - m) as f64;
        }
    }

    // Re/Im of (x + iy)^m
    let mut cos_m = [0.0f64; 9];
    let mut sin_m = [0.0f64; 9];
    cos_m[0] = 1.0;
    for m in 1..=l_max {
        cos_m[m] = x * cos_m[m - 1] - y * sin_m[m - 1];
        sin_m[m] = x * sin_m[m - 1] + y * cos_m[m - 1];
    }

    let sqrt2 = std::f64::consts::SQRT_2;
    for l in 0..=l_max {
        let base = l * l + l;
        out[base] = ((2 * l + 1) as f64).sqrt() * q[l][0];
        let mut ratio = 1.0; // (l - m)! / (l + m)!
        for m in 1..=l {
            ratio /= ((l + m) * (l - m + 1)) as f64;
            let norm = sqrt2 * ((2 * l + 1) as f64 * ratio).sqrt() * q[l][m];
            out[base + m] = norm * cos_m[m];
            out[base - m] = norm * sin_m[m];
        }
    }
}
