//! Wigner-D matrices in the real spherical-harmonic basis.
//!
//! `D_l(R)` is the unique matrix with `Y_l(R x) = D_l(R) Y_l(x)` for every unit
//! `x`. It is recovered by least squares over a fixed Fibonacci lattice of
//! directions, whose harmonic matrix is well conditioned; the system is
//! consistent, so the solution is exact up to rounding.

use std::sync::OnceLock;

use nalgebra::DMatrix;

use super::{check_degree, sh_into, Rotation, MAX_DEGREE};
use crate::geom::Vec3;
use crate::Result;

struct Sampling {
    directions: Vec<Vec3>,
    /// `Yᵀ (Y Yᵀ)⁻¹`, shape `K × (2l+1)`.
    solve: DMatrix<f64>,
}

static SAMPLINGS: [OnceLock<Sampling>; MAX_DEGREE as usize + 1] =
    [const { OnceLock::new() }; MAX_DEGREE as usize + 1];

fn fibonacci_sphere(count: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / count as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

fn block(l: u32, direction: Vec3, buf: &mut [f64]) -> std::ops::Range<usize> {
    sh_into(l, direction, buf);
    let l = l as usize;
    l * l..(l + 1) * (l + 1)
}

fn sampling(l: u32) -> &'static Sampling {
    SAMPLINGS[l as usize].get_or_init(|| {
        let dim = 2 * l as usize + 1;
        let directions = fibonacci_sphere(4 * dim + 4);
        let mut buf = vec![0.0; super::sh_len(l)];
        let mut y = DMatrix::zeros(dim, directions.len());
        for (k, d) in directions.iter().enumerate() {
            let range = block(l, *d, &mut buf);
            y.column_mut(k).copy_from_slice(&buf[range]);
        }
        let gram = &y * y.transpose();
        let inv = gram
            .try_inverse()
            .expect("Fibonacci lattice harmonics are full rank");
        Sampling {
            directions,
            solve: y.transpose() * inv,
        }
    })
}

/// Real Wigner-D matrix of degree `l` for rotation `r`, shape `(2l+1) × (2l+1)`.
pub fn wigner_d(l: u32, r: &Rotation) -> Result<DMatrix<f64>> {
    check_degree(l)?;
    let dim = 2 * l as usize + 1;
    if l == 0 || *r.matrix() == nalgebra::Matrix3::identity() {
        return Ok(DMatrix::identity(dim, dim));
    }
    let s = sampling(l);
    let mut buf = vec![0.0; super::sh_len(l)];
    let mut y_rot = DMatrix::zeros(dim, s.directions.len());
    for (k, d) in s.directions.iter().enumerate() {
        let range = block(l, r.apply(*d), &mut buf);
        y_rot.column_mut(k).copy_from_slice(&buf[range]);
    }
    Ok(y_rot * &s.solve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::{cartesian_to_l1, l1_to_cartesian};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn degree_zero_is_identity_scalar() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = wigner_d(0, &Rotation::random(&mut rng)).unwrap();
        assert_eq!(d.as_slice(), &[1.0]);
    }

    #[test]
    fn degree_one_is_permuted_rotation_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = Rotation::random(&mut rng);
        let d = wigner_d(1, &r).unwrap();
        for j in 0..3 {
            let mut e = [0.0; 3];
            e[j] = 1.0;
            // column j of D applied to the basis vector in (y, z, x) order
            let col: Vec<f64> = (0..3).map(|i| d[(i, j)]).collect();
            let cart = l1_to_cartesian(e);
            let expect = cartesian_to_l1(r.apply(cart));
            for i in 0..3 {
                assert!((col[i] - expect[i]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn identity_and_orthogonality() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for l in 0..=MAX_DEGREE {
            let id = wigner_d(l, &Rotation::identity()).unwrap();
            let dim = 2 * l as usize + 1;
            assert!((id - DMatrix::<f64>::identity(dim, dim)).abs().max() < 1e-12);
            let d = wigner_d(l, &Rotation::random(&mut rng)).unwrap();
            let err = (d.transpose() * &d - DMatrix::<f64>::identity(dim, dim)).abs().max();
            assert!(err < 1e-11, "l = {l}: {err}");
        }
    }

    #[test]
    fn rejects_degree_nine() {
        assert!(wigner_d(9, &Rotation::identity()).is_err());
    }
}
