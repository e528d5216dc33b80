use nalgebra::Matrix3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geom::Vec3;
use crate::{Error, Result};

const ORTHO_TOL: f64 = 1e-12;

/// A proper rotation: orthogonal 3x3 matrix with determinant +1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 3]; 3]", into = "[[f64; 3]; 3]")]
pub struct Rotation {
    matrix: Matrix3<f64>,
}

impl Rotation {
    pub fn new(matrix: Matrix3<f64>) -> Result<Self> {
        let gram = matrix.transpose() * matrix;
        let ortho_err = (gram - Matrix3::identity()).abs().max();
        let det = matrix.determinant();
        if !(ortho_err <= ORTHO_TOL) || !((det - 1.0).abs() <= ORTHO_TOL) {
            return Err(Error::Precondition(format!(
                "not a rotation: |RᵀR - I| = {ortho_err:e}, det = {det}"
            )));
        }
        Ok(Self { matrix })
    }

    pub fn identity() -> Self {
        Self {
            matrix: Matrix3::identity(),
        }
    }

    /// Rotation by `angle` radians about `axis` (need not be normalized).
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let n = crate::geom::norm(axis);
        let [x, y, z] = crate::geom::scale(axis, 1.0 / n);
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        Self {
            matrix: Matrix3::new(
                t * x * x + c,
                t * x * y - s * z,
                t * x * z + s * y,
                t * x * y + s * z,
                t * y * y + c,
                t * y * z - s * x,
                t * x * z - s * y,
                t * y * z + s * x,
                t * z * z + c,
            ),
        }
    }

    /// From a unit quaternion `(w, x, y, z)`.
    pub fn from_quaternion(q: [f64; 4]) -> Self {
        let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
        let [w, x, y, z] = [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
        Self {
            matrix: Matrix3::new(
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ),
        }
    }

    /// Haar-uniform random rotation (Shoemake's subgroup algorithm).
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let u3: f64 = rng.random();
        let tau = std::f64::consts::TAU;
        let a = (1.0 - u1).sqrt();
        let b = u1.sqrt();
        Self::from_quaternion([
            b * (tau * u3).cos(),
            a * (tau * u2).sin(),
            a * (tau * u2).cos(),
            b * (tau * u3).sin(),
        ])
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation {
            matrix: self.matrix * other.matrix,
        }
    }

    pub fn inverse(&self) -> Rotation {
        Rotation {
            matrix: self.matrix.transpose(),
        }
    }

    #[inline]
    pub fn apply(&self, v: Vec3) -> Vec3 {
        let m = &self.matrix;
        [
            m[(0, 0)] * v[0] + m[(0, 1)] * v[1] + m[(0, 2)] * v[2],
            m[(1, 0)] * v[0] + m[(1, 1)] * v[1] + m[(1, 2)] * v[2],
            m[(2, 0)] * v[0] + m[(2, 1)] * v[1] + m[(2, 2)] * v[2],
        ]
    }

    pub fn to_rows(&self) -> [[f64; 3]; 3] {
        let m = &self.matrix;
        [
            [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
            [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
            [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
        ]
    }
}

impl TryFrom<[[f64; 3]; 3]> for Rotation {
    type Error = Error;

    fn try_from(rows: [[f64; 3]; 3]) -> Result<Self> {
        Rotation::new(Matrix3::from_fn(|i, j| rows[i][j]))
    }
}

impl From<Rotation> for [[f64; 3]; 3] {
    fn from(r: Rotation) -> Self {
        r.to_rows()
    }
}

/// `p ↦ R p + t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidMotion {
    pub rotation: Rotation,
    pub translation: Vec3,
}

impl RigidMotion {
    pub fn new(rotation: Rotation, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Rotation::identity(), [0.0; 3])
    }

    /// Random rotation and a translation uniform in `[-extent, extent]^3`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, extent: f64) -> Self {
        let rotation = Rotation::random(rng);
        let mut t = [0.0; 3];
        for c in &mut t {
            *c = rng.random_range(-extent..=extent);
        }
        Self::new(rotation, t)
    }

    #[inline]
    pub fn apply(&self, p: Vec3) -> Vec3 {
        crate::geom::add(self.rotation.apply(p), self.translation)
    }
}
