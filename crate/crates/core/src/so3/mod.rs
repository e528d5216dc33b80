//! Representation theory of O(3) in a real basis.
//!
//! Component order convention: every degree-`l` block is indexed by
//! `m = -l..=l`. For `l = 1` this puts the Cartesian components in the order
//! `(y, z, x)`; [`cartesian_to_l1`] and [`l1_to_cartesian`] convert between the
//! two and are the only place the permutation is spelled out.

mod clebsch_gordan;
mod harmonics;
mod irreps;
mod rotation;
mod steerable;
mod wigner;

pub use clebsch_gordan::{clebsch_gordan, triangle, CgEntry, CgTensor};
pub use harmonics::{real_spherical_harmonics, sh_into, sh_len};
pub use irreps::{Irrep, IrrepsLayout, LayoutEntry, Parity};
pub use rotation::{RigidMotion, Rotation};
pub use steerable::{rotate_rows, rotate_steerable, SteerableTensor};
pub use wigner::wigner_d;

/// Highest degree supported by the kernels.
pub const MAX_DEGREE: u32 = 8;

/// Cartesian `(x, y, z)` to the degree-1 component order `(y, z, x)`.
#[inline]
pub fn cartesian_to_l1(v: [f64; 3]) -> [f64; 3] {
    [v[1], v[2], v[0]]
}

/// Degree-1 component order `(y, z, x)` back to Cartesian `(x, y, z)`.
#[inline]
pub fn l1_to_cartesian(v: [f64; 3]) -> [f64; 3] {
    [v[2], v[0], v[1]]
}

pub(crate) fn check_degree(l: u32) -> crate::Result<()> {
    if l > MAX_DEGREE {
        Err(crate::Error::UnsupportedDegree(l))
    } else {
        Ok(())
    }
}
