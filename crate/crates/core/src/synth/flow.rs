use crate::field::VelocityField;
use crate::geom::{norm2, scale, sub, Vec3};
use crate::mesh::{Role, TetMesh};
use crate::so3::RigidMotion;
use crate::{Error, Result};

use super::tube::{centerline_frame, tube_vertex_count, TubeSpec};

/// Nearest centerline point and unit tangent for a point in the canonical
/// frame of `spec`.
pub fn centerline_projection(spec: &TubeSpec, p: Vec3) -> (Vec3, Vec3) {
    let s = if spec.is_straight() {
        (p[2] / spec.length).clamp(0.0, 1.0)
    } else {
        let rc = spec.bend_radius();
        (p[2].atan2(rc - p[0]) / spec.bend_angle).clamp(0.0, 1.0)
    };
    let (c, t, _) = centerline_frame(spec, s);
    (c, t)
}

/// Parabolic profile around the local tangent, clamped at zero outside the
/// lumen. Ignores roles.
pub fn flow_at_point(spec: &TubeSpec, p: Vec3) -> Vec3 {
    let (c, t) = centerline_projection(spec, p);
    let rho = norm2(sub(p, c)) / (spec.radius * spec.radius);
    scale(t, spec.v_max * (1.0 - rho).max(0.0))
}

/// Laminar velocity on a mesh produced by [`super::gen_tube`] with the same
/// spec. Wall vertices are exactly zero.
pub fn analytic_flow(mesh: &TetMesh, spec: &TubeSpec) -> Result<VelocityField> {
    analytic_flow_in_frame(mesh, spec, &RigidMotion::identity())
}

/// As [`analytic_flow`] for a mesh that was moved by `motion` after
/// generation: positions are pulled back, evaluated, and the velocities
/// rotated forward.
pub fn analytic_flow_in_frame(
    mesh: &TetMesh,
    spec: &TubeSpec,
    motion: &RigidMotion,
) -> Result<VelocityField> {
    spec.validate()?;
    let expected = tube_vertex_count(spec);
    if mesh.n_vertices() != expected {
        return Err(Error::ShapeMismatch(format!(
            "mesh has {} vertices, spec generates {expected}",
            mesh.n_vertices()
        )));
    }
    let inv = motion.rotation.inverse();
    let rows = mesh
        .positions()
        .iter()
        .zip(mesh.roles())
        .map(|(p, role)| {
            if *role == Role::Wall {
                return [0.0; 3];
            }
            let local = inv.apply(sub(*p, motion.translation));
            motion.rotation.apply(flow_at_point(spec, local))
        })
        .collect();
    Ok(VelocityField::new(rows))
}
