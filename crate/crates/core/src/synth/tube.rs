use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geom::{add, scale, tet_volume, Vec3};
use crate::mesh::{Role, TetMesh};
use crate::{Error, Result};

/// Parameters of one synthetic vessel segment. Lengths in mm, speeds in mm/s.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeSpec {
    pub length: f64,
    pub radius: f64,
    pub axial_segments: usize,
    pub radial_rings: usize,
    /// Total turning angle of the centerline in radians; 0 is straight.
    pub bend_angle: f64,
    pub v_max: f64,
    pub seed: u64,
    /// Vertex perturbation as a fraction of the local grid spacing. Wall
    /// vertices only move along the circumference and the inlet/outlet planes
    /// stay flat, so the geometry keeps its exact radius and end caps.
    pub jitter: f64,
}

impl Default for TubeSpec {
    fn default() -> Self {
        Self {
            length: 30.0,
            radius: 2.0,
            axial_segments: 12,
            radial_rings: 2,
            bend_angle: 0.0,
            v_max: 100.0,
            seed: 0,
            jitter: 0.1,
        }
    }
}

impl TubeSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.length, self.radius, self.bend_angle, self.v_max, self.jitter]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Degenerate("tube spec has a non-finite field".into()));
        }
        if self.length <= 0.0 || self.radius <= 0.0 || self.v_max <= 0.0 {
            return Err(Error::Degenerate(
                "length, radius and v_max must be positive".into(),
            ));
        }
        if self.axial_segments < 4 {
            return Err(Error::Degenerate(format!(
                "axial_segments = {} (need at least 4)",
                self.axial_segments
            )));
        }
        if self.radial_rings < 2 {
            return Err(Error::Degenerate(format!(
                "radial_rings = {} (need at least 2)",
                self.radial_rings
            )));
        }
        if !(0.0..0.3).contains(&self.jitter) {
            return Err(Error::Degenerate(format!(
                "jitter = {} outside [0, 0.3)",
                self.jitter
            )));
        }
        if !(0.0..PI).contains(&self.bend_angle) {
            return Err(Error::Degenerate(format!(
                "bend_angle = {} outside [0, π)",
                self.bend_angle
            )));
        }
        if self.bend_angle > 0.0 && self.bend_radius() <= self.radius {
            return Err(Error::Degenerate(
                "centerline curvature radius must exceed the tube radius".into(),
            ));
        }
        Ok(())
    }

    /// Radius of the circular centerline arc (infinite when straight).
    pub fn bend_radius(&self) -> f64 {
        if self.bend_angle == 0.0 {
            f64::INFINITY
        } else {
            self.length / self.bend_angle
        }
    }

    pub fn is_straight(&self) -> bool {
        self.bend_angle == 0.0
    }
}

/// Vertices in one cross-section: a center plus rings of 6k points.
pub fn section_vertex_count(radial_rings: usize) -> usize {
    1 + 3 * radial_rings * (radial_rings + 1)
}

pub fn tube_vertex_count(spec: &TubeSpec) -> usize {
    (spec.axial_segments + 1) * section_vertex_count(spec.radial_rings)
}

pub fn tube_tet_count(spec: &TubeSpec) -> usize {
    3 * 6 * spec.radial_rings * spec.radial_rings * spec.axial_segments
}

/// Centerline frame at arc parameter `s ∈ [0, 1]`: point, tangent and the
/// in-plane normal. The binormal is always +y.
pub(crate) fn centerline_frame(spec: &TubeSpec, s: f64) -> (Vec3, Vec3, Vec3) {
    if spec.is_straight() {
        return ([0.0, 0.0, spec.length * s], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]);
    }
    let rc = spec.bend_radius();
    let th = spec.bend_angle * s;
    let (sin, cos) = th.sin_cos();
    (
        [rc * (1.0 - cos), 0.0, rc * sin],
        [sin, 0.0, cos],
        [cos, 0.0, -sin],
    )
}

struct Section {
    /// Local (u, v) coordinates; the last `6K` entries form the rim.
    coords: Vec<[f64; 2]>,
    /// Ring index and position within the ring of each vertex.
    ring_of: Vec<(usize, usize)>,
    triangles: Vec<[usize; 3]>,
}

fn ring_start(k: usize) -> usize {
    if k == 0 {
        0
    } else {
        1 + 3 * (k - 1) * k
    }
}

fn section(radius: f64, rings: usize) -> Section {
    let mut coords = vec![[0.0, 0.0]];
    let mut ring_of = vec![(0, 0)];
    for k in 1..=rings {
        let r = radius * k as f64 / rings as f64;
        let n = 6 * k;
        for j in 0..n {
            let phi = TAU * j as f64 / n as f64;
            coords.push([r * phi.cos(), r * phi.sin()]);
            ring_of.push((k, j));
        }
    }
    let mut triangles = Vec::with_capacity(6 * rings * rings);
    for j in 0..6 {
        triangles.push([0, 1 + j, 1 + (j + 1) % 6]);
    }
    for k in 2..=rings {
        let (a0, na) = (ring_start(k - 1), 6 * (k - 1));
        let (b0, nb) = (ring_start(k), 6 * k);
        // Merge walk around both rings in angular order; ties advance the
        // outer ring, which keeps every triangle non-degenerate.
        let (mut i, mut j) = (0usize, 0usize);
        while i < na || j < nb {
            let next_a = (i + 1) as f64 / na as f64;
            let next_b = (j + 1) as f64 / nb as f64;
            let (ai, bj) = (a0 + i % na, b0 + j % nb);
            if j < nb && (i == na || next_b <= next_a) {
                triangles.push([ai, bj, b0 + (j + 1) % nb]);
                j += 1;
            } else {
                triangles.push([ai, bj, a0 + (i + 1) % na]);
                i += 1;
            }
        }
    }
    Section {
        coords,
        ring_of,
        triangles,
    }
}

/// Structured tetrahedral mesh of a straight or circular-arc tube.
///
/// Vertex `layer * P + q` is cross-section vertex `q` on axial layer `layer`.
/// Layer 0 is the inlet, the last layer the outlet, and the outer ring of every
/// other layer the wall.
pub fn gen_tube(spec: &TubeSpec) -> Result<TetMesh> {
    spec.validate()?;
    let rings = spec.radial_rings;
    let segs = spec.axial_segments;
    let sec = section(spec.radius, rings);
    let p = sec.coords.len();
    debug_assert_eq!(p, section_vertex_count(rings));

    let ideal = |layer: usize, q: usize| -> Vec3 {
        let (c, _, n) = centerline_frame(spec, layer as f64 / segs as f64);
        let [u, v] = sec.coords[q];
        add(add(c, scale(n, u)), [0.0, v, 0.0])
    };

    // Orientation is fixed on the unperturbed geometry, where every prism is
    // well shaped.
    let mut tets = Vec::with_capacity(tube_tet_count(spec));
    for layer in 0..segs {
        for tri in &sec.triangles {
            let mut t = *tri;
            t.sort_unstable();
            let [a, b, c] = t.map(|q| layer * p + q);
            let [a1, b1, c1] = t.map(|q| (layer + 1) * p + q);
            for mut tet in [[a, b, c, c1], [a, b, b1, c1], [a, a1, b1, c1]] {
                let pts = tet.map(|i| ideal(i / p, i % p));
                if tet_volume(pts[0], pts[1], pts[2], pts[3]) < 0.0 {
                    tet.swap(2, 3);
                }
                tets.push(tet);
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let h_radial = spec.radius / rings as f64;
    let h_axial = 1.0 / segs as f64;
    let mut positions = Vec::with_capacity(tube_vertex_count(spec));
    let mut roles = Vec::with_capacity(tube_vertex_count(spec));
    for layer in 0..=segs {
        let end_cap = layer == 0 || layer == segs;
        let mut s = layer as f64 * h_axial;
        if !end_cap && spec.jitter > 0.0 {
            s += spec.jitter * h_axial * rng.random_range(-1.0..1.0);
        }
        let (c, _, n) = centerline_frame(spec, s);
        for q in 0..p {
            let (k, j) = sec.ring_of[q];
            let [mut u, mut v] = sec.coords[q];
            if spec.jitter > 0.0 {
                if k == rings {
                    let dphi = spec.jitter * TAU / (6 * k) as f64 * rng.random_range(-1.0..1.0);
                    let phi = TAU * j as f64 / (6 * k) as f64 + dphi;
                    u = spec.radius * phi.cos();
                    v = spec.radius * phi.sin();
                } else {
                    u += spec.jitter * h_radial * rng.random_range(-1.0..1.0);
                    v += spec.jitter * h_radial * rng.random_range(-1.0..1.0);
                }
            }
            positions.push(add(add(c, scale(n, u)), [0.0, v, 0.0]));
            roles.push(if layer == 0 {
                Role::Inlet
            } else if layer == segs {
                Role::Outlet
            } else if k == rings {
                Role::Wall
            } else {
                Role::Interior
            });
        }
    }

    let mesh = TetMesh::new(positions, tets, roles)?;
    for t in 0..mesh.n_tets() {
        if mesh.signed_volume(t) <= 0.0 {
            return Err(Error::Degenerate(format!(
                "tet {t} inverted after jitter; reduce the jitter"
            )));
        }
    }
    Ok(mesh)
}
