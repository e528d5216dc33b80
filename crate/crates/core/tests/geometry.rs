//! Mesh graphs, descriptors and the synthetic generator.

use std::collections::BTreeSet;

use equiflow::descriptors::compute_descriptors;
use equiflow::geom::{norm, sub, tet_volume, Vec3};
use equiflow::mesh::{build_hierarchy, covering_radius, farthest_point_sampling, knn_graph, Role};
use equiflow::so3::{RigidMotion, Rotation};
use equiflow::synth::{
    analytic_flow, analytic_flow_in_frame, gen_dataset, gen_tube, load_dataset, save_dataset, section_vertex_count,
    tube_tet_count, tube_vertex_count, Dataset, SpecRanges, TubeSpec,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn spec(segments: usize, rings: usize, bend: f64, seed: u64) -> TubeSpec {
    TubeSpec {
        length: 16.0,
        radius: 2.0,
        axial_segments: segments,
        radial_rings: rings,
        bend_angle: bend,
        seed,
        ..TubeSpec::default()
    }
}

#[test]
fn knn_edges_survive_rigid_motion() {
    let mesh = gen_tube(&spec(8, 2, 0.7, 1)).unwrap();
    let base: BTreeSet<_> = knn_graph(mesh.positions(), 13).unwrap().edges.into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let moved = mesh.transformed(&RigidMotion::random(&mut rng, 30.0));
        let edges: BTreeSet<_> = knn_graph(moved.positions(), 13).unwrap().edges.into_iter().collect();
        assert_eq!(edges, base);
    }
}

#[test]
fn fps_covering_radius_shrinks_with_count() {
    let mesh = gen_tube(&spec(10, 2, 0.3, 2)).unwrap();
    let p = mesh.positions();
    let order = farthest_point_sampling(p, p.len(), 0).unwrap();
    let mut last = f64::INFINITY;
    for count in [1, 2, 5, 10, 20, 50, 100, p.len()] {
        let prefix = farthest_point_sampling(p, count, 0).unwrap();
        assert_eq!(prefix, order[..count]);
        let r = covering_radius(p, &prefix);
        assert!(r <= last);
        last = r;
    }
    assert_eq!(last, 0.0);
}

#[test]
fn hierarchy_levels_follow_generator_counts() {
    let s = spec(9, 2, 0.5, 3);
    let mesh = gen_tube(&s).unwrap();
    // Closed forms, independent of the generator: 1 + 3K(K+1) vertices per
    // section, 6K² triangles split into 3 tets per prism.
    let k = s.radial_rings;
    assert_eq!(mesh.n_vertices(), (s.axial_segments + 1) * (1 + 3 * k * (k + 1)));
    assert_eq!(mesh.n_tets(), s.axial_segments * 18 * k * k);
    assert_eq!(tube_vertex_count(&s), mesh.n_vertices());
    assert_eq!(tube_tet_count(&s), mesh.n_tets());
    assert_eq!(section_vertex_count(k), 19);

    let h = build_hierarchy(&mesh, 8, (0.25, 0.25)).unwrap();
    let n = mesh.n_vertices();
    assert_eq!(h.levels[0].len(), n);
    assert_eq!(h.levels[1].len(), (n as f64 * 0.25).ceil() as usize);
    h.validate(mesh.positions()).unwrap();
}

#[test]
fn straight_tube_wall_descriptor_is_radial_on_axis() {
    let s = TubeSpec {
        jitter: 0.0,
        ..spec(8, 2, 0.0, 0)
    };
    let mesh = gen_tube(&s).unwrap();
    let d = compute_descriptors(&mesh).unwrap();
    let per_layer = section_vertex_count(s.radial_rings);
    // Vertex 0 of each section lies on the axis.
    let mid = (s.axial_segments / 2) * per_layer;
    let p = mesh.positions()[mid];
    assert!(p[0].abs() < 1e-12 && p[1].abs() < 1e-12);
    let wall = d.block(mid, 1);
    assert!(wall[2].abs() < 1e-9, "{wall:?}");
    assert!((norm(wall) - s.radius).abs() < 1e-9);
    // Brute-force oracle for the inlet block.
    let inlet = mesh
        .positions()
        .iter()
        .zip(mesh.roles())
        .filter(|(_, r)| **r == Role::Inlet)
        .map(|(q, _)| sub(*q, p))
        .min_by(|a, b| norm(*a).total_cmp(&norm(*b)))
        .unwrap();
    assert_eq!(d.block(mid, 0), inlet);
}

/// Least-squares divergence of a linear interpolant: sum of per-tet
/// gradient traces weighted by volume, at each vertex.
fn vertex_divergence(mesh: &equiflow::mesh::TetMesh, v: &[Vec3]) -> Vec<f64> {
    let mut div = vec![0.0; mesh.n_vertices()];
    let mut weight = vec![0.0; mesh.n_vertices()];
    let p = mesh.positions();
    for t in mesh.tets() {
        let e = |i: usize| sub(p[t[i]], p[t[0]]);
        let m = nalgebra::Matrix3::from_rows(&[
            nalgebra::RowVector3::from(e(1)),
            nalgebra::RowVector3::from(e(2)),
            nalgebra::RowVector3::from(e(3)),
        ]);
        let inv = m.try_inverse().unwrap();
        let mut trace = 0.0;
        for c in 0..3 {
            let dv = nalgebra::Vector3::new(v[t[1]][c] - v[t[0]][c], v[t[2]][c] - v[t[0]][c], v[t[3]][c] - v[t[0]][c]);
            trace += (inv * dv)[c];
        }
        let vol = tet_volume(p[t[0]], p[t[1]], p[t[2]], p[t[3]]).abs();
        for &i in t {
            div[i] += vol * trace;
            weight[i] += vol;
        }
    }
    div.iter().zip(&weight).map(|(d, w)| d / w).collect()
}

#[test]
fn straight_flow_is_divergence_free() {
    let s = TubeSpec {
        jitter: 0.0,
        ..spec(8, 3, 0.0, 0)
    };
    let mesh = gen_tube(&s).unwrap();
    let field = analytic_flow(&mesh, &s).unwrap();
    let div = vertex_divergence(&mesh, &field.rows);
    for (i, r) in mesh.roles().iter().enumerate() {
        if *r == Role::Interior {
            assert!(div[i].abs() < 1e-6 * s.v_max / s.radius, "vertex {i}: {}", div[i]);
        }
    }
}

#[test]
fn rotated_samples_match_geometric_recomputation() {
    let ranges = SpecRanges {
        bend_angle: [0.0, 0.0],
        ..SpecRanges::default()
    };
    for s in gen_dataset(4, &ranges, 3, true).unwrap() {
        let m = s.motion.expect("rotated samples record their motion");
        // Recompute on the moved mesh from its own centerline: axis through
        // the moved inlet centre along the rotated z axis.
        let axis = m.rotation.apply([0.0, 0.0, 1.0]);
        let origin = m.translation;
        for (p, v) in s.mesh.positions().iter().zip(&s.field.rows) {
            let d = sub(*p, origin);
            let along = d[0] * axis[0] + d[1] * axis[1] + d[2] * axis[2];
            let radial = norm(sub(d, axis.map(|a| a * along)));
            let speed = (s.spec.v_max * (1.0 - (radial / s.spec.radius).powi(2))).max(0.0);
            for c in 0..3 {
                assert!((v[c] - speed * axis[c]).abs() < 1e-9);
            }
        }
        let again = analytic_flow_in_frame(&s.mesh, &s.spec, &m).unwrap();
        assert!(again.distance(&s.field) < 1e-9);
    }
}

#[test]
fn dataset_round_trips_through_disk() {
    let tmp = tempfile::tempdir().unwrap();
    let ranges = SpecRanges {
        axial_segments: [4, 5],
        ..SpecRanges::default()
    };
    let data = Dataset::generate(5, &ranges, 9, true).unwrap();
    save_dataset(tmp.path(), &data).unwrap();
    let back = load_dataset(tmp.path()).unwrap();
    assert_eq!(back, data);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn descriptors_rotate_with_the_mesh(seed in 0u64..1000, bend in 0.0f64..1.2, q in prop::array::uniform4(-1.0f64..1.0)) {
        prop_assume!(q.iter().map(|v| v * v).sum::<f64>() > 1e-3);
        let mesh = gen_tube(&spec(5, 2, bend, seed)).unwrap();
        let m = RigidMotion::new(Rotation::from_quaternion(q), [3.0, -7.0, 1.5]);
        let (a, b) = (compute_descriptors(&mesh).unwrap(), compute_descriptors(&mesh.transformed(&m)).unwrap());
        for i in 0..a.len() {
            for blk in 0..3 {
                let expect = m.rotation.apply(a.block(i, blk));
                prop_assert!(norm(sub(b.block(i, blk), expect)) < 1e-9);
                prop_assert!((norm(b.block(i, blk)) - norm(a.block(i, blk))).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn generated_tets_are_positive(segments in 4usize..9, rings in 2usize..4, bend in 0.0f64..2.5, seed in 0u64..100) {
        let mesh = gen_tube(&spec(segments, rings, bend, seed)).unwrap();
        prop_assert!((0..mesh.n_tets()).all(|t| mesh.signed_volume(t) > 0.0));
        prop_assert_eq!(mesh.count_role(Role::Inlet), mesh.count_role(Role::Outlet));
    }
}
