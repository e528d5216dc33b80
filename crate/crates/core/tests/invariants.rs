//! Property tests for the rotation kernels and the metrics.

use equiflow::field::VelocityField;
use equiflow::metrics::{approximation_error, mean_cosine, nmae, MetricReport};
use equiflow::so3::{
    real_spherical_harmonics, rotate_steerable, wigner_d, IrrepsLayout, Rotation, SteerableTensor,
};
use proptest::prelude::*;

fn quaternion() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-1.0f64..1.0).prop_filter("non-degenerate", |q| q.iter().map(|v| v * v).sum::<f64>() > 1e-3)
}

fn direction() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-1.0f64..1.0)
        .prop_filter("non-zero", |v| v.iter().map(|c| c * c).sum::<f64>() > 1e-3)
        .prop_map(|v| {
            let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            v.map(|c| c / n)
        })
}

fn field(n: usize) -> impl Strategy<Value = VelocityField> {
    prop::collection::vec(prop::array::uniform3(-50.0f64..50.0), n).prop_map(VelocityField::new)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn wigner_d_is_orthogonal(q in quaternion(), l in 0u32..=4) {
        let d = wigner_d(l, &Rotation::from_quaternion(q)).unwrap();
        let gram = d.transpose() * &d;
        let eye = nalgebra::DMatrix::<f64>::identity(d.nrows(), d.nrows());
        prop_assert!((gram - eye).abs().max() < 1e-10);
    }

    #[test]
    fn sh_follow_rotations(q in quaternion(), x in direction()) {
        let r = Rotation::from_quaternion(q);
        let y = real_spherical_harmonics(x, 3).unwrap();
        let expect = rotate_steerable(&y, &r).unwrap();
        let got = real_spherical_harmonics(r.apply(x), 3).unwrap();
        prop_assert!(got.max_abs_diff(&expect) < 1e-10);
    }

    #[test]
    fn rotation_round_trip(q in quaternion(), coeffs in prop::collection::vec(-5.0f64..5.0, 13)) {
        let layout: IrrepsLayout = "2x0e+1x1o+1x2e+1x1e".parse().unwrap();
        let t = SteerableTensor::new(layout, coeffs).unwrap();
        let r = Rotation::from_quaternion(q);
        let back = rotate_steerable(&rotate_steerable(&t, &r).unwrap(), &r.inverse()).unwrap();
        prop_assert!(back.max_abs_diff(&t) < 1e-12);
        prop_assert!((rotate_steerable(&t, &r).unwrap().norm() - t.norm()).abs() < 1e-10);
    }

    #[test]
    fn metrics_ignore_joint_rotation(q in quaternion(), truth in field(12), pred in field(12)) {
        let r = Rotation::from_quaternion(q);
        let (rt, rp) = (truth.rotated(&r), pred.rotated(&r));
        let a = MetricReport::evaluate(std::slice::from_ref(&pred), std::slice::from_ref(&truth)).unwrap();
        let b = MetricReport::evaluate(std::slice::from_ref(&rp), std::slice::from_ref(&rt)).unwrap();
        prop_assert!((a.nmae[0] - b.nmae[0]).abs() < 1e-12);
        prop_assert!((a.eps[0] - b.eps[0]).abs() < 1e-12 * a.eps[0].max(1.0));
        prop_assert!((a.cos[0] - b.cos[0]).abs() < 1e-12);
    }

    #[test]
    fn nmae_permutes_with_samples(a in field(5), b in field(5), c in field(5), pa in field(5), pb in field(5), pc in field(5)) {
        let fwd = nmae(&[pa.clone(), pb.clone(), pc.clone()], &[a.clone(), b.clone(), c.clone()]).unwrap();
        let rev = nmae(&[pc, pb, pa], &[c, b, a]).unwrap();
        prop_assert_eq!(fwd[0], rev[2]);
        prop_assert_eq!(fwd[1], rev[1]);
        prop_assert_eq!(fwd[2], rev[0]);
    }

    #[test]
    fn cosine_ignores_positive_row_scaling(truth in field(8), pred in field(8), s in prop::collection::vec(0.01f64..100.0, 8)) {
        let scaled = VelocityField::new(pred.rows.iter().zip(&s).map(|(v, k)| v.map(|c| c * k)).collect());
        let a = mean_cosine(&pred, &truth).unwrap();
        let b = mean_cosine(&scaled, &truth).unwrap();
        prop_assert!((a.mean - b.mean).abs() < 1e-12);
        prop_assert!(a.mean.abs() <= 1.0 + 1e-15);
    }

    #[test]
    fn metrics_are_scale_free(truth in field(6), pred in field(6), k in 0.01f64..100.0) {
        let s = |f: &VelocityField| VelocityField::new(f.rows.iter().map(|v| v.map(|c| c * k)).collect());
        let e = approximation_error(&pred, &truth).unwrap();
        let es = approximation_error(&s(&pred), &s(&truth)).unwrap();
        prop_assert!((e - es).abs() < 1e-10 * e.max(1.0));
        let n = nmae(std::slice::from_ref(&pred), std::slice::from_ref(&truth)).unwrap()[0];
        let ns = nmae(&[s(&pred)], &[s(&truth)]).unwrap()[0];
        prop_assert!((n - ns).abs() < 1e-12 * n.max(1.0));
    }
}
