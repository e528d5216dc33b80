//! Network building blocks checked against rotation and relabeling oracles.

mod common;

use common::*;
use equiflow::autodiff::Rows;
use equiflow::net::{
    gated_nonlinearity, pool_mean, unpool_copy, Checkpoint, GraphConfig, GraphInputs, GraphNorm, ModelConfig,
    Network, SegnnConfig,
};
use equiflow::so3::{real_spherical_harmonics, rotate_rows, rotate_steerable, IrrepsLayout, Rotation, SteerableTensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_tensor(layout: &IrrepsLayout, rng: &mut ChaCha8Rng) -> SteerableTensor {
    let c = (0..layout.total_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
    SteerableTensor::new(layout.clone(), c).unwrap()
}

fn random_rows(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Rows {
    Rows::new(rows, cols, (0..rows * cols).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
}

#[test]
fn message_and_update_commute_with_rotations() {
    let config = ModelConfig::Segnn(small_segnn());
    let net = Network::new(config).unwrap();
    let params = net.init_params(1).values;
    let hidden = net.hidden_layout().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for trial in 0..20 {
        let layer = trial % net.num_layers();
        let r = Rotation::random(&mut rng);
        let (fi, fj, m) = (random_tensor(&hidden, &mut rng), random_tensor(&hidden, &mut rng), random_tensor(&hidden, &mut rng));
        let dir = Rotation::random(&mut rng).apply([1.0, 0.0, 0.0]);
        let a = real_spherical_harmonics(dir, 2).unwrap();
        let ra = real_spherical_harmonics(r.apply(dir), 2).unwrap();
        let rot = |t: &SteerableTensor| rotate_steerable(t, &r).unwrap();

        let msg = net.message(&params, layer, &fi, &fj, 3.0, &a).unwrap();
        let msg_r = net.message(&params, layer, &rot(&fi), &rot(&fj), 3.0, &ra).unwrap();
        assert!(rot(&msg).max_abs_diff(&msg_r) < 1e-9 * msg.norm().max(1.0));

        let upd = net.update(&params, layer, &fi, &m, &a).unwrap();
        let upd_r = net.update(&params, layer, &rot(&fi), &rot(&m), &ra).unwrap();
        assert!(rot(&upd).max_abs_diff(&upd_r) < 1e-9 * upd.norm().max(1.0));
    }
}

#[test]
fn update_residual_only_after_first_layer_of_a_stage() {
    let config = ModelConfig::Segnn(SegnnConfig {
        layers_per_scale: 2,
        ..small_segnn()
    });
    let net = Network::new(config).unwrap();
    let residual: Vec<bool> = (0..net.num_layers()).map(|l| net.has_residual(l)).collect();
    assert_eq!(residual, [false, true].repeat(5));
    // Zeroing φ_f leaves only the residual path.
    let mut params = net.init_params(3).values;
    let slot = net.update_slot(1).unwrap();
    params[slot].iter_mut().for_each(|w| *w = 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let hidden = net.hidden_layout().clone();
    let (f, m) = (random_tensor(&hidden, &mut rng), random_tensor(&hidden, &mut rng));
    let a = real_spherical_harmonics([0.0, 0.6, 0.8], 2).unwrap();
    let out = net.update(&params, 1, &f, &m, &a).unwrap();
    assert!(out.max_abs_diff(&f) < 1e-15);
}

#[test]
fn gate_commutes_with_rotations() {
    let layout: IrrepsLayout = "3x0e+2x0e+1x1o+1x2e".parse().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let r = Rotation::random(&mut rng);
        let t = random_tensor(&layout, &mut rng);
        let a = rotate_steerable(&gated_nonlinearity(&t).unwrap(), &r).unwrap();
        let b = gated_nonlinearity(&rotate_steerable(&t, &r).unwrap()).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-10 * a.norm().max(1.0));
    }
}

#[test]
fn pooling_commutes_with_rotations() {
    let layout: IrrepsLayout = "2x0e+1x1o+1x2e".parse().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let assignment: Vec<usize> = (0..30).map(|i| (i * 7) % 10).collect();
    for _ in 0..10 {
        let r = Rotation::random(&mut rng);
        let x = random_rows(30, layout.total_dim(), &mut rng);
        let mut rx = x.clone();
        rotate_rows(&layout, &mut rx.data, &r).unwrap();
        let mut a = pool_mean(&x, &assignment, 10).unwrap();
        rotate_rows(&layout, &mut a.data, &r).unwrap();
        let b = pool_mean(&rx, &assignment, 10).unwrap();
        assert!(a.data.iter().zip(&b.data).all(|(p, q)| (p - q).abs() < 1e-12));
        let up = unpool_copy(&b, &assignment).unwrap();
        assert_eq!(up.rows, 30);
        assert_eq!(up.row(3), b.row(assignment[3]));
    }
}

#[test]
fn graph_norm_treats_graphs_independently() {
    let norm = GraphNorm::new("3x0e+2x1o".parse().unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let params: Vec<f64> = (0..norm.num_params()).map(|_| rng.random_range(0.5..1.5)).collect();
    let cols = norm.layout().total_dim();
    let (a, b) = (random_rows(12, cols, &mut rng), random_rows(7, cols, &mut rng));
    let join = |first: &Rows, second: &Rows| {
        let mut data = first.data.clone();
        data.extend(&second.data);
        Rows::new(first.rows + second.rows, cols, data).unwrap()
    };
    let ids_ab: Vec<usize> = [vec![0; 12], vec![1; 7]].concat();
    let ids_ba: Vec<usize> = [vec![0; 7], vec![1; 12]].concat();
    let ab = norm.forward(&join(&a, &b), &ids_ab, &params).unwrap();
    let ba = norm.forward(&join(&b, &a), &ids_ba, &params).unwrap();
    let alone = norm.forward(&a, &[0; 12], &params).unwrap();
    assert_eq!(&ab.data[..12 * cols], &ba.data[7 * cols..]);
    assert_eq!(&ab.data[..12 * cols], &alone.data[..]);
}

/// `perm[old] = new`; applies the relabeling to the finest level.
fn relabel(g: &GraphInputs, perm: &[usize]) -> GraphInputs {
    let mut out = g.clone();
    let cols = g.node_input.cols;
    for (old, &new) in perm.iter().enumerate() {
        out.node_input.row_mut(new).copy_from_slice(g.node_input.row(old));
    }
    let l0 = &mut out.levels[0];
    let acols = g.levels[0].node_attr.cols;
    for (old, &new) in perm.iter().enumerate() {
        // A single row is broadcast to every vertex.
        if g.levels[0].node_attr.rows == g.n {
            l0.node_attr.data[new * acols..(new + 1) * acols].copy_from_slice(g.levels[0].node_attr.row(old));
        }
        l0.graph_ids[new] = g.levels[0].graph_ids[old];
        out.pools[0][new] = g.pools[0][old];
    }
    l0.sources = g.levels[0].sources.iter().map(|&s| perm[s]).collect();
    l0.targets = g.levels[0].targets.iter().map(|&t| perm[t]).collect();
    assert_eq!(out.node_input.cols, cols);
    out
}

#[test]
fn relabeling_vertices_permutes_outputs() {
    let spec = tube(6, 2, 0.4, 8);
    let p = prepared_tube(&spec);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for config in [ModelConfig::Segnn(small_segnn()), ModelConfig::Baseline(small_baseline())] {
        let net = Network::new(config.clone()).unwrap();
        let params = net.init_params(2).values;
        let g = inputs(&config, &p);
        let mut perm: Vec<usize> = (0..g.n).collect();
        rand::seq::SliceRandom::shuffle(&mut perm[..], &mut rng);
        let base = net.forward(&g, &params).unwrap();
        let moved = net.forward(&relabel(&g, &perm), &params).unwrap();
        for (old, &new) in perm.iter().enumerate() {
            for c in 0..3 {
                assert!((moved.rows[new][c] - base.rows[old][c]).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn output_is_linear_in_readout_weights() {
    let config = ModelConfig::Segnn(small_segnn());
    let net = Network::new(config.clone()).unwrap();
    let g = inputs(&config, &prepared_tube(&tube(5, 2, 0.2, 9)));
    let params = net.init_params(4).values;
    let (off, len) = net.readout_slot();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let with = |w: &[f64]| {
        let mut p = params.clone();
        p[off..off + len].copy_from_slice(w);
        net.forward(&g, &p).unwrap().to_flat()
    };
    let dirs: Vec<Vec<f64>> = (0..3).map(|_| (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let coef = [0.7, -1.3, 2.1];
    let combined: Vec<f64> = (0..len).map(|i| (0..3).map(|k| coef[k] * dirs[k][i]).sum()).collect();
    let lhs = with(&combined);
    let parts: Vec<Vec<f64>> = dirs.iter().map(|d| with(d)).collect();
    let scale = lhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..lhs.len() {
        let rhs: f64 = (0..3).map(|k| coef[k] * parts[k][i]).sum();
        assert!((lhs[i] - rhs).abs() < 1e-10 * scale);
    }
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let tmp = tempfile::tempdir().unwrap();
    for config in [ModelConfig::Segnn(small_segnn()), ModelConfig::Baseline(small_baseline())] {
        let net = Network::new(config.clone()).unwrap();
        let mut params = net.init_params(11);
        params.values[0] = 0.1 + 0.2;
        params.values[1] = f64::MIN_POSITIVE;
        let ckpt = Checkpoint::new(config.clone(), GraphConfig::default(), params.clone());
        let path = tmp.path().join(format!("{}.json", config.name()));
        ckpt.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back, ckpt);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back.params.values), bits(&params.values));
    }
}

#[test]
fn checkpoint_rejects_mismatched_registry() {
    let segnn = Network::new(ModelConfig::Segnn(small_segnn())).unwrap();
    let ckpt = Checkpoint::new(ModelConfig::Baseline(small_baseline()), GraphConfig::default(), segnn.init_params(0));
    assert!(Checkpoint::from_json(&ckpt.to_json().unwrap()).is_err());
    let text = Checkpoint::new(ModelConfig::Segnn(small_segnn()), GraphConfig::default(), segnn.init_params(0))
        .to_json()
        .unwrap()
        .replace("\"version\": 1", "\"version\": 9");
    assert!(Checkpoint::from_json(&text).is_err());
}
