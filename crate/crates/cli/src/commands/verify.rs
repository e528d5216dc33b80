//! One-shot equivariance and gradient verification on a fresh random network.

use std::fmt::Write as _;

use equiflow::descriptors::compute_descriptors;
use equiflow::geom::{norm, sub};
use equiflow::mesh::build_hierarchy;
use equiflow::net::{GraphConfig, GraphInputs, ModelConfig, Network, SegnnConfig};
use equiflow::so3::{real_spherical_harmonics, rotate_rows, rotate_steerable, RigidMotion, Rotation, SteerableTensor};
use equiflow::synth::{analytic_flow, gen_tube, TubeSpec};
use equiflow::mesh::TetMesh;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{CliError, VerifyArgs};

const MOTIONS: usize = 5;
const GRADIENT_SAMPLES: usize = 50;
const FD_STEP: f64 = 1e-6;

struct Check {
    name: &'static str,
    max_error: f64,
    tolerance: f64,
}

impl Check {
    fn passed(&self) -> bool {
        self.max_error.is_finite() && self.max_error < self.tolerance
    }
}

struct Fixture {
    mesh: TetMesh,
    spec: TubeSpec,
    graph: GraphConfig,
    config: ModelConfig,
    net: Network,
    params: Vec<f64>,
}

impl Fixture {
    fn new(seed: u64) -> Result<Self, CliError> {
        let spec = TubeSpec {
            length: 12.0,
            radius: 2.0,
            axial_segments: 6,
            bend_angle: 0.5,
            seed,
            ..TubeSpec::default()
        };
        let config = ModelConfig::Segnn(SegnnConfig {
            hidden: "4x0e+2x1o+1x2e".parse()?,
            layers_per_scale: 1,
            ..SegnnConfig::default()
        });
        let net = Network::new(config.clone())?;
        let params = net.init_params(seed).values;
        Ok(Self {
            mesh: gen_tube(&spec)?,
            spec,
            graph: GraphConfig {
                k: 8,
                ratios: (0.5, 0.5),
            },
            config,
            net,
            params,
        })
    }

    fn inputs(&self, mesh: &TetMesh) -> equiflow::Result<GraphInputs> {
        let hierarchy = build_hierarchy(mesh, self.graph.k, self.graph.ratios)?;
        let descriptors = compute_descriptors(mesh)?;
        GraphInputs::prepare(&self.config, mesh, &hierarchy, &descriptors)
    }
}

fn descriptor_check(f: &Fixture, rng: &mut ChaCha8Rng) -> equiflow::Result<f64> {
    let base = compute_descriptors(&f.mesh)?;
    let mut worst: f64 = 0.0;
    for _ in 0..MOTIONS {
        let m = RigidMotion::random(rng, 20.0);
        let moved = compute_descriptors(&f.mesh.transformed(&m))?;
        for i in 0..base.len() {
            for b in 0..3 {
                let expect = m.rotation.apply(base.block(i, b));
                worst = worst.max(norm(sub(moved.block(i, b), expect)));
            }
        }
    }
    Ok(worst)
}

fn random_tensor(f: &Fixture, rng: &mut ChaCha8Rng) -> equiflow::Result<SteerableTensor> {
    let layout = f.net.hidden_layout().clone();
    let coeffs = (0..layout.total_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
    SteerableTensor::new(layout, coeffs)
}

fn random_direction(rng: &mut ChaCha8Rng) -> [f64; 3] {
    Rotation::random(rng).apply([0.0, 0.0, 1.0])
}

/// Largest deviation of one message and one update block from commuting with
/// random rotations.
fn layer_check(f: &Fixture, rng: &mut ChaCha8Rng) -> equiflow::Result<f64> {
    let lmax = f.net.attr_layout().max_degree();
    let mut worst: f64 = 0.0;
    for layer in 0..f.net.num_layers() {
        for _ in 0..MOTIONS {
            let r = Rotation::random(rng);
            let (fi, fj, m) = (random_tensor(f, rng)?, random_tensor(f, rng)?, random_tensor(f, rng)?);
            let dir = random_direction(rng);
            let dist2 = rng.random_range(0.5..20.0);
            let a = real_spherical_harmonics(dir, lmax)?;
            let ra = real_spherical_harmonics(r.apply(dir), lmax)?;
            let rot = |t: &SteerableTensor| rotate_steerable(t, &r);

            let msg = f.net.message(&f.params, layer, &fi, &fj, dist2, &a)?;
            let msg_r = f.net.message(&f.params, layer, &rot(&fi)?, &rot(&fj)?, dist2, &ra)?;
            worst = worst.max(rot(&msg)?.max_abs_diff(&msg_r));

            let upd = f.net.update(&f.params, layer, &fi, &m, &a)?;
            let upd_r = f.net.update(&f.params, layer, &rot(&fi)?, &rot(&m)?, &ra)?;
            worst = worst.max(rot(&upd)?.max_abs_diff(&upd_r));
        }
    }
    Ok(worst)
}

/// Relative end-to-end error `‖f(gx) - g·f(x)‖ / ‖f(x)‖` over random motions.
fn end_to_end_check(f: &Fixture, rng: &mut ChaCha8Rng, poison: bool) -> equiflow::Result<f64> {
    let base = f.net.forward(&f.inputs(&f.mesh)?, &f.params)?;
    let mut worst: f64 = 0.0;
    for _ in 0..MOTIONS {
        let m = RigidMotion::random(rng, 20.0);
        let mut inputs = f.inputs(&f.mesh.transformed(&m))?;
        if poison {
            let attr = f.net.attr_layout().clone();
            let level = &mut inputs.levels[0];
            let width = level.edge_attr.cols;
            let fault = Rotation::from_axis_angle([1.0, 0.0, 0.0], 1.0);
            rotate_rows(&attr, &mut level.edge_attr.data[..width], &fault)?;
        }
        let out = f.net.forward(&inputs, &f.params)?;
        let expect = base.rotated(&m.rotation);
        worst = worst.max(out.distance(&expect) / expect.frobenius());
    }
    Ok(worst)
}

/// Worst relative error of the analytic gradient against central
/// differences. Gradients below the rounding noise of the loss cannot be
/// resolved by differencing, so that noise floors the denominator.
fn gradient_check(f: &Fixture, rng: &mut ChaCha8Rng) -> equiflow::Result<f64> {
    let inputs = f.inputs(&f.mesh)?;
    let target = analytic_flow(&f.mesh, &f.spec)?;
    let (loss, grad) = f.net.loss_and_grad(&inputs, &target, &f.params)?;
    let noise = 4.0 * f64::EPSILON * loss.abs() / FD_STEP;
    let mut worst: f64 = 0.0;
    for _ in 0..GRADIENT_SAMPLES {
        let i = rng.random_range(0..f.params.len());
        let mut p = f.params.clone();
        p[i] += FD_STEP;
        let up = f.net.loss(&inputs, &target, &p)?;
        p[i] -= 2.0 * FD_STEP;
        let down = f.net.loss(&inputs, &target, &p)?;
        let fd = (up - down) / (2.0 * FD_STEP);
        let rel = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(noise / 1e-4);
        worst = worst.max(rel);
    }
    Ok(worst)
}

pub fn verify(args: &VerifyArgs) -> Result<(), CliError> {
    let f = Fixture::new(args.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let checks = [
        Check {
            name: "descriptor_equivariance",
            max_error: descriptor_check(&f, &mut rng)?,
            tolerance: 1e-9,
        },
        Check {
            name: "layer_equivariance",
            max_error: layer_check(&f, &mut rng)?,
            tolerance: 1e-9,
        },
        Check {
            name: "end_to_end_equivariance",
            max_error: end_to_end_check(&f, &mut rng, args.poison)?,
            tolerance: 1e-7,
        },
        Check {
            name: "gradient",
            max_error: gradient_check(&f, &mut rng)?,
            tolerance: 1e-4,
        },
    ];

    let mut report = format!(
        "verification on {} vertices, {} parameters, seed {}{}\n",
        f.mesh.n_vertices(),
        f.net.num_params(),
        args.seed,
        if args.poison { " (poisoned edge attribute)" } else { "" }
    );
    let _ = writeln!(report, "{:<26}{:>14}{:>12}  result", "check", "max error", "tolerance");
    for c in &checks {
        let _ = writeln!(
            report,
            "{:<26}{:>14.3e}{:>12.0e}  {}",
            c.name,
            c.max_error,
            c.tolerance,
            if c.passed() { "PASS" } else { "FAIL" }
        );
    }
    print!("{report}");
    if let Some(path) = &args.out {
        std::fs::write(path, &report)?;
    }
    let failed: Vec<_> = checks.iter().filter(|c| !c.passed()).map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!("failed checks: {}", failed.join(", "))))
    }
}
