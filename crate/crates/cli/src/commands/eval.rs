use equiflow::mesh::save_mesh_with_vectors;
use equiflow::metrics::MetricReport;
use equiflow::net::{Checkpoint, Network};
use equiflow::so3::RigidMotion;
use equiflow::synth::load_dataset;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::write;
use crate::manifest::Run;
use crate::{CliError, EvalArgs};

pub const METRICS_CSV: &str = "metrics.csv";
pub const METRICS_TABLE: &str = "metrics.txt";

pub fn eval(args: &EvalArgs) -> Result<(), CliError> {
    let run = Run::start("eval");
    if !args.checkpoint.is_file() {
        return Err(CliError::Usage(format!(
            "checkpoint {} does not exist",
            args.checkpoint.display()
        )));
    }
    let checkpoint = Checkpoint::load(&args.checkpoint)?;
    let mut data = load_dataset(&args.data)?;
    let test = data.split.test.clone();
    if args.rotate_test {
        // One fresh motion per test mesh, drawn in split order.
        let mut rng = ChaCha8Rng::seed_from_u64(args.rotate_seed);
        let extent = data.ranges.translation_extent;
        for &i in &test {
            let m = RigidMotion::random(&mut rng, extent);
            let s = &mut data.samples[i];
            s.mesh = s.mesh.transformed(&m);
            s.field = s.field.rotated(&m.rotation);
        }
    }
    let samples = super::train::prepare(&checkpoint.model, &checkpoint.graph, &data, &test)?;
    let net = Network::new(checkpoint.model.clone())?;
    net.check_params(&checkpoint.params)?;
    let preds = samples
        .par_iter()
        .map(|s| net.forward(&s.inputs, &checkpoint.params.values))
        .collect::<equiflow::Result<Vec<_>>>()?;
    let truths: Vec<_> = samples.into_iter().map(|s| s.target).collect();
    let report = MetricReport::evaluate(&preds, &truths)?;

    let label = format!(
        "{}{}",
        checkpoint.model.name(),
        if args.rotate_test { " (rotated test)" } else { "" }
    );
    let table = report.to_table(&label);
    print!("{table}");
    std::fs::create_dir_all(&args.out)?;
    let mut outputs = vec![
        write(&args.out, METRICS_CSV, &report.to_csv())?,
        write(&args.out, METRICS_TABLE, &table)?,
    ];
    if args.export {
        for (k, &i) in test.iter().enumerate() {
            let s = &data.samples[i];
            let vtk = save_mesh_with_vectors(
                &s.mesh,
                &[("velocity", &truths[k].rows), ("prediction", &preds[k].rows)],
            )?;
            outputs.push(write(&args.out, &format!("prediction_{i:04}.vtk"), &vtk)?);
        }
    }
    run.finish(
        &args.out,
        args.rotate_seed,
        serde_json::json!({
            "rotate_test": args.rotate_test,
            "export": args.export,
            "test_samples": test,
        }),
        vec![
            args.data.join(equiflow::synth::MANIFEST_FILE),
            args.checkpoint.clone(),
        ],
        outputs,
    )
}
