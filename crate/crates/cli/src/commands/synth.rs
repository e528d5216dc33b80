use equiflow::synth::{save_dataset, Dataset, SpecRanges, MANIFEST_FILE};

use super::to_value;
use crate::manifest::Run;
use crate::{CliError, SynthArgs};

pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let run = Run::start("synth");
    if args.min_segments > args.max_segments {
        return Err(CliError::Usage(format!(
            "--min-segments {} exceeds --max-segments {}",
            args.min_segments, args.max_segments
        )));
    }
    let ranges = SpecRanges {
        axial_segments: [args.min_segments, args.max_segments],
        radial_rings: [args.rings, args.rings],
        ..SpecRanges::default()
    };
    let dataset = Dataset::generate(args.count, &ranges, args.seed, args.rotate)?;
    save_dataset(&args.out, &dataset)?;
    let mut outputs = vec![args.out.join(MANIFEST_FILE)];
    outputs.extend(dataset.manifest().samples.iter().map(|s| args.out.join(&s.file)));
    println!(
        "wrote {} samples ({} train / {} val / {} test) to {}",
        args.count,
        dataset.split.train.len(),
        dataset.split.val.len(),
        dataset.split.test.len(),
        args.out.display()
    );
    run.finish(
        &args.out,
        args.seed,
        serde_json::json!({
            "count": args.count,
            "rotate": args.rotate,
            "ranges": to_value(&ranges)?,
        }),
        vec![],
        outputs,
    )
}
