use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::field::VelocityField;
use crate::mesh::{load_mesh_with_vectors, save_mesh, TetMesh};
use crate::so3::RigidMotion;
use crate::{Error, Result};

use super::flow::analytic_flow;
use super::tube::{gen_tube, TubeSpec};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Inclusive sampling ranges for [`TubeSpec`] fields.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecRanges {
    pub length: [f64; 2],
    pub radius: [f64; 2],
    pub axial_segments: [usize; 2],
    pub radial_rings: [usize; 2],
    pub bend_angle: [f64; 2],
    pub v_max: [f64; 2],
    pub jitter: f64,
    /// Translations of randomly moved samples are uniform in ±extent per axis.
    pub translation_extent: f64,
}

impl Default for SpecRanges {
    fn default() -> Self {
        Self {
            length: [20.0, 40.0],
            radius: [1.5, 3.0],
            axial_segments: [8, 12],
            radial_rings: [2, 2],
            bend_angle: [0.0, 1.2],
            v_max: [100.0, 100.0],
            jitter: 0.1,
            translation_extent: 10.0,
        }
    }
}

impl SpecRanges {
    fn validate(&self) -> Result<()> {
        let float_ok = [self.length, self.radius, self.bend_angle, self.v_max]
            .iter()
            .all(|[a, b]| a.is_finite() && b.is_finite() && a <= b);
        let int_ok = [self.axial_segments, self.radial_rings]
            .iter()
            .all(|[a, b]| a <= b);
        if !float_ok || !int_ok {
            return Err(Error::Precondition("empty or non-finite spec range".into()));
        }
        Ok(())
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> TubeSpec {
        let f = |rng: &mut R, [a, b]: [f64; 2]| if a == b { a } else { rng.random_range(a..=b) };
        let u = |rng: &mut R, [a, b]: [usize; 2]| rng.random_range(a..=b);
        TubeSpec {
            length: f(rng, self.length),
            radius: f(rng, self.radius),
            axial_segments: u(rng, self.axial_segments),
            radial_rings: u(rng, self.radial_rings),
            bend_angle: f(rng, self.bend_angle),
            v_max: f(rng, self.v_max),
            seed: rng.random(),
            jitter: self.jitter,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub spec: TubeSpec,
    pub mesh: TetMesh,
    pub field: VelocityField,
    /// Rigid motion applied to both mesh and field after generation.
    pub motion: Option<RigidMotion>,
}

/// Draws `count` specs from `ranges`, generates meshes and their flow, and
/// optionally moves each pair by its own random rigid motion.
pub fn gen_dataset(
    count: usize,
    ranges: &SpecRanges,
    seed: u64,
    random_rotation: bool,
) -> Result<Vec<Sample>> {
    if count == 0 {
        return Err(Error::Precondition("dataset count must be at least 1".into()));
    }
    ranges.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let drawn: Vec<(TubeSpec, Option<RigidMotion>)> = (0..count)
        .map(|_| {
            let spec = ranges.sample(&mut rng);
            let motion =
                random_rotation.then(|| RigidMotion::random(&mut rng, ranges.translation_extent));
            (spec, motion)
        })
        .collect();
    drawn
        .into_par_iter()
        .map(|(spec, motion)| {
            let mesh = gen_tube(&spec)?;
            let field = analytic_flow(&mesh, &spec)?;
            Ok(match motion {
                Some(m) => Sample {
                    mesh: mesh.transformed(&m),
                    field: field.rotated(&m.rotation),
                    spec,
                    motion,
                },
                None => Sample {
                    spec,
                    mesh,
                    field,
                    motion,
                },
            })
        })
        .collect()
}

/// Disjoint train/validation/test index sets, each sorted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// 80:10:10 with validation and test each `max(1, ⌊n/10⌋)` samples.
    pub fn by_ratio(n: usize, seed: u64) -> Result<Split> {
        let eval = (n / 10).max(1);
        if n < 2 * eval + 1 {
            return Err(Error::EmptySplit(format!(
                "{n} samples cannot fill train, validation and test"
            )));
        }
        Self::with_counts(n, n - 2 * eval, eval, eval, seed)
    }

    /// Random disjoint subsets of the given sizes drawn from `0..n`.
    pub fn with_counts(n: usize, train: usize, val: usize, test: usize, seed: u64) -> Result<Split> {
        if train == 0 || val == 0 || test == 0 || train + val + test > n {
            return Err(Error::EmptySplit(format!(
                "cannot draw {train}/{val}/{test} samples from {n}"
            )));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let take = |range: std::ops::Range<usize>| {
            let mut v = perm[range].to_vec();
            v.sort_unstable();
            v
        };
        let test_set = take(0..test);
        let val_set = take(test..test + val);
        let train_set = take(test + val..test + val + train);
        Ok(Split {
            train: train_set,
            val: val_set,
            test: test_set,
        })
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for &i in self.train.iter().chain(&self.val).chain(&self.test) {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::EmptySplit(format!(
                    "split index {i} repeated or out of range for {n} samples"
                )));
            }
        }
        if self.train.is_empty() || self.val.is_empty() || self.test.is_empty() {
            return Err(Error::EmptySplit("a split part is empty".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub file: String,
    pub spec: TubeSpec,
    pub motion: Option<RigidMotion>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub seed: u64,
    pub random_rotation: bool,
    pub ranges: SpecRanges,
    pub split: Split,
    pub samples: Vec<SampleRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub seed: u64,
    pub random_rotation: bool,
    pub ranges: SpecRanges,
    pub split: Split,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn generate(
        count: usize,
        ranges: &SpecRanges,
        seed: u64,
        random_rotation: bool,
    ) -> Result<Dataset> {
        let samples = gen_dataset(count, ranges, seed, random_rotation)?;
        let split = Split::by_ratio(count, seed)?;
        Ok(Dataset {
            seed,
            random_rotation,
            ranges: *ranges,
            split,
            samples,
        })
    }

    pub fn manifest(&self) -> DatasetManifest {
        DatasetManifest {
            seed: self.seed,
            random_rotation: self.random_rotation,
            ranges: self.ranges,
            split: self.split.clone(),
            samples: self
                .samples
                .iter()
                .enumerate()
                .map(|(i, s)| SampleRecord {
                    file: sample_file(i),
                    spec: s.spec,
                    motion: s.motion,
                })
                .collect(),
        }
    }
}

fn sample_file(i: usize) -> String {
    format!("sample_{i:04}.vtk")
}

/// Writes one VTK file per sample (mesh, roles and `velocity`) plus the
/// manifest into `dir`, creating it if needed.
pub fn save_dataset(dir: &Path, dataset: &Dataset) -> Result<()> {
    fs::create_dir_all(dir)?;
    let manifest = dataset.manifest();
    for (rec, s) in manifest.samples.iter().zip(&dataset.samples) {
        fs::write(dir.join(&rec.file), save_mesh(&s.mesh, Some(&s.field))?)?;
    }
    fs::write(
        dir.join(MANIFEST_FILE),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok(())
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let manifest: DatasetManifest =
        serde_json::from_slice(&fs::read(dir.join(MANIFEST_FILE))?)?;
    manifest.split.validate(manifest.samples.len())?;
    let samples = manifest
        .samples
        .iter()
        .map(|rec| {
            let content = load_mesh_with_vectors(&fs::read(dir.join(&rec.file))?)?;
            let rows = content
                .vector("velocity")
                .ok_or_else(|| {
                    Error::Precondition(format!("{} has no velocity array", rec.file))
                })?
                .to_vec();
            Ok(Sample {
                spec: rec.spec,
                mesh: content.mesh,
                field: VelocityField::new(rows),
                motion: rec.motion,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        seed: manifest.seed,
        random_rotation: manifest.random_rotation,
        ranges: manifest.ranges,
        split: manifest.split,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranges() -> SpecRanges {
        SpecRanges {
            axial_segments: [4, 6],
            ..SpecRanges::default()
        }
    }

    #[test]
    fn deterministic_and_sized() {
        let a = gen_dataset(3, &ranges(), 11, true).unwrap();
        let b = gen_dataset(3, &ranges(), 11, true).unwrap();
        assert_eq!(a, b);
        assert_eq!(gen_dataset(1, &ranges(), 11, false).unwrap().len(), 1);
        assert!(gen_dataset(0, &ranges(), 11, false).is_err());
        let bad = SpecRanges {
            radius: [2.0, 1.0],
            ..ranges()
        };
        assert!(gen_dataset(2, &bad, 1, false).is_err());
    }

    #[test]
    fn split_sizes() {
        let s = Split::by_ratio(20, 1).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (16, 2, 2));
        s.validate(20).unwrap();
        let s = Split::by_ratio(3, 1).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (1, 1, 1));
        assert!(Split::by_ratio(2, 1).is_err());
        assert_eq!(Split::by_ratio(30, 9).unwrap(), Split::by_ratio(30, 9).unwrap());
    }
}
