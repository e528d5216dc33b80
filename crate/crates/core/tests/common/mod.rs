#![allow(dead_code)]

use equiflow::descriptors::{compute_descriptors, DescriptorMatrix};
use equiflow::mesh::{build_hierarchy, GraphHierarchy, TetMesh};
use equiflow::net::{BaselineConfig, GraphConfig, GraphInputs, ModelConfig, SegnnConfig};
use equiflow::so3::RigidMotion;
use equiflow::synth::{gen_tube, TubeSpec};

pub struct Prepared {
    pub mesh: TetMesh,
    pub hierarchy: GraphHierarchy,
    pub descriptors: DescriptorMatrix,
}

pub fn graph_config() -> GraphConfig {
    GraphConfig {
        k: 8,
        ratios: (0.5, 0.5),
    }
}

pub fn tube(segments: usize, rings: usize, bend: f64, seed: u64) -> TubeSpec {
    TubeSpec {
        length: 12.0,
        radius: 2.0,
        axial_segments: segments,
        radial_rings: rings,
        bend_angle: bend,
        seed,
        ..TubeSpec::default()
    }
}

pub fn prepare(mesh: TetMesh, g: &GraphConfig) -> Prepared {
    let hierarchy = build_hierarchy(&mesh, g.k, g.ratios).unwrap();
    let descriptors = compute_descriptors(&mesh).unwrap();
    Prepared {
        mesh,
        hierarchy,
        descriptors,
    }
}

pub fn prepared_tube(spec: &TubeSpec) -> Prepared {
    prepare(gen_tube(spec).unwrap(), &graph_config())
}

pub fn moved(p: &Prepared, m: &RigidMotion) -> Prepared {
    prepare(p.mesh.transformed(m), &graph_config())
}

pub fn inputs(config: &ModelConfig, p: &Prepared) -> GraphInputs {
    GraphInputs::prepare(config, &p.mesh, &p.hierarchy, &p.descriptors).unwrap()
}

pub fn small_segnn() -> SegnnConfig {
    SegnnConfig {
        hidden: "4x0e+2x1o+1x2e".parse().unwrap(),
        layers_per_scale: 1,
        ..SegnnConfig::default()
    }
}

pub fn small_baseline() -> BaselineConfig {
    BaselineConfig {
        width: 16,
        layers_per_scale: 1,
        ..BaselineConfig::default()
    }
}
