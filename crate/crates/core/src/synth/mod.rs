//! Synthetic straight and bent tubes with a laminar velocity oracle.

mod dataset;
mod flow;
mod tube;

pub use dataset::{
    gen_dataset, load_dataset, save_dataset, Dataset, Sample, SampleRecord, Split, SpecRanges,
    DatasetManifest, MANIFEST_FILE,
};
pub use flow::{analytic_flow, analytic_flow_in_frame, centerline_projection, flow_at_point};
pub use tube::{
    gen_tube, section_vertex_count, tube_tet_count, tube_vertex_count, TubeSpec,
};
