//! Dataset files, synthetic frames and report serialization.

pub mod manifest;
pub mod report;
pub mod synth;

pub use manifest::{load_dataset, read_manifest, write_synthetic_dataset, Manifest, ManifestEntry};
pub use report::{
    read_report_json, read_results, write_gold_csv, write_plot_data, write_report, write_results,
    FrameResult, ReportFile, ReportFormat, ResultsFile,
};
pub use synth::{generate_synthetic, Artifact, IntensityLevels, SynthSpec, SyntheticFrame};
