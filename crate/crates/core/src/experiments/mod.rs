//! Config-driven experiment runs with manifests and plot data.

mod config;
mod manifest;
mod plotdata;
mod runner;

pub use config::{
    CoveringRun, DichotomyRun, DynamicalRun, ExperimentConfig, ExperimentKind, GapRun, IdsRun, InitialRun,
    LadderRun, ModelBlock, QucpRun, SolverBlock,
};
pub use manifest::{module_versions, sha256_hex, OutputFile, RunManifest};
pub use plotdata::{decay_plot, emit_plotdata, ids_plot, ladder_plot};
pub use runner::{run_config, run_experiment, RunOptions};
