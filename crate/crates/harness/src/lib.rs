//! Experiment orchestration for irregular RIS studies: spec parsing, named
//! presets, the successive-refinement baseline, Monte Carlo sweeps and
//! result files.

pub mod error;
pub mod experiment;
pub mod presets;
pub mod spec;
pub mod sr;
pub mod stats;
pub mod topology;

pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, write_outputs, DropRow, ExperimentOutcome, ResultRow};
pub use spec::{Baseline, ExperimentSpec, Sweep};
