//! Experiment harness for the pooled data toolkit: seeded batch runs,
//! plot-ready output files, and reproduction presets.

pub mod cli;
pub mod error;
pub mod experiment;
pub mod presets;
pub mod rows;
pub mod window;
