//! Experiment harness: datasets, configuration, training traces and the
//! robustness sweep. The CLI is a thin shell over this module.

pub mod config;
pub mod dataset;
pub mod manifest;
pub mod robustness;
pub mod synth;
pub mod train;
