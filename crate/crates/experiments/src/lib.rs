//! Experiment configs, presets and drivers for the IRS phase-design study.

pub mod config;
pub mod error;
pub mod methods;
pub mod output;
pub mod overhead;
pub mod presets;
pub mod run;
