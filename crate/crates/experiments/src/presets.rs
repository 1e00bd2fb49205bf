//! Named figure and table configurations.
//!
//! All share the default placement and link parameters of [`Scenario`].

use std::path::PathBuf;

use crate::config::{Axis, ExperimentConfig, Metric, MonteCarlo, OptimizerConfig, Overhead, Scenario, Sweep};
use crate::error::{ExpError, Result};

pub const PRESETS: [&str; 8] = ["fig1", "fig2a", "fig2b", "fig3a", "fig3b", "fig4a", "fig4b", "table2"];

const OPTIMIZED: [&str; 5] = ["mpso-b1", "mpso-b2", "mpso-b5", "pso", "instantaneous-greedy"];

fn range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let count = ((stop - start) / step).round() as usize;
    (0..=count).map(|i| start + i as f64 * step).collect()
}

fn base(name: &str, metric: Metric, scenario: Scenario, axis: Axis, values: Vec<f64>) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_string(),
        metric,
        methods: OPTIMIZED.iter().map(|s| s.to_string()).collect(),
        output_dir: PathBuf::from("results").join(name),
        scenario,
        sweep: Sweep { axis, values },
        optimizer: OptimizerConfig::default(),
        monte_carlo: MonteCarlo::default(),
        overhead: Overhead::default(),
    }
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let s = Scenario::default();
    Ok(match name {
        "fig1" => {
            let mut c = base("fig1", Metric::Op, s, Axis::Elements, vec![20.0, 40.0]);
            c.methods = vec!["zero-phase".into(), "random".into()];
            c
        }
        "fig2a" => base(
            "fig2a",
            Metric::Op,
            Scenario { elements: 40, ..s },
            Axis::SnrTxDb,
            range(66.0, 76.0, 2.0),
        ),
        "fig2b" => base("fig2b", Metric::Op, s, Axis::Elements, range(10.0, 60.0, 10.0)),
        "fig3a" => base(
            "fig3a",
            Metric::Op,
            Scenario { threshold_db: 5.0, ..s },
            Axis::Antennas,
            range(4.0, 8.0, 1.0),
        ),
        "fig3b" => base(
            "fig3b",
            Metric::Op,
            Scenario { antennas: 2, ..s },
            Axis::ThresholdDb,
            range(-10.0, 4.0, 2.0),
        ),
        "fig4a" => base("fig4a", Metric::Rate, s, Axis::Antennas, range(1.0, 8.0, 1.0)),
        "fig4b" => base(
            "fig4b",
            Metric::Rate,
            Scenario { elements: 40, ..s },
            Axis::SnrTxDb,
            range(60.0, 80.0, 4.0),
        ),
        "table2" => {
            let mut c = base("table2", Metric::Op, s, Axis::Bits, vec![5.0]);
            c.methods = vec!["zero-phase".into()];
            c.overhead.elements = vec![1, 40, 1000];
            c
        }
        _ => {
            return Err(ExpError::Config(format!(
                "unknown preset `{name}` (available: {})",
                PRESETS.join(", ")
            )))
        }
    })
}
