//! Scenario orchestration: config, closed-loop runs and figures.

pub mod config;
pub mod plot;
pub mod run;

pub use config::{load_config, ConfigError, InitialState, ScenarioConfig, Timing, BASELINE_TOML, DEFAULT_SEED};
pub use plot::{plot, plot_csv, PlotError, PLOT_FILES};
pub use run::{run, run_streaming, SimError, DIVERGENCE_LIMIT};
