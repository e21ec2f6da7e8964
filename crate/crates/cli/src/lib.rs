//! Scenario parsing, figure recipes and output writing for the `cfnet`
//! command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod output;
pub mod plot;
pub mod recipes;

pub use config::{parse_config, parse_config_str, Experiment, Scenario, UnitMode};
pub use experiments::run;
pub use output::{write_outputs, RunOutput};
pub use recipes::{recipe, Figure};
