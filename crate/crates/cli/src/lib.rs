//! Library side of the command-line driver: fixture configuration,
//! subcommand runners, SVG figures. The binary is a thin shell over
//! [`run::run`]; integration tests call the same functions directly.

pub mod config;
pub mod render;
pub mod run;
