//! Library side of the `nsfrac` command: config loading, rendering and the
//! run driver, kept separate from `main` so they can be tested directly.

pub mod config;
pub mod render;
pub mod run;

pub use config::{load, parse, ConfigError, Mode, RunConfig};
pub use render::render_pgm;
pub use run::{run, ExitStatus, Outcome, RunOptions};
