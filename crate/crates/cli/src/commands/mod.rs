//! Implementations of the `msmsf` subcommands.

mod eval;
mod inspect;
mod predict;
mod synth;
mod train;

use std::path::Path;

use msmsf_core::Error;

use crate::error::Result;

pub use eval::{cmd_eval, EvalArgs, EvalOutcome};
pub use inspect::cmd_inspect;
pub use predict::{cmd_predict, PredictArgs};
pub use synth::cmd_synth;
pub use train::{cmd_train, TrainSummary};

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e).into())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e).into())
}
