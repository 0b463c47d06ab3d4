pub mod adam;
pub mod analysis;
pub mod baselines;
pub mod cli;
pub mod error;
mod linalg;
pub mod maze;
pub mod mdp;
pub mod meta;
pub mod output;
pub mod planner;
pub mod probes;
pub mod stimuli;

pub use error::{Error, MazeParseError, Result};
