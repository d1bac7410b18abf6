//! Network architecture, parameters and serialization.

mod block;
pub mod checkpoint;
pub mod config;
mod layer;
mod net;
pub mod params;

pub use block::MsmsfBlock;
pub use checkpoint::{Checkpoint, CheckpointEntry};
pub use config::{
    BranchSpec, ConvStage, MsmsfBlockConfig, MsmsfNetConfig, NetProfile, PairFusion, StageConfig,
    SIDE_OUTPUTS,
};
pub use net::{MsmsfNet, NetOutputs};
pub use params::{xavier_bound, ParamStore};

#[cfg(test)]
mod tests;
