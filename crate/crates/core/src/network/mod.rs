//! Communication graphs, neighbourhood averaging and the multi-agent
//! simulator.

mod bounds;
mod graph;
mod jacobi;
mod perron;
mod sim;

pub use bounds::{
    contraction_factor, theorem3_bound, theorem4_bound, ConsensusBound, Theorem3Inputs,
    Theorem4Inputs,
};
pub use graph::Graph;
pub use jacobi::{symmetric_eigen, SymmetricEigen, MAX_SWEEPS, OFF_DIAGONAL_TOLERANCE};
pub use perron::{ConsensusTarget, PerronMatrix};
pub use sim::{distributed_run, AgentHistory, Algorithm, Dissemination, DistributedRun, RunConfig};
