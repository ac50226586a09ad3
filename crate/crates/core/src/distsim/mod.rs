//! Lock-step message-passing execution of the phased algorithm. Every node
//! acts on what reached it through flooding gathers, and every relay round
//! is counted.

pub mod dj;
pub mod mis;
pub mod protocol;
pub mod sim;

pub use dj::dj_distance;
pub use mis::{mis_distributed, JKey, JNode, MisOutcome};
pub use protocol::{
    run_distributed, run_distributed_observed, step_radii, DistPhaseSnapshot, DistPhaseTrace, NodeState,
    SimConfig, SimTranscript, StepRadii, DEFAULT_MAX_ROUNDS,
};
pub use sim::{gather_khop, Accounting, GatherRecord, Gathered, Record, Simulator};
