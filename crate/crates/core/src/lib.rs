//! Exact inference on belief diagrams by evidence absorption, evidence
//! reversal and probability propagation, with a message-passing scheduler
//! for forests and a brute-force enumeration oracle.

pub mod cli;
pub mod generate;
pub mod marginals;
pub mod model;
pub mod netio;
pub mod oracle;
pub mod scheduler;
pub mod transform;

pub use marginals::{MarginalsError, PosteriorReport};
pub use model::{BeliefDiagram, NodeId, NodeStatus, PotentialTable, TopologyClass};
pub use scheduler::{run, RunOptions, RunOutcome, SchedulerError, Strategy};
pub use transform::{EvidenceAssertion, TransformError, TransformTrace};
