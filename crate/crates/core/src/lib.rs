//! Fast-time, multi-agent simulation environment for advanced air mobility
//! contingency management, plus the experiment harness around it.

pub mod config;
pub mod env;
pub mod error;
pub mod geo;
pub mod harness;
pub mod hazards;
pub mod kinematics;
pub mod protocol;
pub mod rng;
pub mod scenario;

pub use config::{ConfigDoc, SimConfig};
pub use env::{Action, AgentId, CmEnv, Observation, StepResult, TerminalKind};
pub use error::{Error, Result};
