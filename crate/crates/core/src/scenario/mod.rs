//! Vertiport network, altitude lanes, pad inventory and synthetic demand.

mod config;
pub mod demand;
pub mod network;

pub use config::{GridLayout, LaneConfig, NetworkConfig, RingLayout, ScenarioConfig, SyntheticConfig, VertiportSpec};
pub use demand::{generate_demand, plans_to_text, Dispatcher, FlightPlan, LegEnd, OdWeights, PadState};
pub use network::{allocate_pads, lane_altitudes, Corridor, Vertiport, VertiportId, VertiportNetwork};
