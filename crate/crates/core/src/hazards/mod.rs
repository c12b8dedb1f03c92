//! Stochastic degradation and environment hazards.

pub mod energy;
pub mod grid;
pub mod navloss;
pub mod wind;

pub use energy::{
    consume_energy, energy_capacity, sample_initial_cycles, ConsumptionModel, EnergyModelParams, LinearConsumption,
};
pub use grid::Lattice;
pub use navloss::{nav_loss_event, NavLossConfig, NavLossModel};
pub use wind::{wind_at, WindConfig, WindField, WindVector};
