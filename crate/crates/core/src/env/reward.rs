//! Step reward: terminal-state term, vertiport-proximity term, action term and
//! a constant step penalty.

use serde::{Deserialize, Serialize};

use super::{Action, TerminalKind};
use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::scenario::{Vertiport, VertiportId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardParams {
    /// step penalty, subtracted every step
    pub omega: f64,
    pub delta_energy: f64,
    pub delta_navigation: f64,
    /// per meter of route still to fly at touchdown
    pub delta_range_to_destination: f64,
    pub delta_land: f64,
    pub delta_action_penalty: f64,
    pub delta_vertiport_destination: f64,
    pub delta_vertiport_other: f64,
    /// width of the vertiport reward kernel, degrees
    pub sigma: f64,
    /// Evaluate the vertiport term on every step instead of only at touchdown.
    pub h_every_step: bool,
}

impl Default for RewardParams {
    fn default() -> Self {
        RewardParams {
            omega: 0.001,
            delta_energy: -1.0,
            delta_navigation: -1.0,
            delta_range_to_destination: -1e-5,
            delta_land: -0.1,
            delta_action_penalty: -0.01,
            delta_vertiport_destination: 1.0,
            delta_vertiport_other: 0.25,
            sigma: 0.0005,
            h_every_step: false,
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<()> {
        let values = [
            self.omega,
            self.delta_energy,
            self.delta_navigation,
            self.delta_range_to_destination,
            self.delta_land,
            self.delta_action_penalty,
            self.delta_vertiport_destination,
            self.delta_vertiport_other,
            self.sigma,
        ];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("reward parameters must be finite"));
        }
        if self.sigma <= 0.0 {
            return Err(Error::config("reward.sigma must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_s: f64,
    pub r_h: f64,
    pub r_a: f64,
    pub omega: f64,
    pub total: f64,
}

impl RewardBreakdown {
    fn new(r_s: f64, r_h: f64, r_a: f64, omega: f64) -> Self {
        RewardBreakdown {
            r_s,
            r_h,
            r_a,
            omega,
            total: r_s + r_h + r_a - omega,
        }
    }
}

/// The part of an aircraft's state the reward looks at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardInput {
    pub position: GeoPoint,
    pub route_distance_remaining_m: f64,
    pub destination: VertiportId,
}

pub fn terminal_reward(terminal: Option<TerminalKind>, route_distance_m: f64, p: &RewardParams) -> f64 {
    match terminal {
        Some(TerminalKind::EnergyDepleted) => p.delta_energy,
        Some(TerminalKind::NavLost) => p.delta_navigation,
        Some(TerminalKind::Touchdown) => p.delta_range_to_destination * route_distance_m,
        None => 0.0,
    }
}

/// Sum of Gaussian kernels centred on every vertiport, in raw degrees.
pub fn vertiport_reward(pos: GeoPoint, destination: VertiportId, vertiports: &[Vertiport], p: &RewardParams) -> f64 {
    let two_sigma_sq = 2.0 * p.sigma * p.sigma;
    vertiports
        .iter()
        .map(|v| {
            let weight = if v.id == destination {
                p.delta_vertiport_destination
            } else {
                p.delta_vertiport_other
            };
            let d2 = (pos.lat - v.location.lat).powi(2) + (pos.lon - v.location.lon).powi(2);
            weight * (-d2 / two_sigma_sq).exp()
        })
        .sum()
}

pub fn action_reward(a: Action, p: &RewardParams) -> f64 {
    match a {
        Action::NoAlert => 0.0,
        Action::LandNow => p.delta_land + p.delta_action_penalty,
        _ => p.delta_action_penalty,
    }
}

pub fn compute_reward(
    s: &RewardInput,
    a: Action,
    terminal: Option<TerminalKind>,
    p: &RewardParams,
    vertiports: &[Vertiport],
) -> RewardBreakdown {
    let r_s = terminal_reward(terminal, s.route_distance_remaining_m, p);
    let r_h = if p.h_every_step || terminal == Some(TerminalKind::Touchdown) {
        vertiport_reward(s.position, s.destination, vertiports, p)
    } else {
        0.0
    };
    RewardBreakdown::new(r_s, r_h, action_reward(a, p), p.omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ports() -> Vec<Vertiport> {
        vec![
            Vertiport {
                id: 0,
                name: "A".into(),
                location: GeoPoint { lat: 40.70, lon: -74.00 },
                total_pads: 2,
            },
            Vertiport {
                id: 1,
                name: "B".into(),
                location: GeoPoint { lat: 40.80, lon: -73.90 },
                total_pads: 2,
            },
        ]
    }

    #[test]
    fn cruise_step_costs_omega() {
        let p = RewardParams::default();
        let s = RewardInput {
            position: GeoPoint { lat: 40.75, lon: -73.95 },
            route_distance_remaining_m: 5000.0,
            destination: 1,
        };
        let r = compute_reward(&s, Action::NoAlert, None, &p, &ports());
        assert_eq!(r.total, -p.omega);
    }

    #[test]
    fn touchdown_on_destination_center() {
        let p = RewardParams::default();
        let only = &ports()[..1];
        let s = RewardInput {
            position: only[0].location,
            route_distance_remaining_m: 0.0,
            destination: 0,
        };
        let r = compute_reward(&s, Action::NoAlert, Some(TerminalKind::Touchdown), &p, only);
        assert_abs_diff_eq!(r.total, p.delta_vertiport_destination - p.omega, epsilon = 1e-12);
    }

    #[test]
    fn touchdown_one_sigma_from_other_vertiport() {
        let p = RewardParams::default();
        let only = &ports()[..1];
        let s = RewardInput {
            position: GeoPoint {
                lat: only[0].location.lat + p.sigma,
                lon: only[0].location.lon,
            },
            route_distance_remaining_m: 0.0,
            destination: 7,
        };
        let r = compute_reward(&s, Action::LandNow, Some(TerminalKind::Touchdown), &p, only);
        let e = 0.606_530_7;
        let expected = p.delta_vertiport_other * e + p.delta_land + p.delta_action_penalty - p.omega;
        assert_abs_diff_eq!(r.total, expected, epsilon = 1e-7);
        assert_abs_diff_eq!((-0.5f64).exp(), e, epsilon = 1e-7);
    }

    #[test]
    fn terminal_terms() {
        let p = RewardParams::default();
        assert_eq!(terminal_reward(Some(TerminalKind::EnergyDepleted), 10.0, &p), p.delta_energy);
        assert_eq!(terminal_reward(Some(TerminalKind::NavLost), 10.0, &p), p.delta_navigation);
        assert_eq!(
            terminal_reward(Some(TerminalKind::Touchdown), 1234.0, &p),
            p.delta_range_to_destination * 1234.0
        );
    }

    #[test]
    fn action_terms() {
        let p = RewardParams::default();
        assert_eq!(action_reward(Action::NoAlert, &p), 0.0);
        assert_eq!(action_reward(Action::UseRoute, &p), p.delta_action_penalty);
        assert_eq!(action_reward(Action::HeadingHold, &p), p.delta_action_penalty);
        assert_eq!(action_reward(Action::LandNow, &p), p.delta_land + p.delta_action_penalty);
    }

    #[test]
    fn vertiport_term_only_at_touchdown_unless_requested() {
        let mut p = RewardParams::default();
        let only = &ports()[..1];
        let s = RewardInput {
            position: only[0].location,
            route_distance_remaining_m: 0.0,
            destination: 0,
        };
        assert_eq!(compute_reward(&s, Action::NoAlert, None, &p, only).r_h, 0.0);
        p.h_every_step = true;
        assert_eq!(compute_reward(&s, Action::NoAlert, None, &p, only).r_h, 1.0);
    }

    #[test]
    fn proximity_term_decreases_with_distance() {
        let p = RewardParams::default();
        let only = &ports()[..1];
        let mut prev = f64::INFINITY;
        for k in 0..50 {
            let pos = GeoPoint {
                lat: only[0].location.lat + k as f64 * 0.0001,
                lon: only[0].location.lon + k as f64 * 0.00005,
            };
            let r = vertiport_reward(pos, 0, only, &p);
            assert!(r < prev);
            prev = r;
        }
    }

    #[test]
    fn breakdown_sums() {
        let r = RewardBreakdown::new(0.3, 0.2, -0.11, 0.001);
        assert_eq!(r.total, 0.3 + 0.2 + -0.11 - 0.001);
    }
}
