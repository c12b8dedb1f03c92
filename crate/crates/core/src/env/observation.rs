//! Fixed-length, normalized per-agent observation vectors.
//!
//! Layout (all offsets from [`ObservationLayout`]):
//!
//! | block | fields |
//! |---|---|
//! | own | heading/360, altitude/5000 ft, ground speed/120 kn, accel limit/0.5 g, route distance/scale, energy/350 kWh, nav mode code |
//! | route | next `waypoints` waypoints as (east, north)/scale relative to own position |
//! | wind | north, east / wind scale |
//! | vertiports | `vertiports` nearest as (east, north)/scale |
//! | population | density at own position (0 when no layer is loaded) |
//! | p_nav | nav-loss probability at own position |
//! | intruders | `intruders` nearest aircraft as (east, north)/scale, heading/360, speed/120, altitude/5000 |
//!
//! Missing waypoints, vertiports or intruders are zero padded.

use serde::{Deserialize, Serialize};

use crate::hazards::energy::MAX_ENERGY_KWH as ENERGY_SCALE_KWH;
use crate::geo::{LocalXY, Projection};
use crate::kinematics::{AircraftState, NavMode, MAX_ACCEL_G, MAX_ALTITUDE_FT, MAX_SPEED_KN};
use crate::hazards::{NavLossModel, WindVector};
use crate::scenario::VertiportNetwork;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Observation(pub Vec<f64>);

impl Observation {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObservationLayout {
    pub waypoints: usize,
    pub vertiports: usize,
    pub intruders: usize,
}

pub const OWN_FIELDS: usize = 7;
pub const INTRUDER_FIELDS: usize = 5;

impl ObservationLayout {
    pub const HEADING: usize = 0;
    pub const ALTITUDE: usize = 1;
    pub const SPEED: usize = 2;
    pub const ACCEL: usize = 3;
    pub const ROUTE_DISTANCE: usize = 4;
    pub const ENERGY: usize = 5;
    pub const NAV_MODE: usize = 6;

    pub fn wind_offset(&self) -> usize {
        OWN_FIELDS + 2 * self.waypoints
    }

    pub fn vertiport_offset(&self) -> usize {
        self.wind_offset() + 2
    }

    pub fn population_offset(&self) -> usize {
        self.vertiport_offset() + 2 * self.vertiports
    }

    pub fn p_nav_offset(&self) -> usize {
        self.population_offset() + 1
    }

    pub fn intruder_offset(&self) -> usize {
        self.p_nav_offset() + 1
    }

    pub fn len(&self) -> usize {
        self.intruder_offset() + INTRUDER_FIELDS * self.intruders
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

pub fn nav_mode_code(m: NavMode) -> f64 {
    match m {
        NavMode::FollowRoute => 0.0,
        NavMode::HoldHeading => 0.5,
        NavMode::Descending => 1.0,
    }
}

pub(crate) struct ObservationContext<'a> {
    pub layout: ObservationLayout,
    pub network: &'a VertiportNetwork,
    pub nav: &'a NavLossModel,
    pub distance_scale_m: f64,
    pub wind_scale_ms: f64,
}

impl ObservationContext<'_> {
    fn proj(&self) -> &Projection {
        self.network.projection()
    }

    /// Builds the observation for `own` given every live aircraft (own included).
    pub fn build(&self, own: &AircraftState, wind: WindVector, fleet: &[(LocalXY, &AircraftState)]) -> Observation {
        let l = self.layout;
        let scale = self.distance_scale_m;
        let mut v = vec![0.0; l.len()];
        let here = own.local(self.proj());

        v[ObservationLayout::HEADING] = own.heading_deg / 360.0;
        v[ObservationLayout::ALTITUDE] = own.altitude_ft / MAX_ALTITUDE_FT;
        v[ObservationLayout::SPEED] = own.ground_speed_kn / MAX_SPEED_KN;
        v[ObservationLayout::ACCEL] = own.accel_limit_g / MAX_ACCEL_G;
        v[ObservationLayout::ROUTE_DISTANCE] = own.route_distance_remaining_m / scale;
        v[ObservationLayout::ENERGY] = own.energy_kwh / ENERGY_SCALE_KWH;
        v[ObservationLayout::NAV_MODE] = nav_mode_code(own.nav_mode);

        for (k, wp) in own.route.local().iter().skip(own.active_waypoint).take(l.waypoints).enumerate() {
            v[OWN_FIELDS + 2 * k] = (wp.x - here.x) / scale;
            v[OWN_FIELDS + 2 * k + 1] = (wp.y - here.y) / scale;
        }

        let w = l.wind_offset();
        v[w] = wind.north / self.wind_scale_ms;
        v[w + 1] = wind.east / self.wind_scale_ms;

        let mut ports: Vec<(f64, LocalXY)> = (0..self.network.len() as u32)
            .map(|id| {
                let p = self.network.local(id);
                (p.distance(&here), p)
            })
            .collect();
        ports.sort_by(|a, b| a.0.total_cmp(&b.0));
        let o = l.vertiport_offset();
        for (k, (_, p)) in ports.iter().take(l.vertiports).enumerate() {
            v[o + 2 * k] = (p.x - here.x) / scale;
            v[o + 2 * k + 1] = (p.y - here.y) / scale;
        }

        // no population layer is modeled; the slot stays zero
        v[l.p_nav_offset()] = self.nav.probability_at(own.position);

        if l.intruders > 0 {
            let mut others: Vec<(f64, LocalXY, &AircraftState)> = fleet
                .iter()
                .filter(|(_, s)| s.id != own.id)
                .map(|(p, s)| (p.distance(&here), *p, *s))
                .collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.id.cmp(&b.2.id)));
            let o = l.intruder_offset();
            for (k, (_, p, s)) in others.iter().take(l.intruders).enumerate() {
                let b = o + INTRUDER_FIELDS * k;
                v[b] = (p.x - here.x) / scale;
                v[b + 1] = (p.y - here.y) / scale;
                v[b + 2] = s.heading_deg / 360.0;
                v[b + 3] = s.ground_speed_kn / MAX_SPEED_KN;
                v[b + 4] = s.altitude_ft / MAX_ALTITUDE_FT;
            }
        }
        Observation(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_length() {
        let l = ObservationLayout {
            waypoints: 3,
            vertiports: 3,
            intruders: 3,
        };
        assert_eq!(l.len(), 7 + 6 + 2 + 6 + 1 + 1 + 15);
        assert_eq!(l.intruder_offset() + 15, l.len());
    }
}
