//! Availability-driven synthetic demand.
//!
//! Each aircraft flies back-to-back legs: once it has been on the ground for the
//! turnaround time and a pad at its next destination can be reserved, it
//! departs. Destinations come from an origin/destination weight matrix and a
//! per-leg random stream keyed by (tail, leg index), so a tail's itinerary does
//! not depend on what the rest of the fleet is doing.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::network::{VertiportId, VertiportNetwork};
use crate::error::{Error, Result};
use crate::kinematics::RoutePath;
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct FlightPlan {
    pub aircraft: u32,
    /// Leg number for this aircraft, starting at 0.
    pub leg: u32,
    pub origin: VertiportId,
    pub destination: VertiportId,
    pub departure_s: f64,
    pub lane_ft: f64,
    pub route: Arc<RoutePath>,
    pub cruise_speed_kn: f64,
}

/// Origin/destination sampling weights.
#[derive(Debug, Clone, PartialEq)]
pub enum OdWeights {
    Uniform,
    Matrix(Vec<Vec<f64>>),
}

impl OdWeights {
    pub fn from_config(weights: Option<&Vec<Vec<f64>>>, n: usize) -> Result<Self> {
        let Some(rows) = weights else {
            return Ok(OdWeights::Uniform);
        };
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::config(format!("od_weights must be a {n}x{n} matrix")));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                return Err(Error::config("od_weights entries must be finite and >= 0"));
            }
            let off_diag: f64 = row.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, w)| w).sum();
            if off_diag <= 0.0 {
                return Err(Error::config(format!("od_weights row {i} has no reachable destination")));
            }
        }
        Ok(OdWeights::Matrix(rows.clone()))
    }

    pub fn sample_destination<R: Rng>(&self, origin: VertiportId, n: usize, rng: &mut R) -> VertiportId {
        self.sample_destination_among(origin, &vec![true; n], rng)
            .expect("every destination allowed")
    }

    /// Samples a destination other than `origin` among those with `allowed`
    /// set, renormalizing the weights. `None` when no allowed destination
    /// has positive weight.
    pub fn sample_destination_among<R: Rng>(
        &self,
        origin: VertiportId,
        allowed: &[bool],
        rng: &mut R,
    ) -> Option<VertiportId> {
        let origin = origin as usize;
        let weight = |j: usize| -> f64 {
            if j == origin || !allowed[j] {
                return 0.0;
            }
            match self {
                OdWeights::Uniform => 1.0,
                OdWeights::Matrix(rows) => rows[origin][j],
            }
        };
        let w: Vec<f64> = (0..allowed.len()).map(weight).collect();
        if w.iter().all(|&x| x <= 0.0) {
            return None;
        }
        Some(WeightedIndex::new(w).expect("some positive weight").sample(rng) as VertiportId)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PadState {
    pub total: u32,
    pub occupied: u32,
    /// Pads held for aircraft currently en route.
    pub reserved: u32,
}

impl PadState {
    pub fn reservable(&self) -> bool {
        self.occupied + self.reserved < self.total
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Tail {
    at: VertiportId,
    ready_at: f64,
    legs: u32,
    en_route_to: Option<VertiportId>,
}

/// Where a leg ended, as far as pad accounting is concerned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LegEnd {
    /// Touched down at this vertiport.
    Landed(VertiportId),
    /// Lost, or landed away from any vertiport. The vehicle is recovered to
    /// the pad reserved at its destination.
    Recovered,
}

#[derive(Debug, Clone)]
pub struct Dispatcher {
    network: Arc<VertiportNetwork>,
    od: OdWeights,
    seed: u64,
    turnaround_s: f64,
    cruise_speed_kn: f64,
    last_departure_s: f64,
    pads: Vec<PadState>,
    tails: Vec<Tail>,
    plan_builder: RouteCache,
}

impl Dispatcher {
    pub fn new(
        network: Arc<VertiportNetwork>,
        fleet: u32,
        od: OdWeights,
        seed: u64,
        turnaround_s: f64,
        cruise_speed_kn: f64,
        last_departure_s: f64,
    ) -> Result<Self> {
        let n = network.len();
        let capacity: u64 = network.vertiports().iter().map(|v| v.total_pads as u64).sum();
        if fleet as u64 > capacity {
            return Err(Error::config(format!(
                "fleet of {fleet} exceeds total pad capacity {capacity}"
            )));
        }
        let mut pads: Vec<PadState> = network
            .vertiports()
            .iter()
            .map(|v| PadState {
                total: v.total_pads,
                ..Default::default()
            })
            .collect();
        // spread the fleet round-robin; fill any overflow into vertiports with room
        let mut tails = Vec::with_capacity(fleet as usize);
        for i in 0..fleet as usize {
            let mut at = i % n;
            while pads[at].occupied >= pads[at].total {
                at = (at + 1) % n;
            }
            pads[at].occupied += 1;
            tails.push(Tail {
                at: at as VertiportId,
                ready_at: 0.0,
                legs: 0,
                en_route_to: None,
            });
        }
        let full = pads.iter().filter(|p| p.occupied == p.total).count();
        if full > 0 {
            log::info!("{full} vertiports start without a free emergency pad");
        }
        Ok(Dispatcher {
            plan_builder: RouteCache::new(&network),
            network,
            od,
            seed,
            turnaround_s,
            cruise_speed_kn,
            last_departure_s,
            pads,
            tails,
        })
    }

    pub fn pads(&self) -> &[PadState] {
        &self.pads
    }

    pub fn fleet(&self) -> usize {
        self.tails.len()
    }

    pub fn airborne(&self) -> usize {
        self.tails.iter().filter(|t| t.en_route_to.is_some()).count()
    }

    pub fn location(&self, tail: u32) -> Option<VertiportId> {
        let t = &self.tails[tail as usize];
        t.en_route_to.is_none().then_some(t.at)
    }

    /// True when some grounded aircraft could still depart at or after `now`.
    pub fn has_future_departures(&self, now: f64) -> bool {
        now <= self.last_departure_s && self.tails.iter().any(|t| t.en_route_to.is_none())
    }

    /// Next leg for a grounded tail: a destination that can take it right
    /// now, and a lane of the right parity. Both come from the stream for
    /// (tail, leg index), so retries at later times replay the same draws.
    fn next_leg(&self, tail: usize) -> Option<(VertiportId, usize)> {
        let t = &self.tails[tail];
        let allowed: Vec<bool> = self.pads.iter().map(PadState::reservable).collect();
        let mut rng = stream(self.seed, Stream::FlightPlan, &[tail as u64, t.legs as u64]);
        let destination = self.od.sample_destination_among(t.at, &allowed, &mut rng)?;
        // eastbound legs take even lanes, westbound legs odd ones
        let bearing = self.network.local(t.at).bearing_to(&self.network.local(destination));
        let parity = usize::from(bearing >= 180.0);
        let lanes = self.network.lanes().len();
        let choices: Vec<usize> = (parity..lanes).step_by(2).collect();
        let lane = choices[rng.random_range(0..choices.len())];
        Some((destination, lane))
    }

    /// Departs every grounded aircraft that is ready at `now` and can reserve
    /// a pad at its next destination, in tail order.
    pub fn dispatch(&mut self, now: f64) -> Vec<FlightPlan> {
        if now > self.last_departure_s {
            return vec![];
        }
        let mut out = vec![];
        for tail in 0..self.tails.len() {
            let t = &self.tails[tail];
            if t.en_route_to.is_some() || t.ready_at > now {
                continue;
            }
            let Some((destination, lane)) = self.next_leg(tail) else {
                continue;
            };
            let t = &mut self.tails[tail];
            let origin = t.at;
            self.pads[origin as usize].occupied -= 1;
            self.pads[destination as usize].reserved += 1;
            t.en_route_to = Some(destination);
            let leg_index = t.legs;
            t.legs += 1;
            let lane_ft = self.network.lanes()[lane];
            out.push(FlightPlan {
                aircraft: tail as u32,
                leg: leg_index,
                origin,
                destination,
                departure_s: now,
                lane_ft,
                route: self.plan_builder.route(&self.network, origin, destination, lane_ft),
                cruise_speed_kn: self.cruise_speed_kn,
            });
        }
        out
    }

    /// Returns a finished leg's aircraft to the ground and starts its turnaround.
    /// Returns the vertiport it now occupies.
    pub fn settle(&mut self, tail: u32, end: LegEnd, now: f64) -> VertiportId {
        let t = &mut self.tails[tail as usize];
        let dest = t.en_route_to.take().expect("settle called for a grounded aircraft");
        self.pads[dest as usize].reserved -= 1;
        let at = match end {
            LegEnd::Landed(v) if v == dest => dest,
            LegEnd::Landed(v) if self.pads[v as usize].reservable() => v,
            _ => dest,
        };
        self.pads[at as usize].occupied += 1;
        t.at = at;
        t.ready_at = now + self.turnaround_s;
        at
    }
}

/// Route polylines keyed by (origin, destination, lane), built on first use.
#[derive(Debug, Clone)]
struct RouteCache {
    n: usize,
    lanes: usize,
    routes: Vec<Option<Arc<RoutePath>>>,
}

impl RouteCache {
    fn new(network: &VertiportNetwork) -> Self {
        let n = network.len();
        let lanes = network.lanes().len();
        RouteCache {
            n,
            lanes,
            routes: vec![None; n * n * lanes],
        }
    }

    fn route(&mut self, network: &VertiportNetwork, from: VertiportId, to: VertiportId, lane_ft: f64) -> Arc<RoutePath> {
        let lane = network
            .lanes()
            .iter()
            .position(|&l| l == lane_ft)
            .expect("lane altitude from the network");
        let k = (from as usize * self.n + to as usize) * self.lanes + lane;
        self.routes[k]
            .get_or_insert_with(|| {
                let points = network
                    .path(from, to)
                    .into_iter()
                    .map(|v| network.vertiport(v).location)
                    .collect();
                Arc::new(RoutePath::new(points, lane_ft, network.projection()))
            })
            .clone()
    }
}

/// Nominal leg duration used for offline schedules: cruise along the route
/// followed by a vertical descent from the lane.
fn nominal_duration_s(plan: &FlightPlan, descent_rate_fpm: f64) -> f64 {
    plan.route.total_length_m() / crate::geo::knots_to_ms(plan.cruise_speed_kn) + plan.lane_ft / descent_rate_fpm * 60.0
}

/// Offline departure schedule over `[0, duration_s]` assuming every leg lands at
/// its destination after its nominal duration. Dispatch decisions are taken every
/// `dispatch_interval_s`, matching the environment's decision cadence.
pub fn generate_demand(
    network: Arc<VertiportNetwork>,
    fleet: u32,
    duration_s: f64,
    od: OdWeights,
    seed: u64,
    turnaround_s: f64,
    cruise_speed_kn: f64,
    descent_rate_fpm: f64,
    dispatch_interval_s: f64,
) -> Result<Vec<FlightPlan>> {
    if !(dispatch_interval_s > 0.0) {
        return Err(Error::config("dispatch interval must be positive"));
    }
    let mut dispatcher = Dispatcher::new(network, fleet, od, seed, turnaround_s, cruise_speed_kn, duration_s)?;
    let mut in_flight: Vec<(f64, u32)> = vec![];
    let mut plans = vec![];
    let mut k = 0u64;
    loop {
        let now = k as f64 * dispatch_interval_s;
        if now > duration_s {
            break;
        }
        in_flight.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let landed = in_flight.partition_point(|&(arr, _)| arr <= now);
        for (arrival, tail) in in_flight.drain(..landed) {
            let dest = dispatcher.tails[tail as usize].en_route_to.expect("airborne");
            dispatcher.settle(tail, LegEnd::Landed(dest), arrival);
        }
        for plan in dispatcher.dispatch(now) {
            in_flight.push((now + nominal_duration_s(&plan, descent_rate_fpm), plan.aircraft));
            plans.push(plan);
        }
        k += 1;
    }
    Ok(plans)
}

/// One line per plan: `aircraft_id origin dest depart_s lane_ft lat,lon ...`.
pub fn plans_to_text(network: &VertiportNetwork, plans: &[FlightPlan]) -> String {
    let mut out = String::from("# aircraft_id origin dest depart_s lane_ft waypoints...\n");
    for p in plans {
        let _ = write!(
            out,
            "{} {} {} {} {}",
            p.aircraft,
            network.vertiport(p.origin).name,
            network.vertiport(p.destination).name,
            p.departure_s,
            p.lane_ft
        );
        for wp in p.route.points() {
            let _ = write!(out, " {},{}", wp.lat, wp.lon);
        }
        out.push('\n');
    }
    out
}
