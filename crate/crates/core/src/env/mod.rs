//! The multi-agent contingency-management environment.
//!
//! Every flight leg is one agent. Agents are stepped in id order once per
//! decision interval; inside the interval the point-mass model is integrated
//! at the kinematic step. A flight that loses navigation leaves the agent set
//! but the vehicle is still flown to the end of its leg outside the
//! environment's control, so pad bookkeeping and the rest of the traffic do
//! not depend on whether the event happened.

pub mod action;
pub mod observation;
pub mod reward;
pub mod transcript;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use action::{apply_action, Action};
pub use observation::{Observation, ObservationLayout};
pub use reward::{compute_reward, RewardBreakdown, RewardInput, RewardParams};
pub use transcript::{Transcript, TranscriptRecord, TRANSCRIPT_HEADER};

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::geo::LocalXY;
use crate::hazards::{
    energy_capacity, nav_loss_event, sample_initial_cycles, wind_at, ConsumptionModel, LinearConsumption,
    NavLossModel, WindField, WindVector,
};
use crate::kinematics::{
    advance_route, descend, step_kinematics, AircraftState, KinematicsReport, NavMode, RouteCommand,
};
use crate::rng::{stream, SimRng, Stream};
use crate::scenario::{Dispatcher, FlightPlan, LegEnd, OdWeights, VertiportId, VertiportNetwork};
use observation::ObservationContext;

pub type AgentId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TerminalKind {
    EnergyDepleted,
    NavLost,
    Touchdown,
}

impl TerminalKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminalKind::EnergyDepleted => "ENERGY_DEPLETED",
            TerminalKind::NavLost => "NAV_LOST",
            TerminalKind::Touchdown => "TOUCHDOWN",
        }
    }
}

impl fmt::Display for TerminalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TerminalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [TerminalKind::EnergyDepleted, TerminalKind::NavLost, TerminalKind::Touchdown]
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::range(format!("unknown terminal kind `{s}`")))
    }
}

/// Terminal classification with precedence energy > navigation > touchdown.
pub fn check_terminal(s: &AircraftState, nav_fired: bool) -> Option<TerminalKind> {
    if s.energy_kwh <= 0.0 {
        Some(TerminalKind::EnergyDepleted)
    } else if nav_fired {
        Some(TerminalKind::NavLost)
    } else if s.is_landed() {
        Some(TerminalKind::Touchdown)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StepEvent {
    CommandClamped,
    GroundSpeedClamped,
    /// Wind was sampled outside the grid and clamped to its edge.
    WindClamped,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StepInfo {
    pub terminal: Option<TerminalKind>,
    pub landed_vertiport: Option<VertiportId>,
    pub events: Vec<StepEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentStep {
    pub observation: Observation,
    pub reward: f64,
    pub breakdown: RewardBreakdown,
    pub done: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StepResult {
    /// One entry per agent that was live when the step began.
    pub agents: BTreeMap<AgentId, AgentStep>,
    /// Agents that departed at the end of this step.
    pub spawned: BTreeMap<AgentId, Observation>,
}

/// Summary of a finished agent, emitted once at its terminal step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightOutcome {
    pub agent_id: AgentId,
    pub tail: u32,
    pub leg: u32,
    pub origin: VertiportId,
    pub destination: VertiportId,
    pub depart_s: f64,
    pub end_s: f64,
    pub terminal: TerminalKind,
    pub landed_vertiport: Option<VertiportId>,
    pub reached_destination: bool,
    pub total_reward: f64,
    pub initial_energy_kwh: f64,
    pub final_energy_kwh: f64,
    pub charge_cycles: u32,
    pub max_corridor_deviation_m: f64,
    pub steps: u32,
    pub follow_route_steps: u32,
    pub action_counts: [u32; Action::COUNT],
}

impl FlightOutcome {
    pub fn follow_route_fraction(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.follow_route_steps as f64 / self.steps as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnvStats {
    pub departures: u64,
    pub arrivals: u64,
    pub completed: u64,
    pub agent_steps: u64,
    pub nav_events: u64,
    pub wind_speed_sum_ms: f64,
}

impl EnvStats {
    pub fn mean_wind_ms(&self) -> f64 {
        if self.agent_steps == 0 {
            0.0
        } else {
            self.wind_speed_sum_ms / self.agent_steps as f64
        }
    }
}

#[derive(Debug, Clone)]
struct Flight {
    state: AircraftState,
    leg: u32,
    origin: VertiportId,
    depart_s: f64,
    initial_energy_kwh: f64,
    consumption_rng: SimRng,
    nav_rng: SimRng,
    /// No longer an agent; flown to the end of its leg for bookkeeping only.
    ghost: bool,
    total_reward: f64,
    max_deviation_m: f64,
    steps: u32,
    follow_steps: u32,
    actions: [u32; Action::COUNT],
}

#[derive(Debug, Clone)]
struct World {
    seed: u64,
    t: f64,
    steps: u64,
    dispatcher: Dispatcher,
    flights: BTreeMap<AgentId, Flight>,
    next_id: AgentId,
    transcript: Transcript,
    outcomes: Vec<FlightOutcome>,
    stats: EnvStats,
}

struct Motion {
    touchdown_s: Option<f64>,
    report: KinematicsReport,
    wind_clamped: bool,
    wind: WindVector,
}

#[derive(Debug, Clone)]
pub struct CmEnv {
    cfg: Arc<SimConfig>,
    network: Arc<VertiportNetwork>,
    consumption: LinearConsumption,
    nav: NavLossModel,
    wind: WindField,
    od: OdWeights,
    layout: ObservationLayout,
    world: Option<World>,
}

impl CmEnv {
    /// Validates the configuration and builds the static scenario. No state
    /// exists until [`CmEnv::reset`].
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let network = Arc::new(VertiportNetwork::build(&cfg.scenario)?);
        let od = OdWeights::from_config(cfg.scenario.od_weights.as_ref(), network.len())?;
        let capacity: u64 = network.vertiports().iter().map(|v| v.total_pads as u64).sum();
        if cfg.scenario.fleet_size as u64 > capacity {
            return Err(Error::config(format!(
                "fleet of {} exceeds total pad capacity {capacity}",
                cfg.scenario.fleet_size
            )));
        }
        Ok(CmEnv {
            consumption: LinearConsumption::new(cfg.energy)?,
            nav: cfg.nav.build(&cfg.base_dir)?,
            wind: cfg.wind.build(&cfg.base_dir)?,
            layout: ObservationLayout {
                waypoints: cfg.env.waypoint_window,
                vertiports: cfg.env.nearest_vertiports,
                intruders: cfg.env.intruders,
            },
            od,
            network,
            cfg: Arc::new(cfg),
            world: None,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn network(&self) -> &VertiportNetwork {
        &self.network
    }

    pub fn observation_len(&self) -> usize {
        if self.cfg.env.observe {
            self.layout.len()
        } else {
            0
        }
    }

    pub fn layout(&self) -> ObservationLayout {
        self.layout
    }

    pub fn is_reset(&self) -> bool {
        self.world.is_some()
    }

    pub fn reset(&mut self, seed: u64) -> Result<BTreeMap<AgentId, Observation>> {
        let dispatcher = Dispatcher::new(
            Arc::clone(&self.network),
            self.cfg.scenario.fleet_size,
            self.od.clone(),
            seed,
            self.cfg.scenario.turnaround_s,
            self.cfg.scenario.cruise_speed_kn,
            self.cfg.scenario.duration_s,
        )?;
        let mut world = World {
            seed,
            t: 0.0,
            steps: 0,
            dispatcher,
            flights: BTreeMap::new(),
            next_id: 0,
            transcript: Transcript::default(),
            outcomes: vec![],
            stats: EnvStats::default(),
        };
        let spawned = self.dispatch(&mut world);
        let obs = self.observe_many(&world, &spawned, &BTreeMap::new());
        self.world = Some(world);
        Ok(obs)
    }

    /// Simulation time in seconds.
    pub fn time(&self) -> f64 {
        self.world.as_ref().map_or(0.0, |w| w.t)
    }

    pub fn step_count(&self) -> u64 {
        self.world.as_ref().map_or(0, |w| w.steps)
    }

    /// Live agent ids in ascending order.
    pub fn agent_ids(&self) -> Vec<AgentId> {
        self.world.as_ref().map_or_else(Vec::new, |w| {
            w.flights.iter().filter(|(_, f)| !f.ghost).map(|(id, _)| *id).collect()
        })
    }

    pub fn agent_state(&self, id: AgentId) -> Option<&AircraftState> {
        self.world
            .as_ref()?
            .flights
            .get(&id)
            .filter(|f| !f.ghost)
            .map(|f| &f.state)
    }

    pub fn stats(&self) -> EnvStats {
        self.world.as_ref().map_or_else(EnvStats::default, |w| w.stats)
    }

    pub fn pad_occupancy(&self) -> Option<(u32, usize)> {
        let w = self.world.as_ref()?;
        let occupied = w.dispatcher.pads().iter().map(|p| p.occupied).sum();
        Some((occupied, w.dispatcher.airborne()))
    }

    /// True once nothing is airborne and no further departure can happen.
    pub fn is_idle(&self) -> bool {
        self.world
            .as_ref()
            .is_none_or(|w| w.flights.is_empty() && !w.dispatcher.has_future_departures(w.t))
    }

    pub fn transcript(&self) -> Option<&Transcript> {
        self.world.as_ref().map(|w| &w.transcript)
    }

    pub fn take_transcript(&mut self) -> Transcript {
        self.world
            .as_mut()
            .map(|w| std::mem::take(&mut w.transcript))
            .unwrap_or_default()
    }

    /// Outcomes of agents that finished since the last call, in completion order.
    pub fn drain_outcomes(&mut self) -> Vec<FlightOutcome> {
        self.world
            .as_mut()
            .map(|w| std::mem::take(&mut w.outcomes))
            .unwrap_or_default()
    }

    /// Advances one decision interval. Live agents without an entry in
    /// `actions` take `NO_ALERT`.
    pub fn step(&mut self, actions: &BTreeMap<AgentId, Action>) -> Result<StepResult> {
        let mut world = self
            .world
            .take()
            .ok_or(Error::Lifecycle("step called before reset"))?;
        for &id in actions.keys() {
            match world.flights.get(&id) {
                Some(f) if !f.ghost => {}
                _ if id < world.next_id => log::warn!("ignoring action for finished agent {id}"),
                _ => {
                    self.world = Some(world);
                    return Err(Error::UnknownAgent(id));
                }
            }
        }
        let result = self.advance_world(&mut world, actions);
        self.world = Some(world);
        Ok(result)
    }

    fn advance_world(&self, w: &mut World, actions: &BTreeMap<AgentId, Action>) -> StepResult {
        let env = &self.cfg.env;
        let proj = self.network.projection();
        let t0 = w.t;
        let t1 = t0 + env.decision_interval_s;
        let mut stepped: BTreeMap<AgentId, (RewardBreakdown, StepInfo)> = BTreeMap::new();
        let mut finished: BTreeMap<AgentId, AircraftState> = BTreeMap::new();
        let mut settle: Vec<(AgentId, LegEnd, f64)> = vec![];

        for (&id, f) in w.flights.iter_mut() {
            let agent = !f.ghost;
            let a = if agent {
                actions.get(&id).copied().unwrap_or(Action::NoAlert)
            } else {
                Action::NoAlert
            };
            if agent {
                apply_action(&mut f.state, a, env.heading_step_deg, proj);
            }
            let motion = self.fly(&mut f.state, t0);
            let used = self
                .consumption
                .consume(f.state.charge_cycles, 1, &mut f.consumption_rng);
            f.state.energy_kwh = (f.state.energy_kwh - used).max(0.0);
            let nav_fired = agent && nav_loss_event(&self.nav, f.state.position, &mut f.nav_rng);

            let landed_at = motion
                .touchdown_s
                .map(|_| self.network.vertiport_near(f.state.local(proj), env.landing_radius_m));
            let physical_end = match motion.touchdown_s {
                Some(ts) => Some((landed_at.flatten().map_or(LegEnd::Recovered, LegEnd::Landed), ts)),
                None if f.state.energy_kwh <= 0.0 => Some((LegEnd::Recovered, t1)),
                None => None,
            };
            if let Some((end, ts)) = physical_end {
                settle.push((id, end, ts));
            }
            if !agent {
                continue;
            }

            let terminal = check_terminal(&f.state, nav_fired);
            let input = RewardInput {
                position: f.state.position,
                route_distance_remaining_m: f.state.route_distance_remaining_m,
                destination: f.state.destination,
            };
            let r = compute_reward(&input, a, terminal, &self.cfg.reward, self.network.vertiports());

            let dev = f.state.route.cross_track_m(f.state.local(proj));
            f.max_deviation_m = f.max_deviation_m.max(dev);
            f.steps += 1;
            f.follow_steps += u32::from(f.state.nav_mode == NavMode::FollowRoute);
            f.actions[a.index()] += 1;
            f.total_reward += r.total;
            w.stats.agent_steps += 1;
            w.stats.wind_speed_sum_ms += motion.wind.magnitude();

            let mut events = vec![];
            if motion.report.command_clamped {
                events.push(StepEvent::CommandClamped);
            }
            if motion.report.ground_speed_clamped {
                events.push(StepEvent::GroundSpeedClamped);
            }
            if motion.wind_clamped {
                events.push(StepEvent::WindClamped);
            }
            let landed_vertiport = match terminal {
                Some(TerminalKind::Touchdown) => landed_at.flatten(),
                _ => None,
            };
            if env.record_transcript {
                let s = &f.state;
                w.transcript.records.push(TranscriptRecord {
                    t: t1,
                    agent_id: id,
                    action: a,
                    reward: r.total,
                    r_s: r.r_s,
                    r_h: r.r_h,
                    r_a: r.r_a,
                    omega: r.omega,
                    lat: s.position.lat,
                    lon: s.position.lon,
                    alt_ft: s.altitude_ft,
                    heading: s.heading_deg,
                    speed_kn: s.ground_speed_kn,
                    energy_kwh: s.energy_kwh,
                    nav_mode: s.nav_mode,
                    terminal,
                });
            }
            stepped.insert(
                id,
                (
                    r,
                    StepInfo {
                        terminal,
                        landed_vertiport,
                        events,
                    },
                ),
            );

            if let Some(kind) = terminal {
                let reached = kind == TerminalKind::Touchdown && landed_vertiport == Some(f.state.destination);
                w.stats.completed += 1;
                w.stats.arrivals += u64::from(reached);
                w.stats.nav_events += u64::from(kind == TerminalKind::NavLost);
                w.outcomes.push(FlightOutcome {
                    agent_id: id,
                    tail: f.state.tail,
                    leg: f.leg,
                    origin: f.origin,
                    destination: f.state.destination,
                    depart_s: f.depart_s,
                    end_s: motion.touchdown_s.unwrap_or(t1),
                    terminal: kind,
                    landed_vertiport,
                    reached_destination: reached,
                    total_reward: f.total_reward,
                    initial_energy_kwh: f.initial_energy_kwh,
                    final_energy_kwh: f.state.energy_kwh,
                    charge_cycles: f.state.charge_cycles,
                    max_corridor_deviation_m: f.max_deviation_m,
                    steps: f.steps,
                    follow_route_steps: f.follow_steps,
                    action_counts: f.actions,
                });
                finished.insert(id, f.state.clone());
                f.ghost = true;
                f.state.nav_lost |= kind == TerminalKind::NavLost;
            }
        }

        w.t = t1;
        w.steps += 1;
        for (id, end, ts) in settle {
            let f = w.flights.remove(&id).expect("settled flight exists");
            w.dispatcher.settle(f.state.tail, end, ts);
        }
        let spawned_ids = self.dispatch(w);

        let mut result = StepResult::default();
        let obs = self.observe_many(w, &stepped.keys().copied().collect::<Vec<_>>(), &finished);
        for (id, (breakdown, info)) in stepped {
            result.agents.insert(
                id,
                AgentStep {
                    observation: obs.get(&id).cloned().unwrap_or_else(|| Observation(vec![])),
                    reward: breakdown.total,
                    breakdown,
                    done: info.terminal.is_some(),
                    info,
                },
            );
        }
        result.spawned = self.observe_many(w, &spawned_ids, &BTreeMap::new());
        result
    }

    /// Integrates one decision interval starting at `t0`. Stops at touchdown.
    fn fly(&self, s: &mut AircraftState, t0: f64) -> Motion {
        let env = &self.cfg.env;
        let kin = &self.cfg.kinematics;
        let proj = self.network.projection();
        let dt = env.kinematic_dt_s;
        let mut m = Motion {
            touchdown_s: None,
            report: KinematicsReport::default(),
            wind_clamped: false,
            wind: WindVector::default(),
        };
        if s.is_landed() {
            m.touchdown_s = Some(t0);
            return m;
        }
        for k in 0..env.substeps() {
            let (wind, clamped) = wind_at(&self.wind, s.position);
            m.wind_clamped |= clamped;
            m.wind = wind;
            let report = match s.nav_mode {
                NavMode::FollowRoute => match advance_route(s, kin, proj) {
                    RouteCommand::Fly { heading_deg, speed_kn } => {
                        step_kinematics(s, heading_deg, speed_kn, wind, dt, kin, proj)
                    }
                    RouteCommand::Exhausted => {
                        s.nav_mode = NavMode::Descending;
                        descend(s, wind, dt, kin, proj)
                    }
                },
                NavMode::HoldHeading => step_kinematics(s, s.held_heading_deg, s.cruise_speed_kn, wind, dt, kin, proj),
                NavMode::Descending => descend(s, wind, dt, kin, proj),
            };
            m.report.merge(report);
            if s.is_landed() {
                m.touchdown_s = Some(t0 + (k + 1) as f64 * dt);
                break;
            }
        }
        m
    }

    fn dispatch(&self, w: &mut World) -> Vec<AgentId> {
        let plans = w.dispatcher.dispatch(w.t);
        plans.into_iter().map(|p| self.spawn(w, p)).collect()
    }

    fn spawn(&self, w: &mut World, plan: FlightPlan) -> AgentId {
        let id = w.next_id;
        w.next_id += 1;
        w.stats.departures += 1;
        let keys = [plan.aircraft as u64, plan.leg as u64];
        let cycles = sample_initial_cycles(&mut stream(w.seed, Stream::ChargeCycles, &keys), &self.cfg.energy);
        let energy = energy_capacity(cycles as f64, &self.cfg.energy).expect("sampled cycles lie in range");
        let local = plan.route.local();
        let heading = if local.len() > 1 { local[0].bearing_to(&local[1]) } else { 0.0 };
        let state = AircraftState {
            id,
            tail: plan.aircraft,
            position: plan.route.points()[0],
            altitude_ft: plan.lane_ft,
            heading_deg: heading,
            airspeed_kn: plan.cruise_speed_kn,
            ground_speed_kn: plan.cruise_speed_kn,
            accel_limit_g: self.cfg.kinematics.accel_limit_g,
            cruise_speed_kn: plan.cruise_speed_kn,
            energy_kwh: energy,
            charge_cycles: cycles,
            route_distance_remaining_m: plan.route.total_length_m(),
            route: plan.route,
            active_waypoint: 1,
            nav_mode: NavMode::FollowRoute,
            held_heading_deg: heading,
            nav_lost: false,
            destination: plan.destination,
        };
        w.flights.insert(
            id,
            Flight {
                state,
                leg: plan.leg,
                origin: plan.origin,
                depart_s: plan.departure_s,
                initial_energy_kwh: energy,
                consumption_rng: stream(w.seed, Stream::Consumption, &keys),
                nav_rng: stream(w.seed, Stream::NavLoss, &keys),
                ghost: false,
                total_reward: 0.0,
                max_deviation_m: 0.0,
                steps: 0,
                follow_steps: 0,
                actions: [0; Action::COUNT],
            },
        );
        id
    }

    /// Observations for `ids`, taken from `finished` when present there and
    /// from the live flights otherwise.
    fn observe_many(
        &self,
        w: &World,
        ids: &[AgentId],
        finished: &BTreeMap<AgentId, AircraftState>,
    ) -> BTreeMap<AgentId, Observation> {
        if !self.cfg.env.observe {
            return ids.iter().map(|&id| (id, Observation(vec![]))).collect();
        }
        let proj = self.network.projection();
        let fleet: Vec<(LocalXY, &AircraftState)> = w
            .flights
            .values()
            .filter(|f| !finished.contains_key(&f.state.id))
            .map(|f| (f.state.local(proj), &f.state))
            .collect();
        let ctx = ObservationContext {
            layout: self.layout,
            network: &self.network,
            nav: &self.nav,
            distance_scale_m: self.cfg.env.distance_scale_m,
            wind_scale_ms: self.cfg.env.wind_scale_ms,
        };
        ids.iter()
            .filter_map(|id| {
                let s = finished.get(id).or_else(|| w.flights.get(id).map(|f| &f.state))?;
                let (wind, _) = wind_at(&self.wind, s.position);
                Some((*id, ctx.build(s, wind, &fleet)))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::test_support::{aircraft, projection};

    #[test]
    fn terminal_precedence() {
        let proj = projection();
        let mut s = aircraft(&proj, vec![proj.origin()]);
        s.altitude_ft = 2000.0;
        s.energy_kwh = 0.0;
        assert_eq!(check_terminal(&s, false), Some(TerminalKind::EnergyDepleted));
        s.altitude_ft = 0.0;
        assert_eq!(check_terminal(&s, true), Some(TerminalKind::EnergyDepleted));
        s.energy_kwh = 10.0;
        assert_eq!(check_terminal(&s, true), Some(TerminalKind::NavLost));
        assert_eq!(check_terminal(&s, false), Some(TerminalKind::Touchdown));
        s.altitude_ft = 10.0;
        assert_eq!(check_terminal(&s, false), None);
    }

    #[test]
    fn terminal_names_round_trip() {
        for k in [TerminalKind::EnergyDepleted, TerminalKind::NavLost, TerminalKind::Touchdown] {
            assert_eq!(k.as_str().parse::<TerminalKind>().unwrap(), k);
        }
        assert!("LANDED".parse::<TerminalKind>().is_err());
    }
}
