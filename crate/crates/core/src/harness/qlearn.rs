//! Tabular Q-learning over a coarse discretization of the aircraft state.
//! A smoke-test learner for the environment, not a serious agent.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::policy::QPolicy;
use crate::config::{QSettings, SimConfig};
use crate::env::{Action, AgentId, CmEnv};
use crate::error::{Error, Result};
use crate::kinematics::{AircraftState, NavMode};

/// Largest state-action table accepted.
pub const MAX_Q_CELLS: u64 = 10_000_000;

const NAV_MODES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discretizer {
    pub energy_bins: usize,
    pub energy_max_kwh: f64,
    pub distance_bins: usize,
    pub distance_max_m: f64,
}

impl Discretizer {
    pub fn new(energy_bins: usize, energy_max_kwh: f64, distance_bins: usize, distance_max_m: f64) -> Result<Self> {
        if energy_bins == 0 || distance_bins == 0 {
            return Err(Error::config("discretization needs at least one bin per axis"));
        }
        if !(energy_max_kwh > 0.0 && distance_max_m > 0.0) {
            return Err(Error::config("discretization ranges must be positive"));
        }
        let cells = (energy_bins as u64)
            .saturating_mul(distance_bins as u64)
            .saturating_mul((NAV_MODES * Action::COUNT) as u64);
        if cells > MAX_Q_CELLS {
            return Err(Error::config(format!(
                "discretization has {cells} state-action cells, limit is {MAX_Q_CELLS}"
            )));
        }
        Ok(Discretizer {
            energy_bins,
            energy_max_kwh,
            distance_bins,
            distance_max_m,
        })
    }

    pub fn from_settings(q: &QSettings, energy_max_kwh: f64) -> Result<Self> {
        Self::new(q.energy_bins, energy_max_kwh, q.distance_bins, q.distance_max_m)
    }

    pub fn states(&self) -> usize {
        self.energy_bins * self.distance_bins * NAV_MODES
    }

    fn bin(v: f64, max: f64, bins: usize) -> usize {
        ((v / max * bins as f64).floor().max(0.0) as usize).min(bins - 1)
    }

    pub fn state(&self, s: &AircraftState) -> usize {
        let e = Self::bin(s.energy_kwh, self.energy_max_kwh, self.energy_bins);
        let d = Self::bin(s.route_distance_remaining_m, self.distance_max_m, self.distance_bins);
        let m = match s.nav_mode {
            NavMode::FollowRoute => 0,
            NavMode::HoldHeading => 1,
            NavMode::Descending => 2,
        };
        (e * self.distance_bins + d) * NAV_MODES + m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    states: usize,
    q: Vec<f64>,
}

impl QTable {
    pub fn new(states: usize, init: f64) -> Self {
        QTable {
            states,
            q: vec![init; states * Action::COUNT],
        }
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn get(&self, s: usize, a: Action) -> f64 {
        self.q[s * Action::COUNT + a.index()]
    }

    pub fn values(&self) -> &[f64] {
        &self.q
    }

    pub fn max(&self, s: usize) -> f64 {
        self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Highest-valued action; ties go to the lowest index.
    pub fn best_action(&self, s: usize) -> Action {
        let row = self.row(s);
        let mut best = 0;
        for (i, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = i;
            }
        }
        Action::ALL[best]
    }

    fn row(&self, s: usize) -> &[f64] {
        &self.q[s * Action::COUNT..(s + 1) * Action::COUNT]
    }

    /// `Q(s,a) += eta * (r + gamma * max Q(s',.) - Q(s,a))`; `next = None`
    /// marks a terminal transition. Returns the TD error.
    pub fn update(&mut self, s: usize, a: Action, r: f64, next: Option<usize>, eta: f64, gamma: f64) -> f64 {
        let target = r + next.map_or(0.0, |n| gamma * self.max(n));
        let cell = &mut self.q[s * Action::COUNT + a.index()];
        let td = target - *cell;
        *cell += eta * td;
        td
    }

    pub fn save(&self, path: &Path, disc: &Discretizer) -> Result<()> {
        let doc = SavedTable {
            discretizer: *disc,
            table: self.clone(),
        };
        let text = serde_json::to_string(&doc).map_err(|e| Error::config(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<(QTable, Discretizer)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: SavedTable = serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        if doc.table.q.len() != doc.table.states * Action::COUNT || doc.table.states != doc.discretizer.states() {
            return Err(Error::config(format!("{}: inconsistent Q table", path.display())));
        }
        Ok((doc.table, doc.discretizer))
    }
}

#[derive(Serialize, Deserialize)]
struct SavedTable {
    discretizer: Discretizer,
    table: QTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub episode: u32,
    /// Environment steps taken so far.
    pub worker_steps: u64,
    /// Agent-steps (one per live agent per environment step) so far.
    pub global_steps: u64,
    /// Mean total reward of flights completed during the episode.
    pub mean_return: f64,
    pub completed: u64,
}

/// Trains from scratch. Episode `e` is reset with seed `cfg.seed + e`.
pub fn train_tabular_q(cfg: &SimConfig, episodes: u32, hp: &QSettings) -> Result<(QPolicy, Vec<CurvePoint>)> {
    let disc = Discretizer::from_settings(hp, cfg.energy.e_max.max(cfg.energy.e_min))?;
    let mut policy = QPolicy::new(QTable::new(disc.states(), 0.0), disc, hp.epsilon, cfg.seed)?;
    let mut env_cfg = cfg.clone();
    env_cfg.env.observe = false;
    env_cfg.env.record_transcript = false;
    let mut env = CmEnv::new(env_cfg)?;
    let mut curve = Vec::with_capacity(episodes as usize);
    let (mut worker_steps, mut global_steps) = (0u64, 0u64);

    for e in 0..episodes {
        env.reset(cfg.seed.wrapping_add(e as u64))?;
        let mut returns = vec![];
        for _ in 0..hp.steps {
            if env.is_idle() {
                break;
            }
            let mut chosen: BTreeMap<AgentId, (usize, Action)> = BTreeMap::new();
            for id in env.agent_ids() {
                let s = disc.state(env.agent_state(id).expect("live agent"));
                chosen.insert(id, (s, policy.choose(s)));
            }
            let actions = chosen.iter().map(|(&id, &(_, a))| (id, a)).collect();
            let result = env.step(&actions)?;
            worker_steps += 1;
            global_steps += result.agents.len() as u64;
            for (id, step) in &result.agents {
                let (s, a) = chosen[id];
                let next = if step.done {
                    None
                } else {
                    env.agent_state(*id).map(|st| disc.state(st))
                };
                policy.table.update(s, a, step.reward, next, hp.eta, hp.gamma);
            }
            returns.extend(env.drain_outcomes().into_iter().map(|o| o.total_reward));
        }
        curve.push(CurvePoint {
            episode: e,
            worker_steps,
            global_steps,
            mean_return: if returns.is_empty() {
                0.0
            } else {
                returns.iter().sum::<f64>() / returns.len() as f64
            },
            completed: returns.len() as u64,
        });
    }
    policy.epsilon = 0.0;
    Ok((policy, curve))
}
