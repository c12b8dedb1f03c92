//! Built-in baseline policies.

use rand::Rng;

use super::qlearn::{Discretizer, QTable};
use crate::env::{Action, AgentId, CmEnv, Observation};
use crate::error::{Error, Result};
use crate::rng::{stream, SimRng, Stream};

pub trait Policy {
    fn act(&mut self, id: AgentId, obs: &Observation, env: &CmEnv) -> Action;

    /// A passive policy always answers `NO_ALERT`; the runner can then skip
    /// building observations entirely.
    fn is_passive(&self) -> bool {
        false
    }
}

/// No contingency management at all.
#[derive(Debug, Clone, Copy, Default)]
pub struct Unequipped;

impl Policy for Unequipped {
    fn act(&mut self, _: AgentId, _: &Observation, _: &CmEnv) -> Action {
        Action::NoAlert
    }

    fn is_passive(&self) -> bool {
        true
    }
}

/// Uniform over the six actions, from its own seeded stream.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: SimRng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        RandomPolicy {
            rng: stream(seed, Stream::Policy, &[]),
        }
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, _: AgentId, _: &Observation, _: &CmEnv) -> Action {
        Action::ALL[self.rng.random_range(0..Action::COUNT)]
    }
}

/// Greedy (or epsilon-greedy) over a learned Q table.
#[derive(Debug, Clone)]
pub struct QPolicy {
    pub table: QTable,
    pub disc: Discretizer,
    pub epsilon: f64,
    rng: SimRng,
}

impl QPolicy {
    pub fn new(table: QTable, disc: Discretizer, epsilon: f64, seed: u64) -> Result<Self> {
        if table.states() != disc.states() {
            return Err(Error::config(format!(
                "Q table has {} states but the discretization has {}",
                table.states(),
                disc.states()
            )));
        }
        Ok(QPolicy {
            table,
            disc,
            epsilon,
            rng: stream(seed, Stream::Exploration, &[]),
        })
    }

    pub fn choose(&mut self, state: usize) -> Action {
        if self.epsilon > 0.0 && self.rng.random::<f64>() < self.epsilon {
            Action::ALL[self.rng.random_range(0..Action::COUNT)]
        } else {
            self.table.best_action(state)
        }
    }
}

impl Policy for QPolicy {
    fn act(&mut self, id: AgentId, _: &Observation, env: &CmEnv) -> Action {
        match env.agent_state(id) {
            Some(s) => {
                let state = self.disc.state(s);
                self.choose(state)
            }
            None => Action::NoAlert,
        }
    }
}
