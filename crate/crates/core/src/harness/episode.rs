//! Running one environment instance under a policy.

use std::collections::BTreeMap;

use super::metrics::ScenarioMetrics;
use super::policy::{Policy, QPolicy, RandomPolicy, Unequipped};
use super::qlearn::QTable;
use crate::config::SimConfig;
use crate::env::{Action, AgentId, CmEnv, EnvStats, FlightOutcome, Observation, Transcript};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct EpisodeOutput {
    pub seed: u64,
    pub steps: u64,
    pub transcript: Transcript,
    /// Finished flights in departure order, cut at the first flight still
    /// airborne when the run ended so late short legs do not bias the tail.
    pub outcomes: Vec<FlightOutcome>,
    /// Finished flights dropped by that cut.
    pub truncated: usize,
    pub stats: EnvStats,
    /// Every agent's rewards in step order.
    pub rewards: BTreeMap<AgentId, Vec<f64>>,
}

impl EpisodeOutput {
    /// Per-agent `sum_t gamma^t r_t`.
    pub fn discounted_returns(&self, gamma: f64) -> BTreeMap<AgentId, f64> {
        self.rewards
            .iter()
            .map(|(&id, rs)| {
                let mut disc = 1.0;
                let mut ret = 0.0;
                for &r in rs {
                    ret += disc * r;
                    disc *= gamma;
                }
                (id, ret)
            })
            .collect()
    }

    pub fn metrics(&self, window: usize) -> ScenarioMetrics {
        ScenarioMetrics::from_records(&self.outcomes, window, self.stats.mean_wind_ms())
    }
}

/// Per-agent `sum_t gamma^t r_t` recomputed from a transcript.
pub fn discounted_return(transcript: &Transcript, gamma: f64) -> BTreeMap<AgentId, f64> {
    let mut acc: BTreeMap<AgentId, (f64, f64)> = BTreeMap::new();
    for r in &transcript.records {
        let (ret, disc) = acc.entry(r.agent_id).or_insert((0.0, 1.0));
        *ret += *disc * r.reward;
        *disc *= gamma;
    }
    acc.into_iter().map(|(id, (ret, _))| (id, ret)).collect()
}

/// The policy named by `harness.policy`.
pub fn policy_from_config(cfg: &SimConfig, seed: u64) -> Result<Box<dyn Policy>> {
    match cfg.harness.policy.as_str() {
        "unequipped" => Ok(Box::new(Unequipped)),
        "random" => Ok(Box::new(RandomPolicy::new(seed))),
        "tabular_q" => {
            let path = cfg
                .harness
                .q_table
                .as_ref()
                .ok_or_else(|| Error::config("harness.policy = \"tabular_q\" requires harness.q_table"))?;
            let (table, disc): (QTable, _) = QTable::load(&cfg.base_dir.join(path))?;
            Ok(Box::new(QPolicy::new(table, disc, 0.0, seed)?))
        }
        other => Err(Error::config(format!("unknown policy `{other}`"))),
    }
}

/// Runs `cfg.harness.steps` decision steps (or until the scenario goes idle).
pub fn run_episode(cfg: &SimConfig, policy: &mut dyn Policy, seed: u64) -> Result<EpisodeOutput> {
    let mut cfg = cfg.clone();
    let passive = policy.is_passive();
    // observations never reach the transcript, so skipping them changes nothing
    cfg.env.observe &= !passive;
    let mut env = CmEnv::new(cfg.clone())?;
    let mut obs: BTreeMap<AgentId, Observation> = env.reset(seed)?;
    let mut rewards: BTreeMap<AgentId, Vec<f64>> = BTreeMap::new();
    let mut outcomes = vec![];
    let mut actions = BTreeMap::new();
    let mut steps = 0;

    while steps < cfg.harness.steps && !env.is_idle() {
        actions.clear();
        if !passive {
            for (&id, o) in &obs {
                let a = policy.act(id, o, &env);
                if a != Action::NoAlert {
                    actions.insert(id, a);
                }
            }
        }
        let result = env.step(&actions)?;
        steps += 1;
        for (id, s) in result.agents {
            rewards.entry(id).or_default().push(s.reward);
            if passive {
                continue;
            }
            if s.done {
                obs.remove(&id);
            } else {
                obs.insert(id, s.observation);
            }
        }
        if !passive {
            obs.extend(result.spawned);
        }
        outcomes.extend(env.drain_outcomes());
    }

    outcomes.sort_by_key(|o| o.agent_id);
    let first_live = env.agent_ids().first().copied().unwrap_or(AgentId::MAX);
    let keep = outcomes.partition_point(|o| o.agent_id < first_live);
    let truncated = outcomes.len() - keep;
    outcomes.truncate(keep);
    Ok(EpisodeOutput {
        seed,
        steps,
        stats: env.stats(),
        transcript: env.take_transcript(),
        outcomes,
        truncated,
        rewards,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SimConfig {
        let mut cfg = SimConfig::default();
        cfg.scenario.fleet_size = 10;
        cfg.scenario.synthetic.ring.as_mut().unwrap().count = 6;
        cfg.scenario.synthetic.ring.as_mut().unwrap().radius_m = 5_000.0;
        cfg.harness.steps = 60;
        cfg
    }

    #[test]
    fn unequipped_logs_only_no_alert() {
        let out = run_episode(&small(), &mut Unequipped, 1).unwrap();
        assert!(!out.transcript.records.is_empty());
        assert!(out.transcript.records.iter().all(|r| r.action == Action::NoAlert));
    }

    #[test]
    fn gamma_examples() {
        let mut out = run_episode(&small(), &mut Unequipped, 1).unwrap();
        out.rewards = BTreeMap::from([(0, vec![1.0, 1.0, 1.0]), (1, vec![-0.5, 2.0])]);
        let r = out.discounted_returns(0.99);
        assert!((r[&0] - 2.9701).abs() < 1e-12);
        let r0 = out.discounted_returns(0.0);
        assert_eq!(r0[&1], -0.5);
    }
}
