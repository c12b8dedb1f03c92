//! Per-flight metrics and their aggregates.

use serde::{Deserialize, Serialize};

use crate::env::{Action, FlightOutcome, TerminalKind};

/// One completed flight.
pub type MetricsRecord = FlightOutcome;

/// Mean of `flags` over each trailing window of `window` entries. Entry `k`
/// of the result covers flags `k..k + window`; the series is empty when there
/// are fewer than `window` flags.
pub fn rolling_mean(flags: &[bool], window: usize) -> Vec<f64> {
    assert!(window >= 1, "window must be at least 1");
    if flags.len() < window {
        return vec![];
    }
    let mut out = Vec::with_capacity(flags.len() - window + 1);
    let mut hits: usize = flags[..window].iter().filter(|&&f| f).count();
    out.push(hits as f64 / window as f64);
    for k in window..flags.len() {
        hits += usize::from(flags[k]);
        hits -= usize::from(flags[k - window]);
        out.push(hits as f64 / window as f64);
    }
    out
}

/// Rolling fraction of flights that reached their destination, in record order.
pub fn rolling_dest_fraction(records: &[MetricsRecord], window: usize) -> Vec<f64> {
    let flags: Vec<bool> = records.iter().map(|r| r.reached_destination).collect();
    rolling_mean(&flags, window)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub reached: u64,
    pub landed_elsewhere: u64,
    pub energy_depleted: u64,
    pub nav_lost: u64,
}

impl OutcomeCounts {
    pub fn tally(records: &[MetricsRecord]) -> Self {
        let mut c = OutcomeCounts::default();
        for r in records {
            match r.terminal {
                TerminalKind::Touchdown if r.reached_destination => c.reached += 1,
                TerminalKind::Touchdown => c.landed_elsewhere += 1,
                TerminalKind::EnergyDepleted => c.energy_depleted += 1,
                TerminalKind::NavLost => c.nav_lost += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.reached + self.landed_elsewhere + self.energy_depleted + self.nav_lost
    }

    /// Associative, commutative merge used to combine workers.
    pub fn merge(self, o: OutcomeCounts) -> OutcomeCounts {
        OutcomeCounts {
            reached: self.reached + o.reached,
            landed_elsewhere: self.landed_elsewhere + o.landed_elsewhere,
            energy_depleted: self.energy_depleted + o.energy_depleted,
            nav_lost: self.nav_lost + o.nav_lost,
        }
    }
}

/// Aggregate view over one run's completed flights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMetrics {
    pub counts: OutcomeCounts,
    pub rolling: Vec<f64>,
    pub max_p_dest: f64,
    pub mean_p_dest: f64,
    pub mean_reward: f64,
    pub mean_final_energy_kwh: f64,
    pub mean_max_deviation_m: f64,
    pub mean_follow_route_fraction: f64,
    pub action_counts: [u64; Action::COUNT],
    pub mean_wind_ms: f64,
}

impl ScenarioMetrics {
    /// `max_p_dest` and `mean_p_dest` are the max and mean of the rolling
    /// series; with fewer flights than `window` they fall back to the plain
    /// fraction over all flights.
    pub fn from_records(records: &[MetricsRecord], window: usize, mean_wind_ms: f64) -> Self {
        let n = records.len().max(1) as f64;
        let rolling = rolling_dest_fraction(records, window);
        let overall = records.iter().filter(|r| r.reached_destination).count() as f64 / n;
        let (max_p_dest, mean_p_dest) = if rolling.is_empty() {
            (overall, overall)
        } else {
            (
                rolling.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                rolling.iter().sum::<f64>() / rolling.len() as f64,
            )
        };
        let mean = |f: &dyn Fn(&MetricsRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
        let mut action_counts = [0u64; Action::COUNT];
        for r in records {
            for (acc, c) in action_counts.iter_mut().zip(r.action_counts) {
                *acc += c as u64;
            }
        }
        ScenarioMetrics {
            counts: OutcomeCounts::tally(records),
            max_p_dest,
            mean_p_dest,
            mean_reward: mean(&|r| r.total_reward),
            mean_final_energy_kwh: mean(&|r| r.final_energy_kwh),
            mean_max_deviation_m: mean(&|r| r.max_corridor_deviation_m),
            mean_follow_route_fraction: mean(&|r| r.follow_route_fraction()),
            action_counts,
            mean_wind_ms,
            rolling,
        }
    }
}
