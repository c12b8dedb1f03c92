//! Experiment front-end: episodes, baseline policies, metrics, sweeps,
//! plotting and a tabular learner.

pub mod episode;
pub mod metrics;
pub mod plot;
pub mod policy;
pub mod qlearn;
pub mod sweep;

pub use episode::{discounted_return, policy_from_config, run_episode, EpisodeOutput};
pub use metrics::{rolling_dest_fraction, rolling_mean, MetricsRecord, OutcomeCounts, ScenarioMetrics};
pub use policy::{Policy, QPolicy, RandomPolicy, Unequipped};
pub use qlearn::{train_tabular_q, CurvePoint, Discretizer, QTable};
pub use sweep::{load_results_csv, read_results_csv, run_sweep, write_results_csv, Axis, ResultRecord, SweepOutput, SweepRow, SweepSpec, RESULTS_HEADER};
