//! Cartesian parameter sweeps over configuration keys.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use toml::Value;

use super::episode::{policy_from_config, run_episode};
use crate::config::{parse_value, ConfigDoc};
use crate::env::transcript::round9;
use crate::error::{Error, Result};

pub const RESULTS_HEADER: &str = "p_nav,e_max_kwh,seed,max_p_dest,mean_reward,arrivals,departures";

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub key: String,
    pub values: Vec<Value>,
}

impl Axis {
    /// Parses `key=v1,v2,...`.
    pub fn parse(text: &str) -> Result<Self> {
        let (key, values) = text
            .split_once('=')
            .ok_or_else(|| Error::config(format!("axis `{text}` is not key=v1,v2,...")))?;
        let values: Vec<Value> = values.split(',').map(|v| parse_value(v.trim())).collect();
        if key.trim().is_empty() || values.is_empty() {
            return Err(Error::config(format!("axis `{text}` is empty")));
        }
        Ok(Axis {
            key: key.trim().to_string(),
            values,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: ConfigDoc,
    pub axes: Vec<Axis>,
    /// Runs per cell. Run `k` of every cell uses seed `base seed + k`, so
    /// cells are compared on common random numbers.
    pub seeds: u32,
    pub steps: Option<u64>,
    pub workers: Option<usize>,
}

impl SweepSpec {
    /// Every combination of axis values, first axis varying slowest.
    pub fn cells(&self) -> Vec<Vec<(String, Value)>> {
        let mut cells: Vec<Vec<(String, Value)>> = vec![vec![]];
        for axis in &self.axes {
            cells = cells
                .into_iter()
                .flat_map(|c| {
                    axis.values.iter().map(move |v| {
                        let mut c = c.clone();
                        c.push((axis.key.clone(), v.clone()));
                        c
                    })
                })
                .collect();
        }
        cells
    }
}

/// One run of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cell: usize,
    pub overrides: Vec<(String, String)>,
    pub p_nav: f64,
    pub e_max_kwh: f64,
    pub seed: u64,
    pub max_p_dest: f64,
    pub mean_p_dest: f64,
    pub mean_reward: f64,
    pub arrivals: u64,
    pub departures: u64,
    pub completed: u64,
    pub nav_events: u64,
    pub steps: u64,
    pub agent_steps: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepFailure {
    pub cell: usize,
    pub seed_index: u32,
    pub overrides: Vec<(String, String)>,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutput {
    /// Sorted by (E_max, P_nav, seed, cell).
    pub rows: Vec<SweepRow>,
    pub failures: Vec<SweepFailure>,
}

fn run_cell(spec: &SweepSpec, cell: usize, overrides: &[(String, Value)], k: u32) -> Result<SweepRow> {
    let mut doc = spec.base.clone();
    for (key, v) in overrides {
        doc.set(key, v.clone())?;
    }
    if let Some(steps) = spec.steps {
        doc.set("harness.steps", Value::Integer(steps as i64))?;
    }
    let cfg = doc.build()?;
    let seed = cfg.seed.wrapping_add(k as u64);
    let mut policy = policy_from_config(&cfg, seed)?;
    let out = run_episode(&cfg, policy.as_mut(), seed)?;
    let m = out.metrics(cfg.harness.rolling_window);
    Ok(SweepRow {
        cell,
        overrides: overrides.iter().map(|(k, v)| (k.clone(), v.to_string())).collect(),
        p_nav: cfg.nav.p_nav,
        e_max_kwh: cfg.energy.e_max,
        seed,
        max_p_dest: m.max_p_dest,
        mean_p_dest: m.mean_p_dest,
        mean_reward: m.mean_reward,
        arrivals: m.counts.reached,
        departures: out.stats.departures,
        completed: m.counts.total(),
        nav_events: out.stats.nav_events,
        steps: out.steps,
        agent_steps: out.stats.agent_steps,
    })
}

/// Runs every (cell, seed) pair, concurrently when `workers` allows. A failing
/// run is recorded and does not stop the others. Output order does not depend
/// on scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutput> {
    if spec.seeds == 0 {
        return Err(Error::config("a sweep needs at least one seed"));
    }
    // surface schema errors before any run starts
    let cells = spec.cells();
    for c in &cells {
        let mut doc = spec.base.clone();
        for (key, v) in c {
            doc.set(key, v.clone())?;
        }
        doc.build()?;
    }
    let jobs: Vec<(usize, u32)> = (0..cells.len())
        .flat_map(|c| (0..spec.seeds).map(move |k| (c, k)))
        .collect();
    let run = || -> Vec<(usize, u32, Result<SweepRow>)> {
        jobs.par_iter()
            .map(|&(c, k)| (c, k, run_cell(spec, c, &cells[c], k)))
            .collect()
    };
    let results = match spec.workers {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::config(e.to_string()))?
            .install(run),
        _ => run(),
    };
    let mut out = SweepOutput::default();
    for (c, k, r) in results {
        match r {
            Ok(row) => out.rows.push(row),
            Err(e) => {
                log::error!("sweep cell {c} seed index {k} failed: {e}");
                out.failures.push(SweepFailure {
                    cell: c,
                    seed_index: k,
                    overrides: cells[c].iter().map(|(k, v)| (k.clone(), v.to_string())).collect(),
                    error: e.to_string(),
                });
            }
        }
    }
    out.rows.sort_by(|a, b| {
        a.e_max_kwh
            .total_cmp(&b.e_max_kwh)
            .then(a.p_nav.total_cmp(&b.p_nav))
            .then(a.seed.cmp(&b.seed))
            .then(a.cell.cmp(&b.cell))
    });
    Ok(out)
}

/// The row shape of the results CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub p_nav: f64,
    pub e_max_kwh: f64,
    pub seed: u64,
    pub max_p_dest: f64,
    pub mean_reward: f64,
    pub arrivals: u64,
    pub departures: u64,
}

impl From<&SweepRow> for ResultRecord {
    fn from(r: &SweepRow) -> Self {
        ResultRecord {
            p_nav: round9(r.p_nav),
            e_max_kwh: round9(r.e_max_kwh),
            seed: r.seed,
            max_p_dest: round9(r.max_p_dest),
            mean_reward: round9(r.mean_reward),
            arrivals: r.arrivals,
            departures: r.departures,
        }
    }
}

pub fn write_results_csv(rows: &[SweepRow], w: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(ResultRecord::from(r)).map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| Error::config(e.to_string()))
}

pub fn read_results_csv(r: impl Read) -> Result<Vec<ResultRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers().map_err(csv_err)?.iter().collect::<Vec<_>>().join(",");
    if header != RESULTS_HEADER {
        return Err(Error::config(format!("unexpected results header `{header}`")));
    }
    rdr.deserialize().map(|r| r.map_err(csv_err)).collect()
}

pub fn load_results_csv(path: &Path) -> Result<Vec<ResultRecord>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_results_csv(f)
}

fn csv_err(e: csv::Error) -> Error {
    Error::config(format!("results csv: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn tiny_base() -> ConfigDoc {
        ConfigDoc::parse(
            "fleet_size = 6\n[synthetic.ring]\ncount = 4\nradius_m = 4000.0\n[harness]\nsteps = 20\nrolling_window = 5\n[env]\nrecord_transcript = false\n",
            Path::new("."),
        )
        .unwrap()
    }

    #[test]
    fn axis_parsing() {
        let a = Axis::parse("energy.e_max=50,150,250").unwrap();
        assert_eq!(a.key, "energy.e_max");
        assert_eq!(a.values, vec![Value::Integer(50), Value::Integer(150), Value::Integer(250)]);
        assert!(Axis::parse("novalues").is_err());
    }

    #[test]
    fn two_axes_shape_and_order() {
        let spec = SweepSpec {
            base: tiny_base(),
            axes: vec![
                Axis::parse("nav.p_nav=0,1e-5").unwrap(),
                Axis::parse("energy.e_max=250,50,150").unwrap(),
            ],
            seeds: 1,
            steps: None,
            workers: Some(2),
        };
        let out = run_sweep(&spec).unwrap();
        assert!(out.failures.is_empty());
        assert_eq!(out.rows.len(), 6);
        let keys: Vec<(f64, f64)> = out.rows.iter().map(|r| (r.e_max_kwh, r.p_nav)).collect();
        assert_eq!(
            keys,
            vec![(50.0, 0.0), (50.0, 1e-5), (150.0, 0.0), (150.0, 1e-5), (250.0, 0.0), (250.0, 1e-5)]
        );
    }

    #[test]
    fn empty_axes_single_row() {
        let spec = SweepSpec {
            base: tiny_base(),
            axes: vec![],
            seeds: 1,
            steps: Some(5),
            workers: Some(1),
        };
        let out = run_sweep(&spec).unwrap();
        assert_eq!(out.rows.len(), 1);
        assert_eq!(out.rows[0].steps, 5);
    }

    #[test]
    fn unknown_axis_key_rejected_up_front() {
        let spec = SweepSpec {
            base: tiny_base(),
            axes: vec![Axis::parse("energy.emax=1,2").unwrap()],
            seeds: 1,
            steps: None,
            workers: Some(1),
        };
        assert!(run_sweep(&spec).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let row = SweepRow {
            cell: 0,
            overrides: vec![],
            p_nav: 1e-5,
            e_max_kwh: 150.0,
            seed: 4,
            max_p_dest: 0.123456789123,
            mean_p_dest: 0.1,
            mean_reward: -0.0123456789123,
            arrivals: 12,
            departures: 15,
            completed: 14,
            nav_events: 0,
            steps: 10,
            agent_steps: 100,
        };
        let mut buf = vec![];
        write_results_csv(std::slice::from_ref(&row), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(RESULTS_HEADER));
        let back = read_results_csv(buf.as_slice()).unwrap();
        assert_eq!(back, vec![ResultRecord::from(&row)]);
        assert_eq!(back[0].max_p_dest, 0.123456789);
    }
}
