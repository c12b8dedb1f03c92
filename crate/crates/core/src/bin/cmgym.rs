use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use cmgym::config::ConfigDoc;
use cmgym::harness::{
    load_results_csv, plot::plot_results, policy_from_config, run_episode, run_sweep, train_tabular_q, write_results_csv,
    Axis, SweepRow, SweepSpec,
};
use cmgym::SimConfig;

#[derive(Parser)]
#[command(name = "cmgym", version, about = "AAM contingency-management simulation environment")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one episode and write its transcript and metrics.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// key=value overrides, applied after the file.
        overrides: Vec<String>,
    },
    /// Run every combination of the given axes over several seeds.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// key=v1,v2,... (repeatable)
        #[arg(long = "axis")]
        axes: Vec<String>,
        #[arg(long, default_value_t = 5)]
        seeds: u32,
        /// Decision steps per run, overriding harness.steps.
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        /// Results CSV path.
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
        /// key=value overrides applied to every cell.
        #[arg(long = "set")]
        sets: Vec<String>,
    },
    /// Draw figures from a results CSV.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "figs")]
        out: PathBuf,
    },
    /// Speak the JSON-lines control protocol.
    Serve {
        #[arg(long, required = true)]
        stdio: bool,
        #[arg(long)]
        config: Option<PathBuf>,
        overrides: Vec<String>,
    },
    /// Train the tabular Q-learning baseline and save its table.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "q_table.json")]
        out: PathBuf,
        /// Learning-curve CSV.
        #[arg(long)]
        curve: Option<PathBuf>,
        overrides: Vec<String>,
    },
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<fs::File>) -> Result<()>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn cmd_run(config: &Path, out: &Path, seed: Option<u64>, overrides: &[String]) -> Result<()> {
    let cfg = SimConfig::load(config, overrides)?;
    let seed = seed.unwrap_or(cfg.seed);
    let mut policy = policy_from_config(&cfg, seed)?;
    let start = Instant::now();
    let run = run_episode(&cfg, policy.as_mut(), seed)?;
    let m = run.metrics(cfg.harness.rolling_window);
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    if cfg.env.record_transcript {
        run.transcript.save(&out.join("transcript.csv"))?;
    }
    write_file(&out.join("metrics.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &m)?;
        Ok(())
    })?;
    let row = SweepRow {
        cell: 0,
        overrides: vec![],
        p_nav: cfg.nav.p_nav,
        e_max_kwh: cfg.energy.e_max,
        seed,
        max_p_dest: m.max_p_dest,
        mean_p_dest: m.mean_p_dest,
        mean_reward: m.mean_reward,
        arrivals: m.counts.reached,
        departures: run.stats.departures,
        completed: m.counts.total(),
        nav_events: run.stats.nav_events,
        steps: run.steps,
        agent_steps: run.stats.agent_steps,
    };
    write_file(&out.join("results.csv"), |w| Ok(write_results_csv(&[row], w)?))?;
    println!(
        "seed {seed}: {} steps in {:.1}s, {} flights completed ({} reached destination), max P_dest {:.4}, mean P_dest {:.4}, mean reward {:.4}",
        run.steps,
        start.elapsed().as_secs_f64(),
        m.counts.total(),
        m.counts.reached,
        m.max_p_dest,
        m.mean_p_dest,
        m.mean_reward
    );
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_sweep(
    config: &Path,
    axes: &[String],
    seeds: u32,
    steps: Option<u64>,
    workers: Option<usize>,
    out: &Path,
    sets: &[String],
) -> Result<bool> {
    let mut base = ConfigDoc::load(config)?;
    for s in sets {
        base.apply_override(s)?;
    }
    let workers = workers.or_else(|| Some(base.build().ok()?.harness.workers).filter(|&w| w > 0));
    let spec = SweepSpec {
        base,
        axes: axes.iter().map(|a| Axis::parse(a)).collect::<cmgym::Result<_>>()?,
        seeds,
        steps,
        workers,
    };
    let start = Instant::now();
    let res = run_sweep(&spec)?;
    write_file(out, |w| Ok(write_results_csv(&res.rows, w)?))?;
    println!("{:>10} {:>8} {:>6} {:>10} {:>10} {:>9} {:>5}", "p_nav", "e_max", "seed", "max_p", "mean_p", "completed", "nav");
    for r in &res.rows {
        println!(
            "{:>10} {:>8} {:>6} {:>10.4} {:>10.4} {:>9} {:>5}",
            r.p_nav, r.e_max_kwh, r.seed, r.max_p_dest, r.mean_p_dest, r.completed, r.nav_events
        );
    }
    for f in &res.failures {
        eprintln!("FAILED cell {:?} seed index {}: {}", f.overrides, f.seed_index, f.error);
    }
    println!(
        "{} runs in {:.1}s, {} failed; wrote {}",
        res.rows.len() + res.failures.len(),
        start.elapsed().as_secs_f64(),
        res.failures.len(),
        out.display()
    );
    Ok(res.failures.is_empty())
}

fn cmd_train(config: &Path, out: &Path, curve: Option<&Path>, overrides: &[String]) -> Result<()> {
    let cfg = SimConfig::load(config, overrides)?;
    let hp = cfg.harness.q.clone();
    let (policy, points) = train_tabular_q(&cfg, hp.episodes, &hp)?;
    policy.table.save(out, &policy.disc)?;
    if let Some(path) = curve {
        write_file(path, |w| {
            let mut wtr = csv::Writer::from_writer(w);
            for p in &points {
                wtr.serialize(p)?;
            }
            wtr.flush()?;
            Ok(())
        })?;
    }
    for p in &points {
        println!("episode {:>4}  steps {:>8}  completed {:>6}  mean return {:.4}", p.episode, p.global_steps, p.completed, p.mean_return);
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run {
            config,
            out,
            seed,
            overrides,
        } => cmd_run(&config, &out, seed, &overrides).map(|_| true),
        Cmd::Sweep {
            config,
            axes,
            seeds,
            steps,
            workers,
            out,
            sets,
        } => cmd_sweep(&config, &axes, seeds, steps, workers, &out, &sets),
        Cmd::Plot { input, out } => load_results_csv(&input)
            .and_then(|rows| plot_results(&rows, &out))
            .map(|files| {
                for f in files {
                    println!("wrote {}", f.display());
                }
                true
            })
            .map_err(Into::into),
        Cmd::Serve {
            stdio: _,
            config,
            overrides,
        } => (|| -> Result<bool> {
            let cfg = match config {
                Some(path) => SimConfig::load(&path, &overrides)?,
                None => {
                    let mut doc = ConfigDoc::default();
                    for o in &overrides {
                        doc.apply_override(o)?;
                    }
                    doc.build()?
                }
            };
            cmgym::protocol::serve(cfg, io::stdin().lock(), io::stdout().lock())?;
            Ok(true)
        })(),
        Cmd::Train {
            config,
            out,
            curve,
            overrides,
        } => cmd_train(&config, &out, curve.as_deref(), &overrides).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
