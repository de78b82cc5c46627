//! Command-line front end: Monte Carlo sweeps, the single-user increment
//! sweep and a quick invariant check.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use isac_core::ao::SolverOptions;
use isac_core::experiments::{
    check_invariants, run_sweep, sust_csv, sust_sweep, trial_rng, write_atomic, Scheme, SweepSpec,
    SweepVar,
};
use isac_core::scenario::{sample_scenario, ScenarioConfig};
use isac_core::sust::{optimal_increment, SustScenario};
use isac_core::CVec;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "isac", version, about = "FDA RIS-aided ISAC simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// `key = value` file with scenario and solver settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides applied after the config file, e.g. `--set k_users=2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Monte Carlo sweep of one scenario quantity over several schemes.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "p_bs_dbm")]
        sweep: String,
        /// Comma-separated, ascending.
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        values: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "prop_ao,comm_centric,radar_centric,pa,fix_fda")]
        schemes: Vec<String>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
        /// Optional per-(scheme, value) aggregate CSV.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Closed-form and oracle SCNR over a grid of frequency increments.
    SustSweep {
        #[command(flatten)]
        common: Common,
        /// Range separation between target and clutter (m).
        #[arg(long, default_value_t = 20.0)]
        delta_d: f64,
        /// Largest increment of the grid (Hz); defaults to `f_max / (N_t - 1)`.
        #[arg(long)]
        delta_f_max: Option<f64>,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long, default_value = "sust.csv")]
        out: PathBuf,
    },
    /// Runs the invariant suite on fixed seeds.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        trials: usize,
    },
}

/// Loads the scenario (desk preset by default) and solver options; every
/// line or override goes to the scenario unless the solver recognises it.
fn load(common: &Common) -> Result<(ScenarioConfig, SolverOptions)> {
    let mut lines: Vec<(String, String)> = Vec::new();
    if let Some(p) = &common.config {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        lines.extend(isac_core::scenario::parse_kv_lines(&text)?);
    }
    for s in &common.set {
        let Some((k, v)) = s.split_once('=') else {
            bail!("override '{s}' is not KEY=VALUE");
        };
        lines.push((k.trim().to_string(), v.trim().to_string()));
    }
    let mut cfg = ScenarioConfig::desk();
    let mut opts = SolverOptions::default();
    // Presets reset the scenario, so apply them first.
    for (k, v) in lines.iter().filter(|(k, _)| k == "preset") {
        cfg.set(k, v)?;
    }
    for (k, v) in lines.iter().filter(|(k, _)| k != "preset") {
        if !opts.set(k, v)? {
            cfg.set(k, v)?;
        }
    }
    cfg.validate()?;
    opts.validate()?;
    Ok((cfg, opts))
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Run {
            common,
            sweep,
            values,
            schemes,
            trials,
            seed,
            out,
            summary,
        } => {
            let (base, mut opts) = load(&common)?;
            opts.seed = seed;
            let schemes = schemes
                .iter()
                .map(|s| s.parse::<Scheme>())
                .collect::<isac_core::Result<Vec<_>>>()?;
            let spec = SweepSpec {
                sweep_var: sweep.parse::<SweepVar>()?,
                values,
                trials,
                schemes,
                base,
                opts,
                seed,
            };
            let res = run_sweep(&spec)?;
            write_atomic(&out, &res.to_csv())?;
            if let Some(p) = summary {
                write_atomic(&p, &res.summary_csv())?;
            }
            print!("{}", res.summary_csv());
        }
        Cmd::SustSweep {
            common,
            delta_d,
            delta_f_max,
            points,
            out,
        } => {
            let (cfg, _) = load(&common)?;
            if points < 2 {
                bail!("need at least two grid points");
            }
            let geom = sample_scenario(&cfg, &mut trial_rng(cfg.rng_seed, 0));
            let theta = CVec::from_element(cfg.m_ris(), isac_core::C64::new(1.0, 0.0));
            let cap = delta_f_max.unwrap_or(cfg.f_max / (cfg.n_tx.max(2) - 1) as f64);
            let s = SustScenario::from_geometry(&cfg, &geom, &theta, delta_d, cap)?;
            let grid: Vec<f64> = (0..points)
                .map(|i| cap * i as f64 / (points - 1) as f64)
                .collect();
            let rows = sust_sweep(&s, &grid)?;
            write_atomic(&out, &sust_csv(&rows))?;
            let (opt, zero) = optimal_increment(&s);
            println!("optimal increment {opt} Hz (first kernel zero {zero} Hz)");
        }
        Cmd::Check { common, trials } => {
            let (cfg, opts) = load(&common)?;
            let results = check_invariants(&cfg, &opts, trials);
            let mut failed = 0;
            for r in &results {
                println!("[{}] {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
                failed += usize::from(!r.passed);
            }
            if failed > 0 {
                bail!("{failed} check(s) failed");
            }
        }
    }
    Ok(())
}
