//! Baseline schemes, Monte Carlo sweeps and CSV output.
//!
//! Every trial draws its geometry and small-scale fading from its own RNG
//! stream, seeded from `(seed, trial)`, so all schemes and sweep values of a
//! trial see the same realization and results do not depend on scheduling.

use crate::ao::{initial_state, maximize_scnr_counted, solve, solve_from, AoState, SolverOptions};
use crate::channels::{draw_nlos, ChannelSet, FrequencyOffsets};
use crate::error::{IsacError, Result};
use crate::metrics::IsacDesign;
use crate::scenario::{linear_to_db, sample_scenario, Geometry, ScenarioConfig};
use crate::sust::{closed_form_scnr_fda, closed_form_scnr_pa, oracle_scnr, SustScenario};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt::{self, Write as _};
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

/// Header line identifying the sweep CSV layout.
pub const SWEEP_CSV_VERSION: &str = "# isac-sweep v1";

/// Transmission schemes compared in the sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// Full optimization including the frequency offsets.
    PropAo,
    /// Sum-rate optimization without the SCNR threshold.
    CommCentric,
    /// SCNR maximization only.
    RadarCentric,
    /// All offsets pinned to zero.
    Pa,
    /// Offsets pinned to the uniform ramp up to `f_max`.
    FixFda,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::PropAo,
        Scheme::CommCentric,
        Scheme::RadarCentric,
        Scheme::Pa,
        Scheme::FixFda,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::PropAo => "prop_ao",
            Scheme::CommCentric => "comm_centric",
            Scheme::RadarCentric => "radar_centric",
            Scheme::Pa => "pa",
            Scheme::FixFda => "fix_fda",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = IsacError;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s.trim())
            .ok_or_else(|| IsacError::Config(format!("unknown scheme '{s}'")))
    }
}

/// Result of one scheme on one realization.
#[derive(Debug, Clone)]
pub struct SchemeOutcome {
    pub design: IsacDesign,
    pub sum_rate: f64,
    pub scnr: f64,
    pub iters: usize,
    pub converged: bool,
}

/// Runs `scheme` on the realization held by `channels` (whose own offsets are ignored).
pub fn run_scheme(
    scheme: Scheme,
    channels: &ChannelSet,
    cfg: &ScenarioConfig,
    opts: &SolverOptions,
) -> Result<SchemeOutcome> {
    let mut opts = opts.clone();
    let offsets = match scheme {
        Scheme::Pa => FrequencyOffsets::zeros(cfg.n_tx),
        _ => FrequencyOffsets::uniform(cfg.n_tx, cfg.f_max),
    };
    let ch = channels.retune(offsets)?;
    match scheme {
        Scheme::PropAo => {
            // Converge with the uniform ramp first, then free the offsets; the
            // second stage only accepts improvements, so it never ends below
            // the fixed-offset design it starts from.
            let mut pinned = opts.clone();
            pinned.optimize_offsets = false;
            match solve(&ch, cfg, &pinned) {
                Ok((first, t1)) => {
                    let gamma = opts.enforce_scnr.then(|| cfg.gamma_t_linear());
                    let state = AoState::new(ch, first, gamma)?;
                    let (design, t2) = solve_from(state, &opts)?;
                    let last = t2.entries.last();
                    return Ok(SchemeOutcome {
                        sum_rate: last.map_or(0.0, |e| e.sum_rate),
                        scnr: last.map_or(0.0, |e| e.scnr),
                        iters: t1.iterations() + t2.iterations(),
                        converged: t2.converged,
                        design,
                    });
                }
                // The ramp alone may miss the threshold where free offsets do not.
                Err(IsacError::ScnrInfeasible { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        Scheme::CommCentric => opts.enforce_scnr = false,
        Scheme::Pa | Scheme::FixFda => opts.optimize_offsets = false,
        Scheme::RadarCentric => {
            let mut state = initial_state(&ch, None)?;
            let (scnr, iters) = maximize_scnr_counted(
                &mut state,
                opts.max_outer_iters,
                opts.optimize_offsets,
                &opts,
            )?;
            return Ok(SchemeOutcome {
                sum_rate: state.sum_rate(),
                scnr,
                iters,
                converged: iters < opts.max_outer_iters,
                design: state.design,
            });
        }
    }
    let (design, trace) = solve(&ch, cfg, &opts)?;
    let last = trace.entries.last();
    Ok(SchemeOutcome {
        sum_rate: last.map_or(0.0, |e| e.sum_rate),
        scnr: last.map_or(0.0, |e| e.scnr),
        iters: trace.iterations(),
        converged: trace.converged,
        design,
    })
}

/// Scenario quantity varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    PBsDbm,
    GammaTDb,
    FMax,
    /// Increment `Δf`, with `f_max = Δf (N_t − 1)`.
    DeltaFMax,
    /// RIS size; factored into the most square `m_azi × m_ele` grid.
    MRis,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::PBsDbm => "p_bs_dbm",
            SweepVar::GammaTDb => "gamma_t_db",
            SweepVar::FMax => "f_max",
            SweepVar::DeltaFMax => "delta_f_max",
            SweepVar::MRis => "m_ris",
        }
    }

    /// Configuration at sweep value `v`.
    pub fn apply(self, base: &ScenarioConfig, v: f64) -> Result<ScenarioConfig> {
        let mut cfg = base.clone();
        match self {
            SweepVar::PBsDbm => cfg.p_bs_dbm = v,
            SweepVar::GammaTDb => cfg.gamma_t_db = v,
            SweepVar::FMax => cfg.f_max = v,
            SweepVar::DeltaFMax => cfg.f_max = v * (cfg.n_tx.saturating_sub(1)) as f64,
            SweepVar::MRis => {
                if v < 1.0 || v.fract() != 0.0 {
                    return Err(IsacError::Config(format!("m_ris must be a positive integer, got {v}")));
                }
                let m = v as usize;
                let mut a = (m as f64).sqrt() as usize;
                while m % a != 0 {
                    a -= 1;
                }
                cfg.m_ele = a;
                cfg.m_azi = m / a;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl FromStr for SweepVar {
    type Err = IsacError;

    fn from_str(s: &str) -> Result<Self> {
        [
            SweepVar::PBsDbm,
            SweepVar::GammaTDb,
            SweepVar::FMax,
            SweepVar::DeltaFMax,
            SweepVar::MRis,
        ]
        .into_iter()
        .find(|x| x.name() == s.trim())
        .ok_or_else(|| IsacError::Config(format!("unknown sweep variable '{s}'")))
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub sweep_var: SweepVar,
    pub values: Vec<f64>,
    pub trials: usize,
    pub schemes: Vec<Scheme>,
    pub base: ScenarioConfig,
    pub opts: SolverOptions,
    pub seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(IsacError::Config("trials must be at least 1".into()));
        }
        if self.values.is_empty() || self.schemes.is_empty() {
            return Err(IsacError::Config("sweep needs at least one value and one scheme".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) || self.values.windows(2).any(|w| w[0] > w[1]) {
            return Err(IsacError::Config("sweep values must be finite and sorted".into()));
        }
        for v in &self.values {
            self.sweep_var.apply(&self.base, *v)?;
        }
        self.opts.validate()
    }
}

/// Status of one (scheme, value, trial) run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    MaxIters,
    Infeasible,
    Failed,
}

impl RunStatus {
    pub fn name(self) -> &'static str {
        match self {
            RunStatus::Converged => "ok",
            RunStatus::MaxIters => "max_iters",
            RunStatus::Infeasible => "infeasible",
            RunStatus::Failed => "error",
        }
    }

    pub fn is_success(self) -> bool {
        matches!(self, RunStatus::Converged | RunStatus::MaxIters)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scheme: Scheme,
    pub value_index: usize,
    pub sweep_value: f64,
    pub trial: usize,
    /// NaN on failure.
    pub sum_rate: f64,
    /// Linear; NaN on failure.
    pub scnr: f64,
    pub iters: usize,
    pub status: RunStatus,
}

/// Aggregate over the successful trials of one (scheme, value).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub scheme: Scheme,
    pub sweep_value: f64,
    pub successes: usize,
    pub failures: usize,
    /// `None` when every trial failed.
    pub mean_sum_rate: Option<f64>,
    pub stderr_sum_rate: Option<f64>,
    pub mean_scnr_db: Option<f64>,
    pub stderr_scnr_db: Option<f64>,
    pub mean_iters: Option<f64>,
    pub max_iters: usize,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub sweep_var: SweepVar,
    /// Sorted by scheme, value, trial.
    pub rows: Vec<SweepRow>,
    pub summary: Vec<SweepSummary>,
}

/// SplitMix64 finalizer; decorrelates neighbouring `(seed, trial)` pairs.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// RNG stream of trial `trial` under master seed `seed`.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(mix64(seed) ^ trial as u64))
}

/// Geometry and channels of one trial; the offsets are placeholders.
pub fn trial_channels(cfg: &ScenarioConfig, seed: u64, trial: usize) -> Result<(Geometry, ChannelSet)> {
    let mut rng = trial_rng(seed, trial);
    let geom = sample_scenario(cfg, &mut rng);
    let nlos = draw_nlos(cfg, &mut rng);
    let ch = ChannelSet::build(&geom, cfg, FrequencyOffsets::uniform(cfg.n_tx, cfg.f_max), &nlos)?;
    Ok((geom, ch))
}

fn run_one(spec: &SweepSpec, scheme: Scheme, vi: usize, trial: usize) -> SweepRow {
    let v = spec.values[vi];
    let mut row = SweepRow {
        scheme,
        value_index: vi,
        sweep_value: v,
        trial,
        sum_rate: f64::NAN,
        scnr: f64::NAN,
        iters: 0,
        status: RunStatus::Failed,
    };
    let res = spec
        .sweep_var
        .apply(&spec.base, v)
        .and_then(|cfg| {
            let (_, ch) = trial_channels(&cfg, spec.seed, trial)?;
            run_scheme(scheme, &ch, &cfg, &spec.opts)
        });
    match res {
        Ok(out) => {
            row.sum_rate = out.sum_rate;
            row.scnr = out.scnr;
            row.iters = out.iters;
            row.status = if out.converged {
                RunStatus::Converged
            } else {
                RunStatus::MaxIters
            };
        }
        Err(IsacError::ScnrInfeasible { .. }) => row.status = RunStatus::Infeasible,
        Err(_) => {}
    }
    row
}

fn mean_stderr(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (Some(mean), Some(0.0));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some((var / n).sqrt()))
}

fn summarize(spec: &SweepSpec, rows: &[SweepRow]) -> Vec<SweepSummary> {
    let mut out = Vec::new();
    for &scheme in &spec.schemes {
        for (vi, &v) in spec.values.iter().enumerate() {
            let group: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| r.scheme == scheme && r.value_index == vi)
                .collect();
            let ok: Vec<&&SweepRow> = group.iter().filter(|r| r.status.is_success()).collect();
            let rates: Vec<f64> = ok.iter().map(|r| r.sum_rate).collect();
            let scnrs: Vec<f64> = ok.iter().map(|r| linear_to_db(r.scnr)).collect();
            let iters: Vec<f64> = ok.iter().map(|r| r.iters as f64).collect();
            let (mean_sum_rate, stderr_sum_rate) = mean_stderr(&rates);
            let (mean_scnr_db, stderr_scnr_db) = mean_stderr(&scnrs);
            out.push(SweepSummary {
                scheme,
                sweep_value: v,
                successes: ok.len(),
                failures: group.len() - ok.len(),
                mean_sum_rate,
                stderr_sum_rate,
                mean_scnr_db,
                stderr_scnr_db,
                mean_iters: mean_stderr(&iters).0,
                max_iters: ok.iter().map(|r| r.iters).max().unwrap_or(0),
            });
        }
    }
    out
}

/// Runs every (scheme, value, trial) combination in parallel.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let mut jobs = Vec::new();
    for &s in &spec.schemes {
        for vi in 0..spec.values.len() {
            for t in 0..spec.trials {
                jobs.push((s, vi, t));
            }
        }
    }
    let mut rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(s, vi, t)| run_one(spec, s, vi, t))
        .collect();
    let order = |s: Scheme| spec.schemes.iter().position(|x| *x == s).unwrap_or(usize::MAX);
    rows.sort_by_key(|r| (order(r.scheme), r.value_index, r.trial));
    let summary = summarize(spec, &rows);
    Ok(SweepResult {
        sweep_var: spec.sweep_var,
        rows,
        summary,
    })
}

impl SweepResult {
    /// Per-run CSV with a version comment line.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{SWEEP_CSV_VERSION} sweep_var={}", self.sweep_var.name());
        s.push_str("scheme,sweep_value,trial,sum_rate_bps_hz,scnr_db,iters,status\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.scheme,
                r.sweep_value,
                r.trial,
                r.sum_rate,
                linear_to_db(r.scnr),
                r.iters,
                r.status.name()
            );
        }
        s
    }

    /// Aggregates per (scheme, value); empty cells mark groups without successes.
    pub fn summary_csv(&self) -> String {
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
        let mut s = String::from(
            "scheme,sweep_value,successes,failures,mean_sum_rate,stderr_sum_rate,mean_scnr_db,stderr_scnr_db,mean_iters,max_iters\n",
        );
        for g in &self.summary {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                g.scheme,
                g.sweep_value,
                g.successes,
                g.failures,
                opt(g.mean_sum_rate),
                opt(g.stderr_sum_rate),
                opt(g.mean_scnr_db),
                opt(g.stderr_scnr_db),
                opt(g.mean_iters),
                g.max_iters
            );
        }
        s
    }
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| IsacError::Io(e.error))?;
    Ok(())
}

/// One row of the single-user single-target increment sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SustRow {
    pub delta_f: f64,
    pub scnr_fda: f64,
    pub scnr_pa: f64,
    pub scnr_oracle: f64,
}

/// Closed-form and oracle SCNR over a grid of increments.
pub fn sust_sweep(s: &SustScenario, grid: &[f64]) -> Result<Vec<SustRow>> {
    s.validate()?;
    let pa = closed_form_scnr_pa(s);
    grid.iter()
        .map(|&df| {
            Ok(SustRow {
                delta_f: df,
                scnr_fda: closed_form_scnr_fda(s, df),
                scnr_pa: pa,
                scnr_oracle: oracle_scnr(s, df)?,
            })
        })
        .collect()
}

pub fn sust_csv(rows: &[SustRow]) -> String {
    let mut s = String::from("delta_f_hz,scnr_fda_db,scnr_pa_db,scnr_oracle_db\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            r.delta_f,
            linear_to_db(r.scnr_fda),
            linear_to_db(r.scnr_pa),
            linear_to_db(r.scnr_oracle)
        );
    }
    s
}

/// Outcome of one self-check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Quick invariant suite on fixed seeds: FP tightness, full power, monotone
/// sum rate, constraint satisfaction and the single-user closed form.
pub fn check_invariants(cfg: &ScenarioConfig, opts: &SolverOptions, trials: usize) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let mut fp_gap: f64 = 0.0;
    let mut power_gap: f64 = 0.0;
    let mut mono_drop: f64 = 0.0;
    let mut constraint_ok = true;
    let mut errors = Vec::new();
    for t in 0..trials {
        let res = trial_channels(cfg, opts.seed, t).and_then(|(_, ch)| {
            let st = initial_state(&ch, None)?;
            let exact: f64 = st.sum_rate() * std::f64::consts::LN_2;
            fp_gap = fp_gap.max((st.fp_objective() - exact).abs());
            let w = crate::ao::update_beamformers(&st, opts.qcqp_tol)?;
            let p: f64 = w.iter().map(|v| v.norm_squared()).sum();
            power_gap = power_gap.max((p - cfg.p_bs_watt()).abs() / cfg.p_bs_watt());
            let (design, trace) = solve(&ch, cfg, opts)?;
            for w in trace.entries.windows(2) {
                mono_drop = mono_drop.max(w[0].sum_rate - w[1].sum_rate);
            }
            let scnr = trace.entries.last().map_or(0.0, |e| e.scnr);
            constraint_ok &= scnr >= cfg.gamma_t_linear() * (1.0 - 1e-6)
                && design.theta.iter().all(|z| (z.norm() - 1.0).abs() <= 1e-12)
                && design.offsets.as_slice().iter().all(|f| (0.0..=cfg.f_max).contains(f));
            Ok(())
        });
        if let Err(e) = res {
            errors.push(format!("trial {t}: {e}"));
        }
    }
    out.push(CheckResult {
        name: "fp_tightness",
        passed: fp_gap < 1e-9,
        detail: format!("max gap {fp_gap:.3e}"),
    });
    out.push(CheckResult {
        name: "full_power",
        passed: power_gap <= 1e-10,
        detail: format!("max relative gap {power_gap:.3e}"),
    });
    out.push(CheckResult {
        name: "monotone_sum_rate",
        passed: mono_drop <= 1e-8,
        detail: format!("largest drop {mono_drop:.3e}"),
    });
    out.push(CheckResult {
        name: "constraints",
        passed: constraint_ok && errors.is_empty(),
        detail: if errors.is_empty() {
            format!("{trials} trials")
        } else {
            errors.join("; ")
        },
    });

    let s = SustScenario {
        n_tx: cfg.n_tx,
        n_rx: cfg.n_rx,
        m_ris: cfg.m_ris(),
        p_bs: cfg.p_bs_watt(),
        sigma_r2: cfg.noise_radar_watt(),
        beta_t: cfg.beta_target,
        beta_c: cfg.beta_clutter,
        p_tar: crate::C64::new(1e-4, 0.0),
        delta_d: 20.0,
        delta_f_max: cfg.f_max,
    };
    let grid: Vec<f64> = (0..10).map(|i| i as f64 * 1e6).collect();
    let worst = sust_sweep(&s, &grid).map(|rows| {
        rows.iter()
            .map(|r| (r.scnr_fda - r.scnr_oracle).abs() / r.scnr_oracle)
            .fold(0.0, f64::max)
    });
    out.push(match worst {
        Ok(w) => CheckResult {
            name: "single_user_closed_form",
            passed: w <= 1e-6,
            detail: format!("max relative error {w:.3e}"),
        },
        Err(e) => CheckResult {
            name: "single_user_closed_form",
            passed: false,
            detail: e.to_string(),
        },
    });
    out
}
