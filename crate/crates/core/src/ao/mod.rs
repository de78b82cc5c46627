//! Alternating optimization of beamformers, RIS phases, frequency offsets and
//! the radar equalizer for sum-rate maximization under an SCNR threshold.
//!
//! The sum-rate objective is handled through its quadratic-transform
//! (fractional programming) equivalent. Each outer iteration refreshes the
//! auxiliaries before every primal block, which keeps the fractional objective
//! tight, so every accepted block update can only raise the true sum rate.
//! A block that fails to do so, or that would break the SCNR threshold, is
//! rolled back.

mod blocks;
mod fp;
mod offsets;
mod options;
mod radar;
mod ris;
mod trace;

pub use blocks::{scnr_optimal_beam, update_beamformers, update_equalizer};
pub use fp::{fp_objective, update_auxiliaries, FpAuxiliaries};
pub use offsets::{offset_series, update_offsets_sca, OffsetSeries};
pub use options::{SadmmOptions, ScaOptions, SolverOptions};
pub use radar::{maximize_scnr, ris_phase_alignment};
pub(crate) use radar::maximize_scnr_counted;
pub use ris::{
    build_ris_subproblem, quartic, quartic_lower_bound, quartic_upper_bound, update_ris_sadmm,
    RisSubproblem, RisUpdate,
};
pub use trace::{SolverTrace, TraceEntry};

use crate::channels::{cascade, CascadedChannels, ChannelSet, FrequencyOffsets};
use crate::error::{IsacError, Result};
use crate::metrics::{scnr, sum_rate, IsacDesign};
use crate::scenario::ScenarioConfig;
use crate::{CVec, C64};
use std::time::Instant;

/// Relative SCNR slack accepted when checking the threshold after an update.
pub(crate) const SCNR_SLACK: f64 = 1e-9;

/// Everything a block update reads: channels at the current offsets, the
/// cascade at the current RIS phases, the design and the FP auxiliaries.
#[derive(Debug, Clone)]
pub struct AoState {
    pub channels: ChannelSet,
    pub cascaded: CascadedChannels,
    pub design: IsacDesign,
    pub aux: FpAuxiliaries,
    pub noises: Vec<f64>,
    /// Linear SCNR threshold, `None` when the radar constraint is disabled.
    pub gamma_t: Option<f64>,
}

impl AoState {
    /// Builds the state; `design.offsets` must match `channels.offsets`.
    pub fn new(channels: ChannelSet, design: IsacDesign, gamma_t: Option<f64>) -> Result<Self> {
        if channels.offsets != design.offsets {
            return Err(IsacError::Domain("design offsets differ from channel offsets".into()));
        }
        let cascaded = cascade(&channels, &design.theta)?;
        let noises = channels.cfg.user_noises();
        let aux = update_auxiliaries(&design, &cascaded, &noises);
        Ok(Self {
            channels,
            cascaded,
            design,
            aux,
            noises,
            gamma_t,
        })
    }

    pub fn cfg(&self) -> &ScenarioConfig {
        &self.channels.cfg
    }

    pub fn sum_rate(&self) -> f64 {
        sum_rate(&self.design, &self.cascaded, &self.noises)
    }

    pub fn scnr(&self) -> f64 {
        scnr(&self.design, &self.cascaded, self.cfg()).unwrap_or(0.0)
    }

    pub fn fp_objective(&self) -> f64 {
        fp_objective(&self.design, &self.aux, &self.cascaded, &self.noises)
    }

    /// Whether the SCNR threshold (if any) holds up to [`SCNR_SLACK`].
    pub fn scnr_ok(&self) -> bool {
        match self.gamma_t {
            Some(g) => self.scnr() >= g * (1.0 - SCNR_SLACK),
            None => true,
        }
    }

    pub fn refresh_aux(&mut self) {
        self.aux = update_auxiliaries(&self.design, &self.cascaded, &self.noises);
    }

    pub fn set_theta(&mut self, theta: CVec) -> Result<()> {
        self.cascaded = cascade(&self.channels, &theta)?;
        self.design.theta = theta;
        Ok(())
    }

    pub fn set_offsets(&mut self, offsets: FrequencyOffsets) -> Result<()> {
        self.channels = self.channels.retune(offsets.clone())?;
        self.cascaded = cascade(&self.channels, &self.design.theta)?;
        self.design.offsets = offsets;
        Ok(())
    }

    /// Beamformers matched to each user's cascaded channel, sharing the power budget equally.
    pub fn matched_filters(&self) -> Vec<CVec> {
        let p = self.cfg().p_bs_watt() / self.channels.k() as f64;
        self.cascaded
            .h_tilde
            .iter()
            .map(|h| {
                let n = h.norm();
                if n > 0.0 {
                    h * C64::new(p.sqrt() / n, 0.0)
                } else {
                    CVec::from_element(h.len(), C64::new((p / h.len() as f64).sqrt(), 0.0))
                }
            })
            .collect()
    }
}

/// Identity RIS phases, matched-filter beamformers and the SCNR-optimal
/// equalizer at the offsets of `channels`.
pub fn initial_state(channels: &ChannelSet, gamma_t: Option<f64>) -> Result<AoState> {
    let m = channels.m();
    let n_rx = channels.n_rx();
    let design = IsacDesign {
        w: vec![CVec::zeros(channels.n_tx()); channels.k()],
        theta: CVec::from_element(m, C64::new(1.0, 0.0)),
        offsets: channels.offsets.clone(),
        u: CVec::from_element(n_rx, C64::new(1.0, 0.0)),
        r0: None,
    };
    let mut state = AoState::new(channels.clone(), design, gamma_t)?;
    state.design.w = state.matched_filters();
    state.design.u = update_equalizer(&state)?;
    state.refresh_aux();
    Ok(state)
}

/// Runs the full alternating optimization starting from the offsets carried by
/// `channels`, after a feasible start has been found if the initial point misses
/// the threshold.
pub fn solve(
    channels: &ChannelSet,
    cfg: &ScenarioConfig,
    opts: &SolverOptions,
) -> Result<(IsacDesign, SolverTrace)> {
    opts.validate()?;
    if &channels.cfg != cfg {
        return Err(IsacError::Domain("channels were built for a different configuration".into()));
    }
    let gamma = opts.enforce_scnr.then(|| cfg.gamma_t_linear());
    let mut state = initial_state(channels, gamma)?;
    if !state.scnr_ok() {
        state = feasible_start(state, opts)?;
    }
    solve_from(state, opts)
}

/// Runs the alternating optimization from a given state, which must already
/// meet the SCNR threshold if one is set.
pub fn solve_from(mut state: AoState, opts: &SolverOptions) -> Result<(IsacDesign, SolverTrace)> {
    opts.validate()?;
    if !state.scnr_ok() {
        return Err(IsacError::ScnrInfeasible {
            best: state.scnr(),
            required: state.gamma_t.unwrap_or(0.0),
        });
    }
    let start = Instant::now();
    state.refresh_aux();

    let mut trace = SolverTrace::default();
    let record = |state: &AoState, iter: usize, residual: f64, trace: &mut SolverTrace| {
        trace.entries.push(TraceEntry {
            iter,
            fp_objective: state.fp_objective(),
            sum_rate: state.sum_rate(),
            scnr: state.scnr(),
            power: state.design.power(),
            sadmm_residual: residual,
            wall_time_s: start.elapsed().as_secs_f64(),
        });
    };
    record(&state, 0, 0.0, &mut trace);

    for iter in 1..=opts.max_outer_iters {
        let before = state.sum_rate();

        // Beamformers.
        state.refresh_aux();
        if let Ok(w) = update_beamformers(&state, opts.qcqp_tol) {
            let mut cand = state.clone();
            cand.design.w = w;
            accept_if_better(&mut state, cand);
        }

        // Auxiliaries and equalizer; neither changes the sum rate.
        state.refresh_aux();
        if let Ok(u) = update_equalizer(&state) {
            let mut cand = state.clone();
            cand.design.u = u;
            if cand.scnr() >= state.scnr() {
                state = cand;
            }
        }

        // RIS phases.
        let upd = update_ris_sadmm(&state, opts)?;
        let residual = upd.residual;
        if let Some((theta, u)) = upd.accepted {
            let mut cand = state.clone();
            cand.set_theta(theta)?;
            cand.design.u = u;
            accept_if_better(&mut state, cand);
        }

        // Frequency offsets.
        if opts.optimize_offsets {
            state.refresh_aux();
            let offsets = update_offsets_sca(&state, opts)?;
            if offsets != state.design.offsets {
                let mut cand = state.clone();
                cand.set_offsets(offsets)?;
                accept_if_better(&mut state, cand);
            }
        }

        state.refresh_aux();
        record(&state, iter, residual, &mut trace);
        let after = state.sum_rate();
        if (after - before).abs() <= opts.rel_tol * before.abs().max(1e-12) {
            trace.converged = true;
            break;
        }
    }
    Ok((state.design, trace))
}

/// Replaces `state` with `cand` when the sum rate does not drop and the SCNR threshold holds.
fn accept_if_better(state: &mut AoState, cand: AoState) -> bool {
    if cand.sum_rate() >= state.sum_rate() && cand.scnr_ok() {
        *state = cand;
        true
    } else {
        false
    }
}

/// Finds a start meeting the SCNR threshold: maximize the SCNR alone, then
/// mix the matched filters with the SCNR-optimal beam as little as possible.
fn feasible_start(state: AoState, opts: &SolverOptions) -> Result<AoState> {
    let gamma = state.gamma_t.unwrap_or(0.0);
    let mut radar = state.clone();
    let best = maximize_scnr(&mut radar, opts.warm_start_iters, opts.optimize_offsets, opts)?;
    if best < gamma * (1.0 - SCNR_SLACK) {
        return Err(IsacError::ScnrInfeasible {
            best,
            required: gamma,
        });
    }
    let w_radar = radar.design.w.clone();
    let mut base = radar;
    base.design.w = base.matched_filters();
    let w_mf = base.design.w.clone();
    let p_bs = base.cfg().p_bs_watt();
    let mix = |t: f64, base: &AoState| -> Result<AoState> {
        let mut s = base.clone();
        let mut w: Vec<CVec> = w_mf
            .iter()
            .zip(&w_radar)
            .map(|(a, b)| a * C64::new(1.0 - t, 0.0) + b * C64::new(t, 0.0))
            .collect();
        let power: f64 = w.iter().map(|v| v.norm_squared()).sum();
        let scale = C64::new((p_bs / power).sqrt(), 0.0);
        w.iter_mut().for_each(|v| *v *= scale);
        s.design.w = w;
        s.design.u = update_equalizer(&s)?;
        Ok(s)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut best_state = mix(1.0, &base)?;
    if !best_state.scnr_ok() {
        return Err(IsacError::ScnrInfeasible {
            best: best_state.scnr(),
            required: gamma,
        });
    }
    let first = mix(0.0, &base)?;
    if first.scnr_ok() {
        return Ok(first);
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let s = mix(mid, &base)?;
        if s.scnr_ok() {
            hi = mid;
            best_state = s;
        } else {
            lo = mid;
        }
    }
    Ok(best_state)
}
