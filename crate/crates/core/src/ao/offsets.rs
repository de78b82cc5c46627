//! Frequency-offset update by successive convex approximation.
//!
//! Moving one offset by `y` rotates column `n` of every cascaded channel by a
//! unit phasor whose rate depends only on the path length. The negated FP
//! objective and the SCNR constraint are therefore constants plus cosine terms
//! in `y`, each majorized by a quadratic at `y = 0`. The resulting scalar
//! problem over the admissible interval is solved exactly, and a step is kept
//! only if the exact series decreases and stays feasible.

use super::{AoState, SolverOptions};
use crate::channels::FrequencyOffsets;
use crate::error::Result;
use crate::numerics::{min_quadratic_on_constrained_interval, CosineSeries, Quadratic};
use crate::{CMat, CVec, C64};

/// One-dimensional model of the offset block for a single transmit slice,
/// as a function of the shift `y` (Hz) from the current offset.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetSeries {
    /// Negated FP objective up to a constant.
    pub objective: CosineSeries,
    /// `γ (clutter + noise) − signal`; `None` when the threshold is off.
    pub constraint: Option<CosineSeries>,
}

/// `(R, Z)` with `u^H H w = R + Z e^{-j·rate·y}` when column `n` of `h` rotates.
fn split_echo(h: &CMat, u: &CVec, w: &CVec, n: usize) -> (C64, C64) {
    let g = h.adjoint() * u;
    let total = g.dotc(w);
    let z = g[n].conj() * w[n];
    (total - z, z)
}

/// SCNR constraint series `γ (Σ_c β_c Σ_k |·|² + ‖u‖² σ²) − β_T Σ_k |·|²`.
pub fn scnr_series(state: &AoState, n: usize, gamma: f64) -> CosineSeries {
    let cfg = state.cfg();
    let u = &state.design.u;
    let rates = &state.channels.rates;
    let mut s = CosineSeries {
        constant: gamma * u.norm_squared() * cfg.noise_radar_watt(),
        terms: Vec::new(),
    };
    for w in &state.design.w {
        let (r, z) = split_echo(&state.cascaded.h_bt, u, w, n);
        s.add_abs_sq(&[(r, 0.0), (z, rates.target)], -cfg.beta_target);
        for (h, rate) in state.cascaded.h_bc.iter().zip(&rates.clutter) {
            let (r, z) = split_echo(h, u, w, n);
            s.add_abs_sq(&[(r, 0.0), (z, *rate)], gamma * cfg.beta_clutter);
        }
    }
    s
}

/// Builds the model of slice `n` for the current state and auxiliaries.
pub fn offset_series(state: &AoState, n: usize) -> OffsetSeries {
    let ch = &state.channels;
    let theta = &state.design.theta;
    let refl = ch.h_br.column(n).component_mul(theta);
    let mut obj = CosineSeries::default();
    for (k, user) in ch.users.iter().enumerate() {
        let (a_los, a_nlos) = user.weights(ch.cfg.rician_kappa);
        let los = user.los[n].dotc(&refl) * a_los;
        let nlos = user.nlos[n].dotc(&refl) * a_nlos;
        let alpha = state.aux.alpha[k];
        let h = &state.cascaded.h_tilde[k];
        for (j, w) in state.design.w.iter().enumerate() {
            let total = h.dotc(w);
            let (a, b) = (los * w[n], nlos * w[n]);
            let parts = [
                (total - a - b, 0.0),
                (a, ch.rates.user_los[k]),
                (b, ch.rates.user_nlos),
            ];
            obj.add_abs_sq(&parts, alpha.norm_sqr());
            if j == k {
                let scale = -2.0 * (1.0 + state.aux.wbar[k]).sqrt();
                for (p, eta) in parts {
                    obj.add_re_exp(alpha.conj() * p, eta, scale);
                }
            }
        }
    }
    OffsetSeries {
        objective: obj,
        constraint: state.gamma_t.map(|g| scnr_series(state, n, g)),
    }
}

/// Minimizes `objective` over the shift of one slice subject to `constraint`
/// and the offset range, by up to `steps` majorize-minimize rounds, each
/// tangent at the previous shift. Returns 0 if no step is verified.
pub(crate) fn sca_step(
    objective: &CosineSeries,
    constraint: Option<&CosineSeries>,
    x0: f64,
    f_max: f64,
    steps: usize,
) -> f64 {
    let mut y = 0.0;
    for _ in 0..steps.max(1) {
        let (a, b, c) = objective.majorize(y);
        let cons = constraint.map_or(Quadratic::new(0.0, 0.0, -1.0), |g| {
            let (a, b, c) = g.majorize(y);
            Quadratic::new(a, b, c)
        });
        let next = min_quadratic_on_constrained_interval(
            Quadratic::new(a, b, c),
            cons,
            -x0,
            f_max - x0,
            y,
        );
        if next == y || objective.value(next) >= objective.value(y) {
            break;
        }
        if let Some(g) = constraint {
            // Tolerate a start that is infeasible only by rounding, but never worsen it.
            if g.value(next) > g.value(y).max(0.0) {
                break;
            }
        }
        y = next;
    }
    y
}

/// Cyclic SCA sweeps over all offsets with the auxiliaries held fixed.
pub fn update_offsets_sca(state: &AoState, opts: &SolverOptions) -> Result<FrequencyOffsets> {
    let f_max = state.cfg().f_max;
    let mut cur = state.clone();
    for _ in 0..opts.sca.max_passes {
        let mut moved = false;
        for n in 0..cur.channels.n_tx() {
            let s = offset_series(&cur, n);
            let x0 = cur.design.offsets.as_slice()[n];
            let y = sca_step(&s.objective, s.constraint.as_ref(), x0, f_max, opts.sca.inner_steps);
            if y != 0.0 {
                let mut v = cur.design.offsets.as_slice().to_vec();
                v[n] = (x0 + y).clamp(0.0, f_max);
                cur.set_offsets(FrequencyOffsets::new(v, f_max)?)?;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    Ok(cur.design.offsets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ao::initial_state;
    use crate::channels::ChannelSet;
    use crate::scenario::{sample_scenario, ScenarioConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn state(seed: u64) -> AoState {
        let cfg = ScenarioConfig::desk();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let geom = sample_scenario(&cfg, &mut rng);
        let offs = FrequencyOffsets::uniform(cfg.n_tx, cfg.f_max);
        let ch = ChannelSet::sample(&geom, &cfg, offs, &mut rng).unwrap();
        initial_state(&ch, Some(1e-3)).unwrap()
    }

    #[test]
    fn series_match_direct_evaluation() {
        let st = state(3);
        let n = 1;
        let s = offset_series(&st, n);
        let g = s.constraint.as_ref().unwrap();
        let base_obj = -st.fp_objective();
        let (sig, den) = crate::metrics::scnr_parts(
            &st.design.w,
            &st.design.u,
            None,
            &st.cascaded,
            st.cfg(),
        )
        .unwrap();
        let gamma = st.gamma_t.unwrap();
        let base_con = gamma * den - sig;
        assert!((g.value(0.0) - base_con).abs() <= 1e-9 * base_con.abs().max(sig));
        for y in [-1.3e6, 0.4e6, 2.1e6] {
            let mut v = st.design.offsets.as_slice().to_vec();
            v[n] += y;
            let mut moved = st.clone();
            moved.set_offsets(FrequencyOffsets::new(v, 1e12).unwrap()).unwrap();
            let obj = -moved.fp_objective();
            let d_series = s.objective.value(y) - s.objective.value(0.0);
            assert!(((obj - base_obj) - d_series).abs() <= 1e-9 * base_obj.abs().max(1.0));
            let (sig, den) = crate::metrics::scnr_parts(
                &moved.design.w,
                &moved.design.u,
                None,
                &moved.cascaded,
                moved.cfg(),
            )
            .unwrap();
            let con = gamma * den - sig;
            assert!((g.value(y) - con).abs() <= 1e-9 * con.abs().max(sig));
        }
    }

    #[test]
    fn sca_keeps_offsets_in_range_and_does_not_lower_rate() {
        let st = state(5);
        let opts = SolverOptions::default();
        let offs = update_offsets_sca(&st, &opts).unwrap();
        assert!(offs.as_slice().iter().all(|f| (0.0..=st.cfg().f_max).contains(f)));
        let mut moved = st.clone();
        moved.set_offsets(offs).unwrap();
        assert!(moved.sum_rate() >= st.sum_rate() * (1.0 - 1e-12));
        assert!(moved.scnr_ok() || !st.scnr_ok());
    }
}
