//! SCNR-only optimization, used by the radar-centric baseline and to find a
//! start that meets the SCNR threshold.
//!
//! With the threshold set to the current SCNR, the quadratic surrogate of the
//! RIS constraint is tight at the current phases, so any phases that lower
//! `θ^H P θ` raise the SCNR. The same holds for the offset series.

use super::blocks::{scnr_optimal_beam, update_equalizer};
use super::offsets::{sca_step, scnr_series};
use super::ris::build_ris_subproblem;
use super::{AoState, SolverOptions};
use crate::channels::FrequencyOffsets;
use crate::error::Result;
use crate::numerics::hermitian_eigen;
use crate::{CMat, CVec, C64};

/// Unit-modulus MM ascent of `θ^H Z θ`: `θ ← exp(j∠((Z + cI) θ))` with
/// `Z + cI` positive semidefinite, so the quadratic never decreases.
pub fn ris_phase_alignment(z: &CMat, theta0: &CVec, steps: usize) -> CVec {
    let shift = (-hermitian_eigen(z).0.first().copied().unwrap_or(0.0)).max(0.0);
    let zs = z + CMat::identity(z.nrows(), z.ncols()) * C64::new(shift, 0.0);
    let mut theta = theta0.clone();
    for _ in 0..steps {
        let v = &zs * &theta;
        let next = v.zip_map(&theta, |a, t| if a.norm() > 0.0 { a / a.norm() } else { t });
        if (&next - &theta).norm() <= 1e-14 * (theta.len() as f64).sqrt() {
            break;
        }
        theta = next;
    }
    theta
}

/// Alternates equalizer, common beam, RIS phases and (optionally) offsets to
/// raise the SCNR. Leaves the best state found in `state` and returns its SCNR.
pub fn maximize_scnr(
    state: &mut AoState,
    iters: usize,
    optimize_offsets: bool,
    opts: &SolverOptions,
) -> Result<f64> {
    maximize_scnr_counted(state, iters, optimize_offsets, opts).map(|(s, _)| s)
}

/// [`maximize_scnr`] that also reports the iterations used.
pub(crate) fn maximize_scnr_counted(
    state: &mut AoState,
    iters: usize,
    optimize_offsets: bool,
    opts: &SolverOptions,
) -> Result<(f64, usize)> {
    let k = state.channels.k() as f64;
    let f_max = state.cfg().f_max;
    let mut cur = state.clone();
    let mut best = (state.scnr(), state.clone());
    let mut used = 0;
    for _ in 0..iters.max(1) {
        used += 1;
        if let Ok(u) = update_equalizer(&cur) {
            cur.design.u = u;
        }
        let beam = scnr_optimal_beam(&cur)? * C64::new(k.sqrt().recip(), 0.0);
        cur.design.w = vec![beam; cur.channels.k()];
        if let Ok(u) = update_equalizer(&cur) {
            cur.design.u = u;
        }

        let gamma = cur.scnr();
        let sub = build_ris_subproblem(&cur);
        let noise = cur.design.u.norm_squared() * cur.cfg().noise_radar_watt();
        let (p, _) = sub.surrogate_constraint(&cur.design.theta, gamma, noise);
        let theta = ris_phase_alignment(&-p, &cur.design.theta, opts.ris_mm_steps.max(1) * 10);
        let mut cand = cur.clone();
        cand.set_theta(theta)?;
        if cand.scnr() >= cur.scnr() {
            cur = cand;
        }

        if optimize_offsets {
            for n in 0..cur.channels.n_tx() {
                let gamma = cur.scnr();
                let series = scnr_series(&cur, n, gamma);
                let x0 = cur.design.offsets.as_slice()[n];
                let y = sca_step(&series, None, x0, f_max, opts.sca.inner_steps);
                if y != 0.0 {
                    let mut v = cur.design.offsets.as_slice().to_vec();
                    v[n] = (x0 + y).clamp(0.0, f_max);
                    let mut cand = cur.clone();
                    cand.set_offsets(FrequencyOffsets::new(v, f_max)?)?;
                    if cand.scnr() >= cur.scnr() {
                        cur = cand;
                    }
                }
            }
        }

        let s = cur.scnr();
        if s > best.0 {
            best = (s, cur.clone());
        } else if s <= best.0 * (1.0 + 1e-9) && s >= best.0 * (1.0 - 1e-9) {
            break;
        }
    }
    *state = best.1;
    state.refresh_aux();
    Ok((best.0, used))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ao::initial_state;
    use crate::channels::ChannelSet;
    use crate::scenario::{sample_scenario, ScenarioConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn alignment_never_lowers_quadratic() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        use rand::Rng;
        let a = CMat::from_fn(5, 5, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let z = &a + a.adjoint() - CMat::identity(5, 5) * C64::new(2.0, 0.0);
        let t0 = CVec::from_element(5, C64::new(1.0, 0.0));
        let q = |t: &CVec| t.dotc(&(&z * t)).re;
        let t1 = ris_phase_alignment(&z, &t0, 50);
        assert!(q(&t1) >= q(&t0) - 1e-12);
        assert!(t1.iter().all(|x| (x.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn scnr_search_improves_on_start() {
        let cfg = ScenarioConfig::desk();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let geom = sample_scenario(&cfg, &mut rng);
        let ch = ChannelSet::sample(&geom, &cfg, FrequencyOffsets::uniform(cfg.n_tx, cfg.f_max), &mut rng)
            .unwrap();
        let mut st = initial_state(&ch, None).unwrap();
        let start = st.scnr();
        let best = maximize_scnr(&mut st, 5, true, &SolverOptions::default()).unwrap();
        assert!(best >= start);
        assert!((st.scnr() - best).abs() <= 1e-12 * best);
    }
}
