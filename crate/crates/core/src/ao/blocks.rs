//! Closed-form beamformer and equalizer updates.

use super::AoState;
use crate::error::{IsacError, Result};
use crate::numerics::{generalized_max_eigvec, solve_qcqp1, Qcqp1Problem};
use crate::{CMat, CVec, C64};

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `Σ_c β_c H_c^H u u^H H_c` over the clutter echoes.
fn clutter_gram(state: &AoState, u: &CVec) -> CMat {
    let n = state.channels.n_tx();
    let beta_c = state.cfg().beta_clutter;
    state
        .cascaded
        .h_bc
        .iter()
        .fold(CMat::zeros(n, n), |acc, h| {
            let g = h.adjoint() * u;
            acc + &g * g.adjoint() * c(beta_c)
        })
}

/// Per-beamformer SCNR constraint matrix in homogeneous form:
/// `w^H P w <= 0` summed over users is equivalent to SCNR `>= gamma` at any power.
pub(crate) fn scnr_constraint_block(state: &AoState, u: &CVec, gamma: f64) -> CMat {
    let cfg = state.cfg();
    let n = state.channels.n_tx();
    let g = state.cascaded.h_bt.adjoint() * u;
    let noise = u.norm_squared() * cfg.noise_radar_watt() / cfg.p_bs_watt();
    (clutter_gram(state, u) + CMat::identity(n, n) * c(noise)) * c(gamma)
        - &g * g.adjoint() * c(cfg.beta_target)
}

/// Beamformers maximizing the homogenized FP objective for fixed auxiliaries,
/// subject to the SCNR threshold, rescaled to the full power budget.
pub fn update_beamformers(state: &AoState, qcqp_tol: f64) -> Result<Vec<CVec>> {
    let n = state.channels.n_tx();
    let k_users = state.channels.k();
    let p_bs = state.cfg().p_bs_watt();
    let aux = &state.aux;

    let mut q = CMat::zeros(n, n);
    for (k, h) in state.cascaded.h_tilde.iter().enumerate() {
        let a2 = aux.alpha[k].norm_sqr();
        q += (h * h.adjoint() + CMat::identity(n, n) * c(state.noises[k] / p_bs)) * c(a2);
    }
    let dim = n * k_users;
    let mut a_mat = CMat::zeros(dim, dim);
    let mut p_mat = CMat::zeros(dim, dim);
    let mut b_vec = CVec::zeros(dim);
    let p_block = match state.gamma_t {
        Some(gamma) => scnr_constraint_block(state, &state.design.u, gamma),
        None => CMat::zeros(n, n),
    };
    for k in 0..k_users {
        let r = k * n;
        a_mat.view_mut((r, r), (n, n)).copy_from(&q);
        p_mat.view_mut((r, r), (n, n)).copy_from(&p_block);
        let coef = aux.alpha[k] * (1.0 + aux.wbar[k]).sqrt();
        b_vec.rows_mut(r, n).copy_from(&(&state.cascaded.h_tilde[k] * coef));
    }
    let r_const = if state.gamma_t.is_some() { 0.0 } else { -1.0 };
    let prob = Qcqp1Problem {
        a_mat,
        b_vec,
        p_mat,
        r_const,
    };
    let sol = solve_qcqp1(&prob, qcqp_tol, 1.0).map_err(|e| match e {
        IsacError::Infeasible(_) => IsacError::ScnrInfeasible {
            best: state.scnr(),
            required: state.gamma_t.unwrap_or(0.0),
        },
        other => other,
    })?;
    let power = sol.x.norm_squared();
    if !(power > 0.0) || !power.is_finite() {
        return Err(IsacError::IllConditioned("beamformer update returned zero".into()));
    }
    let scale = c((p_bs / power).sqrt());
    Ok((0..k_users)
        .map(|k| sol.x.rows(k * n, n).into_owned() * scale)
        .collect())
}

/// Receive equalizer maximizing the SCNR for the current beamformers.
pub fn update_equalizer(state: &AoState) -> Result<CVec> {
    let cfg = state.cfg();
    let nr = state.channels.n_rx();
    let gram = |h: &CMat| {
        state.design.w.iter().fold(CMat::zeros(nr, nr), |acc, w| {
            let e = h * w;
            acc + &e * e.adjoint()
        })
    };
    let signal = gram(&state.cascaded.h_bt) * c(cfg.beta_target);
    let clutter = state
        .cascaded
        .h_bc
        .iter()
        .fold(CMat::identity(nr, nr) * c(cfg.noise_radar_watt()), |acc, h| {
            acc + gram(h) * c(cfg.beta_clutter)
        });
    generalized_max_eigvec(&signal, &clutter)
}

/// Beamformer direction maximizing the SCNR for the current equalizer, at full power.
pub fn scnr_optimal_beam(state: &AoState) -> Result<CVec> {
    let cfg = state.cfg();
    let n = state.channels.n_tx();
    let u = &state.design.u;
    let g = state.cascaded.h_bt.adjoint() * u;
    let signal = &g * g.adjoint() * c(cfg.beta_target);
    let noise = u.norm_squared() * cfg.noise_radar_watt() / cfg.p_bs_watt();
    let clutter = clutter_gram(state, u) + CMat::identity(n, n) * c(noise);
    let v = generalized_max_eigvec(&signal, &clutter)?;
    Ok(v * c(cfg.p_bs_watt().sqrt()))
}
