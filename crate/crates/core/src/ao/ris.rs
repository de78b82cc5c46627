//! RIS phase update.
//!
//! For fixed beamformers, auxiliaries and equalizer, the FP objective is a
//! quadratic in `θ`, while the target echo power is the quartic
//! `(θ^H T1 θ)(θ^H T2 θ)` (and likewise per clutter). The quartic is convex as
//! a function of `X = θθ^H`, so its tangent at `θ_t` is a global lower bound,
//! and adding `λ_max(T1) λ_max(T2) ‖X − X_t‖²` yields an upper bound on the
//! unit-modulus set. Replacing the target quartic by its lower bound and the
//! clutter quartics by their upper bounds gives a single quadratic
//! constraint, tight at `θ_t`, handled by symmetric ADMM with a
//! unit-modulus copy `φ`.

use super::blocks::update_equalizer;
use super::{AoState, SolverOptions, SCNR_SLACK};
use crate::error::Result;
use crate::numerics::{hermitian_eigen, Qcqp1Pencil};
use crate::{CMat, CVec, C64};

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Matrices of the RIS subproblem.
#[derive(Debug, Clone)]
pub struct RisSubproblem {
    /// Per user, `M × N_t` with `θ^T G_k w = h_tilde_k^H w`.
    pub g_bu: Vec<CMat>,
    /// Transmit side of the target echo, `M × N_t`.
    pub g_t: CMat,
    /// Transmit side of each clutter echo.
    pub g_c: Vec<CMat>,
    /// Target receive-side quadratic, rank one.
    pub t1: CMat,
    /// Target transmit-side quadratic.
    pub t2: CMat,
    pub r1: Vec<CMat>,
    pub r2: Vec<CMat>,
}

/// Value of `(θ^H A θ)(θ^H B θ)`.
pub fn quartic(a: &CMat, b: &CMat, theta: &CVec) -> f64 {
    theta.dotc(&(a * theta)).re * theta.dotc(&(b * theta)).re
}

/// Tangent lower bound of the quartic at `theta_t`, evaluated at `theta`.
pub fn quartic_lower_bound(a: &CMat, b: &CMat, theta_t: &CVec, theta: &CVec) -> f64 {
    let (m, _) = tangent(a, b, theta_t);
    theta.dotc(&(&m * theta)).re - quartic(a, b, theta_t)
}

/// Upper bound of the quartic at `theta_t`, valid for unit-modulus `theta`.
pub fn quartic_upper_bound(a: &CMat, b: &CMat, theta_t: &CVec, theta: &CVec) -> f64 {
    let (m, lam) = tangent(a, b, theta_t);
    let mm = theta_t.len() as f64;
    let t = theta.dotc(theta_t).norm_sqr();
    theta.dotc(&(&m * theta)).re - 2.0 * lam * t + 2.0 * mm * mm * lam - quartic(a, b, theta_t)
}

/// `(A θ_t θ_t^H B + B θ_t θ_t^H A, λ_max(A) λ_max(B))`.
fn tangent(a: &CMat, b: &CMat, theta_t: &CVec) -> (CMat, f64) {
    let at = a * theta_t;
    let bt = b * theta_t;
    let m = &at * bt.adjoint() + &bt * at.adjoint();
    let la = *hermitian_eigen(a).0.last().unwrap_or(&0.0);
    let lb = *hermitian_eigen(b).0.last().unwrap_or(&0.0);
    (m, la.max(0.0) * lb.max(0.0))
}

pub fn build_ris_subproblem(state: &AoState) -> RisSubproblem {
    let ch = &state.channels;
    let cfg = state.cfg();
    let (m, n_tx) = (ch.m(), ch.n_tx());
    let dfs = ch.offsets.as_slice();
    let g_bu = ch
        .users
        .iter()
        .map(|u| {
            CMat::from_fn(m, n_tx, |i, n| u.h[n][i].conj() * ch.h_br[(i, n)])
        })
        .collect();
    // Receive-side offset phases are moved onto the transmit side.
    let tx_side = |a_t: &[CVec], rate: f64| {
        CMat::from_fn(m, n_tx, |i, n| {
            a_t[n][i].conj() * ch.h_br[(i, n)] * C64::from_polar(1.0, -0.5 * rate * dfs[n])
        })
    };
    let rx_side = |a_r0: &CVec, beta: f64| {
        let ur = ch.h_rb0.transpose() * state.design.u.map(|z| z.conj());
        let x1 = ur.component_mul(a_r0);
        x1.map(|z| z.conj()) * x1.transpose() * c(beta)
    };
    let tx_gram = |g: &CMat| {
        state.design.w.iter().fold(CMat::zeros(m, m), |acc, w| {
            let v = g * w;
            acc + v.map(|z| z.conj()) * v.transpose()
        })
    };
    let g_t = tx_side(&ch.radar.a_tar_t, ch.rates.target);
    let g_c: Vec<CMat> = ch
        .radar
        .a_clu_t
        .iter()
        .zip(&ch.rates.clutter)
        .map(|(a, r)| tx_side(a, *r))
        .collect();
    RisSubproblem {
        t1: rx_side(&ch.radar0.a_tar_r[0], cfg.beta_target),
        t2: tx_gram(&g_t),
        r1: ch
            .radar0
            .a_clu_r
            .iter()
            .map(|a| rx_side(&a[0], cfg.beta_clutter))
            .collect(),
        r2: g_c.iter().map(tx_gram).collect(),
        g_bu,
        g_t,
        g_c,
    }
}

impl RisSubproblem {
    /// `(A, b)` with the FP objective equal to `−(θ^H A θ − 2 Re{b^H θ})` up to a constant.
    pub fn objective(&self, state: &AoState) -> (CMat, CVec) {
        let m = self.g_t.nrows();
        let mut a = CMat::zeros(m, m);
        let mut b = CVec::zeros(m);
        for (k, g) in self.g_bu.iter().enumerate() {
            let alpha = state.aux.alpha[k];
            for (j, w) in state.design.w.iter().enumerate() {
                let v = g * w;
                a += v.map(|z| z.conj()) * v.transpose() * c(alpha.norm_sqr());
                if j == k {
                    b += v.map(|z| z.conj()) * (alpha * (1.0 + state.aux.wbar[k]).sqrt());
                }
            }
        }
        (a, b)
    }

    /// Quadratic constraint `θ^H P θ + r <= 0` implying SCNR `>= gamma` on the
    /// unit-modulus set, tight at `theta_t`.
    pub fn surrogate_constraint(&self, theta_t: &CVec, gamma: f64, noise_term: f64) -> (CMat, f64) {
        let mm = theta_t.len() as f64;
        let (tm, _) = tangent(&self.t1, &self.t2, theta_t);
        let mut p = -tm;
        let mut r = quartic(&self.t1, &self.t2, theta_t) + gamma * noise_term;
        let outer = theta_t * theta_t.adjoint();
        for (r1, r2) in self.r1.iter().zip(&self.r2) {
            let (cm, lam) = tangent(r1, r2, theta_t);
            p += (cm - &outer * c(2.0 * lam)) * c(gamma);
            r += gamma * (2.0 * mm * mm * lam - quartic(r1, r2, theta_t));
        }
        (p, r)
    }
}

fn fp_part(a: &CMat, b: &CVec, theta: &CVec) -> f64 {
    theta.dotc(&(a * theta)).re - 2.0 * b.dotc(theta).re
}

fn project(v: &CVec) -> CVec {
    v.map(|z| {
        if z.norm() > 0.0 {
            z / z.norm()
        } else {
            C64::new(1.0, 0.0)
        }
    })
}

/// Outcome of one RIS block update.
#[derive(Debug, Clone)]
pub struct RisUpdate {
    /// New phases and the matching SCNR-optimal equalizer, if any step was accepted.
    pub accepted: Option<(CVec, CVec)>,
    /// `‖θ − φ‖` at the end of the last ADMM run.
    pub residual: f64,
}

/// Majorization steps, each solved by symmetric ADMM. A step is accepted only
/// if its unit-modulus output lowers the negated FP objective and meets the
/// SCNR threshold with the re-optimized equalizer.
pub fn update_ris_sadmm(state: &AoState, opts: &SolverOptions) -> Result<RisUpdate> {
    let so = &opts.sadmm;
    let mu = so.mu_pen;
    let m = state.channels.m();
    let mut cur = state.clone();
    let mut out = RisUpdate {
        accepted: None,
        residual: 0.0,
    };
    for _ in 0..opts.ris_mm_steps.max(1) {
        let sub = build_ris_subproblem(&cur);
        let (a, b) = sub.objective(&cur);
        let theta_t = cur.design.theta.clone();
        let f_t = fp_part(&a, &b, &theta_t);
        let (p, r) = match cur.gamma_t {
            Some(g) => {
                let cfg = cur.cfg();
                let noise = cur.design.u.norm_squared() * cfg.noise_radar_watt();
                sub.surrogate_constraint(&theta_t, g, noise)
            }
            None => (CMat::zeros(m, m), -1.0),
        };
        let a_pen = &a + CMat::identity(m, m) * c(0.5 * mu);
        let Ok(pencil) = Qcqp1Pencil::new(&a_pen, &p, r) else {
            break;
        };
        let mut theta = theta_t.clone();
        let mut phi = theta_t.clone();
        let mut rho = CVec::zeros(m);
        let mut failed = false;
        for _ in 0..so.max_iters {
            phi = project(&(&theta + &rho * c(1.0 / mu)));
            rho += (&theta - &phi) * c(so.r1 * mu);
            let rhs = &b + &phi * c(0.5 * mu) - &rho * c(0.5);
            match pencil.solve(&rhs, opts.qcqp_tol, 1.0) {
                Ok(sol) => theta = sol.x,
                Err(_) => {
                    failed = true;
                    break;
                }
            }
            rho += (&theta - &phi) * c(so.r2 * mu);
            out.residual = (&theta - &phi).norm();
            if out.residual <= so.primal_tol {
                break;
            }
        }
        if failed {
            break;
        }
        let mut best: Option<(f64, AoState)> = None;
        for cand in [project(&theta), phi] {
            let f = fp_part(&a, &b, &cand);
            if f > f_t {
                continue;
            }
            let mut s = cur.clone();
            if s.set_theta(cand).is_err() {
                continue;
            }
            if let Ok(u) = update_equalizer(&s) {
                s.design.u = u;
            }
            let ok = match s.gamma_t {
                Some(g) => s.scnr() >= g * (1.0 - SCNR_SLACK),
                None => true,
            };
            if ok && best.as_ref().is_none_or(|(bf, _)| f < *bf) {
                best = Some((f, s));
            }
        }
        let Some((f_new, s)) = best else { break };
        out.accepted = Some((s.design.theta.clone(), s.design.u.clone()));
        cur = s;
        if f_t - f_new <= 1e-12 * f_t.abs().max(1.0) {
            break;
        }
    }
    Ok(out)
}
