//! Random instances shared by the integration tests.
#![allow(dead_code)]

use isac_core::ao::AoState;
use isac_core::experiments::trial_channels;
use isac_core::metrics::IsacDesign;
use isac_core::numerics::Qcqp1Problem;
use isac_core::scenario::ScenarioConfig;
use isac_core::sust::SustScenario;
use isac_core::{CMat, CVec, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cgauss(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
}

pub fn random_phases(m: usize, rng: &mut ChaCha8Rng) -> CVec {
    CVec::from_fn(m, |_, _| C64::from_polar(1.0, rng.random::<f64>() * TAU))
}

pub fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> CVec {
    CVec::from_fn(n, |_, _| cgauss(rng))
}

pub fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    let a = CMat::from_fn(n, n, |_, _| cgauss(rng));
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

pub fn random_psd(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    let a = CMat::from_fn(n, n, |_, _| cgauss(rng));
    &a * a.adjoint() + CMat::identity(n, n) * C64::new(0.05, 0.0)
}

/// Desk-scale state with random phases, beamformers at full power and the
/// SCNR-optimal equalizer; auxiliaries refreshed.
pub fn random_state(seed: u64, gamma: Option<f64>) -> AoState {
    let cfg = ScenarioConfig::desk();
    let (_, ch) = trial_channels(&cfg, seed, 0).unwrap();
    let mut r = rng(seed ^ 0xA5A5);
    let mut w: Vec<CVec> = (0..cfg.k_users).map(|_| random_vec(cfg.n_tx, &mut r)).collect();
    let p: f64 = w.iter().map(|v| v.norm_squared()).sum();
    let s = C64::new((cfg.p_bs_watt() / p).sqrt(), 0.0);
    w.iter_mut().for_each(|v| *v *= s);
    let design = IsacDesign {
        w,
        theta: random_phases(cfg.m_ris(), &mut r),
        offsets: ch.offsets.clone(),
        u: random_vec(cfg.n_rx, &mut r),
        r0: None,
    };
    let mut st = AoState::new(ch, design, gamma).unwrap();
    st.design.u = isac_core::ao::update_equalizer(&st).unwrap();
    st.refresh_aux();
    st
}

pub fn random_sust(seed: u64) -> SustScenario {
    let mut r = rng(seed);
    SustScenario {
        n_tx: r.random_range(2..=8),
        n_rx: r.random_range(1..=4),
        m_ris: r.random_range(4..=64),
        p_bs: 10f64.powf(r.random_range(-1.0..1.5)),
        sigma_r2: 10f64.powf(r.random_range(-13.0..-9.0)),
        beta_t: 10f64.powf(r.random_range(-7.0..-5.0)),
        beta_c: 10f64.powf(r.random_range(-7.0..-5.0)),
        p_tar: C64::from_polar(10f64.powf(r.random_range(-3.0..-1.0)), r.random::<f64>() * TAU),
        delta_d: r.random_range(1.0..30.0),
        delta_f_max: r.random_range(0.5e6..10e6),
    }
}

/// Small QCQP with positive definite objective and indefinite constraint,
/// feasible at `x = 0` when `r <= 0`.
pub fn random_qcqp(seed: u64) -> Qcqp1Problem {
    let mut r = rng(seed);
    let n = r.random_range(2..=5);
    Qcqp1Problem {
        a_mat: random_psd(n, &mut r),
        b_vec: random_vec(n, &mut r) * C64::new(3.0, 0.0),
        p_mat: random_hermitian(n, &mut r),
        r_const: -r.random_range(0.05..1.0),
    }
}

/// Best feasible objective over `x(μ) = (A + μP)^{-1} b` on a dense grid of
/// `μ`, with each feasibility change between neighbours refined by bisection.
pub fn qcqp_grid_best(p: &Qcqp1Problem) -> f64 {
    let n = p.b_vec.len();
    let eval = |mu: f64| -> Option<(bool, f64)> {
        let m = &p.a_mat + &p.p_mat * C64::new(mu, 0.0);
        let x = m.cholesky()?.solve(&p.b_vec);
        Some((p.constraint(&x) <= 0.0, p.objective(&x)))
    };
    let mut best = f64::INFINITY;
    if p.constraint(&CVec::zeros(n)) <= 0.0 {
        best = 0.0;
    }
    let mus: Vec<f64> = std::iter::once(0.0)
        .chain((0..20_000).map(|i| 1e-4 * 1.0009f64.powi(i)))
        .collect();
    let mut prev: Option<(f64, bool)> = None;
    for &mu in &mus {
        let Some((ok, f)) = eval(mu) else {
            prev = None;
            continue;
        };
        if ok {
            best = best.min(f);
        }
        if let Some((m0, ok0)) = prev {
            if ok0 != ok {
                let (mut lo, mut hi) = (m0, mu);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    match eval(mid) {
                        Some((ok_mid, f_mid)) => {
                            if ok_mid {
                                best = best.min(f_mid);
                            }
                            if ok_mid == ok0 {
                                lo = mid;
                            } else {
                                hi = mid;
                            }
                        }
                        None => break,
                    }
                }
            }
        }
        prev = Some((mu, ok));
    }
    best
}
