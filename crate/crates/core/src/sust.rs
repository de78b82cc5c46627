//! Single-user single-target analysis.
//!
//! One user doubles as the radar target, and one clutter sits in the same
//! direction at range offset `ΔD`. With a uniform offset ramp `n·Δf` the
//! optimal SCNR has a closed form in which the only `Δf` dependence is the
//! squared Dirichlet kernel `sin²(N_t x) / sin²(x)`, `x = 2πΔfΔD/c`.

use crate::channels::{los_vector, phasor_cycles, receive_vector, ris_array_offset};
use crate::error::{IsacError, Result};
use crate::metrics::scnr_parts;
use crate::numerics::generalized_max_eigvec;
use crate::scenario::{path_loss, Geometry, PathGeometry, ScenarioConfig, SPEED_OF_LIGHT};
use crate::{CMat, CVec, C64};
use std::f64::consts::PI;

/// Parameters of the single-user single-target problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SustScenario {
    pub n_tx: usize,
    pub n_rx: usize,
    pub m_ris: usize,
    /// Transmit power budget (W).
    pub p_bs: f64,
    /// Radar receiver noise power (W).
    pub sigma_r2: f64,
    pub beta_t: f64,
    pub beta_c: f64,
    /// Two-way RIS reflection gain of the target path at the reference frequency.
    pub p_tar: C64,
    /// Range separation between target and clutter (m).
    pub delta_d: f64,
    /// Cap on the frequency increment (Hz).
    pub delta_f_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SustResult {
    /// Optimal SCNR with the optimal increment.
    pub gamma_fda: f64,
    /// Optimal SCNR with all offsets zero.
    pub gamma_pa: f64,
    pub delta_gamma_max: f64,
    pub delta_f_opt: f64,
    /// Smallest positive zero of the kernel.
    pub delta_f_zero: f64,
}

impl SustScenario {
    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.n_rx == 0 || self.m_ris == 0 {
            return Err(IsacError::Domain("counts must be positive".into()));
        }
        if !(self.delta_d > 0.0) || !(self.p_bs > 0.0) || !(self.p_tar.norm() > 0.0) {
            return Err(IsacError::Domain(
                "delta_d, p_bs and |p_tar| must be positive".into(),
            ));
        }
        if !(self.sigma_r2 > 0.0) || !(self.beta_t > 0.0) || self.beta_c < 0.0 {
            return Err(IsacError::Domain("invalid noise or gain".into()));
        }
        Ok(())
    }

    /// Builds the scenario from a full configuration: the target comes from
    /// `geom`, the clutter is placed along the target direction at `D_RT + delta_d`.
    ///
    /// Fails when the two reflection gains differ in magnitude by more than 1e-9
    /// relative, which would invalidate the closed forms.
    pub fn from_geometry(
        cfg: &ScenarioConfig,
        geom: &Geometry,
        theta: &CVec,
        delta_d: f64,
        delta_f_max: f64,
    ) -> Result<Self> {
        let beta_br = path_loss(geom.d_bs, cfg.exponent_br, cfg.pathloss_beta0_db)?;
        let clutter = PathGeometry {
            distance: geom.target.distance + delta_d,
            ..geom.target
        };
        let p_tar = reflection_gain(cfg, geom, theta, &geom.target, beta_br);
        let p_clu = reflection_gain(cfg, geom, theta, &clutter, beta_br);
        let rel = (p_clu.norm_sqr() - p_tar.norm_sqr()).abs() / p_tar.norm_sqr();
        if !(rel <= 1e-9) {
            return Err(IsacError::Domain(format!(
                "clutter and target reflection gains differ (relative {rel:e})"
            )));
        }
        let s = SustScenario {
            n_tx: cfg.n_tx,
            n_rx: cfg.n_rx,
            m_ris: cfg.m_ris(),
            p_bs: cfg.p_bs_watt(),
            sigma_r2: cfg.noise_radar_watt(),
            beta_t: cfg.beta_target,
            beta_c: cfg.beta_clutter,
            p_tar,
            delta_d,
            delta_f_max,
        };
        s.validate()?;
        Ok(s)
    }

    /// `β_c N_r |p_tar|²`, the clutter weight shared by all closed forms.
    fn clutter_weight(&self) -> f64 {
        self.beta_c * self.n_rx as f64 * self.p_tar.norm_sqr()
    }
}

/// `β_BR b^H Θ a_r (a_t)^H Θ b` at the reference frequency.
fn reflection_gain(
    cfg: &ScenarioConfig,
    geom: &Geometry,
    theta: &CVec,
    path: &PathGeometry,
    beta_br: f64,
) -> C64 {
    let bs = geom.bs_path();
    let b = CVec::from_fn(cfg.m_ris(), |m, _| {
        phasor_cycles(cfg.f_ref / SPEED_OF_LIGHT * ris_array_offset(m, cfg, &bs))
    });
    let a_t = los_vector(cfg, path, cfg.f_ref);
    let a_r = receive_vector(cfg, path, cfg.f_ref);
    let tb = b.component_mul(theta);
    b.dotc(&a_r.component_mul(theta)) * a_t.dotc(&tb) * beta_br
}

/// `|sin(N x) / sin(x)|²` with `x = 2π Δf ΔD / c`, bounded by `N²`.
pub fn dirichlet_kernel_sq(delta_f: f64, n_tx: usize, delta_d: f64) -> f64 {
    let n = n_tx as f64;
    let x = 2.0 * PI * delta_f * delta_d / SPEED_OF_LIGHT;
    let s = x.sin();
    if s.abs() < 1e-9 {
        // Expansion around the nearest lattice point kπ.
        let eps = x - (x / PI).round() * PI;
        return n * n * (1.0 - (n * n - 1.0) * eps * eps / 3.0);
    }
    let r = (n * x).sin() / s;
    r * r
}

/// Closed-form optimal SCNR at increment `delta_f`.
pub fn closed_form_scnr_fda(s: &SustScenario, delta_f: f64) -> f64 {
    let n = s.n_tx as f64;
    let a = s.clutter_weight();
    let kernel = dirichlet_kernel_sq(delta_f, s.n_tx, s.delta_d);
    let lead = s.beta_t * s.p_tar.norm_sqr() * s.n_rx as f64 * s.p_bs / s.sigma_r2;
    lead * (n - a * s.p_bs * kernel / (s.sigma_r2 + a * s.p_bs * n))
}

/// Closed-form optimal SCNR of the phased array.
pub fn closed_form_scnr_pa(s: &SustScenario) -> f64 {
    let n = s.n_tx as f64;
    let a = s.clutter_weight();
    let lead = s.beta_t * s.p_tar.norm_sqr() * s.n_rx as f64 * s.p_bs / s.sigma_r2;
    lead * (n - a * s.p_bs * n * n / (s.sigma_r2 + a * s.p_bs * n))
}

/// First kernel zero `c / (2 N_t ΔD)`.
pub fn kernel_first_zero(n_tx: usize, delta_d: f64) -> f64 {
    SPEED_OF_LIGHT / (2.0 * n_tx as f64 * delta_d)
}

/// `(Δf_opt, Δf_0)` with `Δf_opt = min(Δf_max, Δf_0)`.
pub fn optimal_increment(s: &SustScenario) -> (f64, f64) {
    let zero = kernel_first_zero(s.n_tx, s.delta_d);
    (s.delta_f_max.min(zero), zero)
}

/// SCNR gain of the optimal increment over the phased array.
pub fn scnr_increment_max(s: &SustScenario) -> f64 {
    let (df, _) = optimal_increment(s);
    let n = s.n_tx as f64;
    let nr = s.n_rx as f64;
    let a = s.clutter_weight();
    let kernel = dirichlet_kernel_sq(df, s.n_tx, s.delta_d);
    let num = s.beta_t * s.beta_c * s.p_tar.norm_sqr().powi(2) * nr * nr * s.p_bs * s.p_bs
        * (n * n - kernel);
    (num / (s.sigma_r2 * (s.sigma_r2 + a * s.p_bs * n))).max(0.0)
}

/// Every closed-form quantity of the scenario.
pub fn evaluate(s: &SustScenario) -> SustResult {
    let (delta_f_opt, delta_f_zero) = optimal_increment(s);
    SustResult {
        gamma_fda: closed_form_scnr_fda(s, delta_f_opt),
        gamma_pa: closed_form_scnr_pa(s),
        delta_gamma_max: scnr_increment_max(s),
        delta_f_opt,
        delta_f_zero,
    }
}

/// SCNR reached by explicit eigen-solutions on synthesized channels.
///
/// The echo channels are assembled as rank-one products of a receive ULA
/// vector and per-slice transmit phase vectors for a concrete geometry, the
/// equalizer and the beamformer are each taken as dominant generalized
/// eigenvectors, and the SCNR is evaluated directly from the matrices.
pub fn oracle_scnr(s: &SustScenario, delta_f: f64) -> Result<f64> {
    s.validate()?;
    const F_REF: f64 = 10e9;
    const D_BR: f64 = 10.0;
    const D_RT: f64 = 20.0;
    const PSI: f64 = 0.3;
    let d_b = 0.5 * SPEED_OF_LIGHT / F_REF;
    let d_rc = D_RT + s.delta_d;
    let bs_phase = |n: usize| F_REF / SPEED_OF_LIGHT * n as f64 * d_b * PSI.sin();
    let tx_vec = |d_x: f64| {
        CVec::from_fn(s.n_tx, |n, _| {
            let f_n = F_REF + n as f64 * delta_f;
            phasor_cycles(-f_n / SPEED_OF_LIGHT * (2.0 * D_BR + 2.0 * d_x) + bs_phase(n))
        })
    };
    let b_bt = tx_vec(D_RT);
    let b_bc = tx_vec(d_rc);
    let b_rb = CVec::from_fn(s.n_rx, |n, _| phasor_cycles(bs_phase(n)));
    // Same direction: the clutter gain differs from the target gain by a phase only.
    let p_clu = s.p_tar * C64::from_polar(1.0, 0.7);
    let h_bt: CMat = &b_rb * b_bt.adjoint() * s.p_tar;
    let h_bc: CMat = &b_rb * b_bc.adjoint() * p_clu;

    let cfg = ScenarioConfig {
        beta_target: s.beta_t,
        beta_clutter: s.beta_c.max(f64::MIN_POSITIVE),
        noise_radar_dbm: crate::scenario::watt_to_dbm(s.sigma_r2),
        ..ScenarioConfig::default()
    };
    let casc = crate::channels::CascadedChannels {
        h_tilde: vec![],
        h_bt: h_bt.clone(),
        h_bc: vec![h_bc.clone()],
    };
    let eye_r = CMat::identity(s.n_rx, s.n_rx);
    let eye_t = CMat::identity(s.n_tx, s.n_tx);
    let c = |x: f64| C64::new(x, 0.0);

    // Equalizer for a probe beamformer; the optimum is probe-independent.
    let probe = &b_bt * c((s.p_bs / s.n_tx as f64).sqrt());
    let gt = &h_bt * &probe;
    let gc = &h_bc * &probe;
    let u = generalized_max_eigvec(
        &(&gt * gt.adjoint() * c(s.beta_t)),
        &(&gc * gc.adjoint() * c(s.beta_c) + &eye_r * c(s.sigma_r2)),
    )?;

    // Beamformer for that equalizer with the power budget active.
    let qt = h_bt.adjoint() * &u;
    let qc = h_bc.adjoint() * &u;
    let w = generalized_max_eigvec(
        &(&qt * qt.adjoint() * c(s.beta_t)),
        &(&qc * qc.adjoint() * c(s.beta_c) + &eye_t * c(u.norm_squared() * s.sigma_r2 / s.p_bs)),
    )?;
    let w = w * c(s.p_bs.sqrt());

    let (sig, den) = if s.beta_c > 0.0 {
        scnr_parts(std::slice::from_ref(&w), &u, None, &casc, &cfg)?
    } else {
        let t = s.beta_t * u.dotc(&(&h_bt * &w)).norm_sqr();
        (t, u.norm_squared() * s.sigma_r2)
    };
    Ok(sig / den)
}
