//! Communication and radar performance metrics of a design point.

use crate::channels::{CascadedChannels, FrequencyOffsets};
use crate::error::{IsacError, Result};
use crate::scenario::ScenarioConfig;
use crate::{CMat, CVec};

/// Complete set of decision variables.
#[derive(Debug, Clone, PartialEq)]
pub struct IsacDesign {
    /// One beamformer of length `N_t` per user.
    pub w: Vec<CVec>,
    /// RIS reflection coefficients, unit modulus.
    pub theta: CVec,
    pub offsets: FrequencyOffsets,
    /// Radar receive equalizer of length `N_r`.
    pub u: CVec,
    /// Optional dedicated radar covariance, `N_t × N_t` PSD.
    pub r0: Option<CMat>,
}

impl IsacDesign {
    /// Total transmit power `Σ‖w_k‖² + tr(R0)`.
    pub fn power(&self) -> f64 {
        let bf: f64 = self.w.iter().map(|w| w.norm_squared()).sum();
        bf + self.r0.as_ref().map_or(0.0, |r| r.trace().re)
    }
}

fn quad_form(r: &CMat, v: &CVec) -> f64 {
    v.dotc(&(r * v)).re
}

/// SINR of user `k`.
pub fn user_sinr(design: &IsacDesign, cascaded: &CascadedChannels, k: usize, noise: f64) -> f64 {
    let h = &cascaded.h_tilde[k];
    let mut signal = 0.0;
    let mut interference = 0.0;
    for (j, w) in design.w.iter().enumerate() {
        let p = h.dotc(w).norm_sqr();
        if j == k {
            signal = p;
        } else {
            interference += p;
        }
    }
    if let Some(r0) = &design.r0 {
        interference += quad_form(r0, h);
    }
    signal / (interference + noise)
}

/// Sum of `log2(1 + SINR_k)` over all users (bit/s/Hz).
pub fn sum_rate(design: &IsacDesign, cascaded: &CascadedChannels, noises: &[f64]) -> f64 {
    noises
        .iter()
        .enumerate()
        .map(|(k, n)| (1.0 + user_sinr(design, cascaded, k, *n)).log2())
        .sum()
}

/// Signal and clutter-plus-noise powers at the radar equalizer output.
pub fn scnr_parts(
    w: &[CVec],
    u: &CVec,
    r0: Option<&CMat>,
    cascaded: &CascadedChannels,
    cfg: &ScenarioConfig,
) -> Result<(f64, f64)> {
    let u_norm2 = u.norm_squared();
    if !(u_norm2 > 0.0) {
        return Err(IsacError::Domain("radar equalizer must be nonzero".into()));
    }
    let echo = |h: &CMat| -> f64 {
        let g = h.adjoint() * u;
        let mut p: f64 = w.iter().map(|wk| g.dotc(wk).norm_sqr()).sum();
        if let Some(r0) = r0 {
            p += quad_form(r0, &g);
        }
        p
    };
    let signal = cfg.beta_target * echo(&cascaded.h_bt);
    let clutter: f64 = cascaded.h_bc.iter().map(|h| cfg.beta_clutter * echo(h)).sum();
    Ok((signal, clutter + u_norm2 * cfg.noise_radar_watt()))
}

/// Radar signal-to-clutter-plus-noise ratio.
pub fn scnr(design: &IsacDesign, cascaded: &CascadedChannels, cfg: &ScenarioConfig) -> Result<f64> {
    let (s, d) = scnr_parts(&design.w, &design.u, design.r0.as_ref(), cascaded, cfg)?;
    Ok(s / d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    fn scalar_casc(h: C64) -> CascadedChannels {
        CascadedChannels {
            h_tilde: vec![CVec::from_element(1, h)],
            h_bt: CMat::from_element(1, 1, h),
            h_bc: vec![],
        }
    }

    fn design(w: Vec<CVec>) -> IsacDesign {
        IsacDesign {
            w,
            theta: CVec::from_element(1, C64::new(1.0, 0.0)),
            offsets: FrequencyOffsets::zeros(1),
            u: CVec::from_element(1, C64::new(1.0, 0.0)),
            r0: None,
        }
    }

    #[test]
    fn scalar_examples() {
        let casc = scalar_casc(C64::new(1.0, 0.0));
        let d = design(vec![CVec::from_element(1, C64::new(1.0, 0.0))]);
        assert!((user_sinr(&d, &casc, 0, 1.0) - 1.0).abs() < 1e-15);
        assert!((sum_rate(&d, &casc, &[1.0]) - 1.0).abs() < 1e-15);
        let cfg = ScenarioConfig {
            beta_target: 1.0,
            noise_radar_dbm: 30.0,
            ..ScenarioConfig::default()
        };
        assert!((scnr(&d, &casc, &cfg).unwrap() - 1.0).abs() < 1e-12);
        let zero = design(vec![CVec::zeros(1)]);
        assert_eq!(user_sinr(&zero, &casc, 0, 1.0), 0.0);
        assert_eq!(sum_rate(&zero, &casc, &[1.0]), 0.0);
    }

    #[test]
    fn zero_equalizer_is_domain_error() {
        let casc = scalar_casc(C64::new(1.0, 0.0));
        let mut d = design(vec![CVec::from_element(1, C64::new(1.0, 0.0))]);
        d.u = CVec::zeros(1);
        assert!(matches!(
            scnr(&d, &casc, &ScenarioConfig::default()),
            Err(IsacError::Domain(_))
        ));
    }

    #[test]
    fn power_includes_covariance_trace() {
        let mut d = design(vec![CVec::from_element(1, C64::new(2.0, 0.0))]);
        assert_eq!(d.power(), 4.0);
        d.r0 = Some(CMat::identity(1, 1) * C64::new(0.5, 0.0));
        assert_eq!(d.power(), 4.5);
    }
}
