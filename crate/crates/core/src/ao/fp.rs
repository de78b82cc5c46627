//! Quadratic-transform auxiliaries of the sum-rate objective.

use crate::channels::CascadedChannels;
use crate::metrics::IsacDesign;
use crate::C64;

/// Per-user auxiliaries: complex `alpha` and nonnegative weight `wbar`.
#[derive(Debug, Clone, PartialEq)]
pub struct FpAuxiliaries {
    pub alpha: Vec<C64>,
    pub wbar: Vec<f64>,
}

/// Received amplitudes `h_k^H w_j` indexed `[k][j]`.
fn amplitudes(design: &IsacDesign, cascaded: &CascadedChannels) -> Vec<Vec<C64>> {
    cascaded
        .h_tilde
        .iter()
        .map(|h| design.w.iter().map(|w| h.dotc(w)).collect())
        .collect()
}

/// Fractional-programming objective (natural log):
/// `Σ_k ln(1+w̄_k) − w̄_k + 2√(1+w̄_k) Re{α_k* s_kk} − |α_k|² (Σ_j |s_kj|² + σ_k²)`.
pub fn fp_objective(
    design: &IsacDesign,
    aux: &FpAuxiliaries,
    cascaded: &CascadedChannels,
    noises: &[f64],
) -> f64 {
    let s = amplitudes(design, cascaded);
    (0..noises.len())
        .map(|k| {
            let wb = aux.wbar[k];
            let a = aux.alpha[k];
            let total: f64 = s[k].iter().map(|z| z.norm_sqr()).sum::<f64>() + noises[k];
            (1.0 + wb).ln() - wb + 2.0 * (1.0 + wb).sqrt() * (a.conj() * s[k][k]).re
                - a.norm_sqr() * total
        })
        .sum()
}

/// Optimal auxiliaries for the current design: weights equal to the SINRs,
/// then `α_k = √(1+w̄_k) s_kk / (Σ_j |s_kj|² + σ_k²)`.
pub fn update_auxiliaries(
    design: &IsacDesign,
    cascaded: &CascadedChannels,
    noises: &[f64],
) -> FpAuxiliaries {
    let s = amplitudes(design, cascaded);
    let mut alpha = Vec::with_capacity(noises.len());
    let mut wbar = Vec::with_capacity(noises.len());
    for k in 0..noises.len() {
        let signal = s[k][k].norm_sqr();
        let rest: f64 = s[k]
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .map(|(_, z)| z.norm_sqr())
            .sum::<f64>()
            + noises[k];
        let total = signal + rest;
        let wb = signal / rest;
        wbar.push(wb);
        alpha.push(s[k][k] * ((1.0 + wb).sqrt() / total));
    }
    FpAuxiliaries { alpha, wbar }
}
