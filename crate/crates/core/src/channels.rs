//! Per-frequency channel synthesis.
//!
//! Every propagation term uses the narrowband approximation: the distance
//! phase of transmit slice `n` runs at `f_ref + Δf_n`, while array phases run
//! at `f_ref`. The offset dependence of each slice is therefore one scalar
//! phase per link, which the solvers exploit through [`PhaseRates`].

use crate::error::{IsacError, Result};
use crate::scenario::{path_loss, Geometry, PathGeometry, ScenarioConfig, SPEED_OF_LIGHT};
use crate::{CMat, CVec, C64};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::{Read, Write};

/// Per-antenna frequency offsets `Δf_n`, each within `[0, f_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyOffsets {
    values: Vec<f64>,
}

impl FrequencyOffsets {
    pub fn new(values: Vec<f64>, f_max: f64) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && **v <= f_max)) {
            return Err(IsacError::Domain(format!(
                "frequency offset {v} outside [0, {f_max}]"
            )));
        }
        Ok(Self { values })
    }

    /// All offsets zero (phased array).
    pub fn zeros(n_tx: usize) -> Self {
        Self {
            values: vec![0.0; n_tx],
        }
    }

    /// Uniform ramp `(n - 1) · f_max / (N_t - 1)`; zero for a single antenna.
    pub fn uniform(n_tx: usize, f_max: f64) -> Self {
        let step = if n_tx > 1 {
            f_max / (n_tx - 1) as f64
        } else {
            0.0
        };
        Self {
            values: (0..n_tx).map(|n| (n as f64 * step).min(f_max)).collect(),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Unit phasor `exp(-j 2π · cycles)` with the integer part removed first.
pub(crate) fn phasor_cycles(cycles: f64) -> C64 {
    let frac = cycles - cycles.round();
    C64::from_polar(1.0, -2.0 * PI * frac)
}

/// 1-based RIS element coordinates `(m_ele, m_azi)` of 0-based element `m`.
pub fn ris_element_index(m: usize, m_ele: usize) -> (usize, usize) {
    (m % m_ele + 1, m / m_ele + 1)
}

/// Path length difference (m) of RIS element `m` relative to element 1 for direction `path`.
pub(crate) fn ris_array_offset(m: usize, cfg: &ScenarioConfig, path: &PathGeometry) -> f64 {
    let (me, ma) = ris_element_index(m, cfg.m_ele);
    let (u_ele, u_azi) = path.direction_cosines();
    let d = cfg.d_ris();
    (me - 1) as f64 * d * u_ele + (ma - 1) as f64 * d * u_azi
}

fn bs_array_offset(n: usize, cfg: &ScenarioConfig, geom: &Geometry) -> f64 {
    n as f64 * cfg.d_bs() * geom.aod_bs.sin()
}

/// BS-to-RIS channel, `M × N_t`.
pub fn build_bs_ris(geom: &Geometry, offsets: &FrequencyOffsets, cfg: &ScenarioConfig) -> Result<CMat> {
    let beta = path_loss(geom.d_bs, cfg.exponent_br, cfg.pathloss_beta0_db)?;
    let amp = beta.sqrt();
    let path = geom.bs_path();
    let dfs = offsets.as_slice();
    Ok(CMat::from_fn(cfg.m_ris(), cfg.n_tx, |m, n| {
        let f_n = cfg.f_ref + dfs[n];
        let cycles = f_n * geom.d_bs / SPEED_OF_LIGHT
            - cfg.f_ref / SPEED_OF_LIGHT
                * (bs_array_offset(n, cfg, geom) - ris_array_offset(m, cfg, &path));
        phasor_cycles(cycles) * amp
    }))
}

/// RIS-to-BS receive channel of transmit slice `n`, `N_r × M` each.
pub fn build_ris_bs(
    geom: &Geometry,
    offsets: &FrequencyOffsets,
    cfg: &ScenarioConfig,
) -> Result<Vec<CMat>> {
    let beta = path_loss(geom.d_bs, cfg.exponent_br, cfg.pathloss_beta0_db)?;
    let amp = beta.sqrt();
    let path = geom.bs_path();
    Ok(offsets
        .as_slice()
        .iter()
        .map(|df| {
            let f_n = cfg.f_ref + df;
            CMat::from_fn(cfg.n_rx, cfg.m_ris(), |r, m| {
                let cycles = f_n * geom.d_bs / SPEED_OF_LIGHT
                    + cfg.f_ref / SPEED_OF_LIGHT
                        * (bs_array_offset(r, cfg, geom) - ris_array_offset(m, cfg, &path));
                phasor_cycles(cycles) * amp
            })
        })
        .collect())
}

/// Unit-modulus LoS vector of a RIS-to-point link at slice frequency `f_n`.
pub(crate) fn los_vector(cfg: &ScenarioConfig, path: &PathGeometry, f_n: f64) -> CVec {
    CVec::from_fn(cfg.m_ris(), |m, _| {
        let cycles = -f_n * path.distance / SPEED_OF_LIGHT
            + cfg.f_ref / SPEED_OF_LIGHT * ris_array_offset(m, cfg, path);
        phasor_cycles(cycles)
    })
}

/// Receive-side counterpart of [`los_vector`]: the distance term flips sign.
pub(crate) fn receive_vector(cfg: &ScenarioConfig, path: &PathGeometry, f_n: f64) -> CVec {
    CVec::from_fn(cfg.m_ris(), |m, _| {
        let cycles = f_n * path.distance / SPEED_OF_LIGHT
            + cfg.f_ref / SPEED_OF_LIGHT * ris_array_offset(m, cfg, path);
        phasor_cycles(cycles)
    })
}

/// Rician RIS-to-user channel of one user, one vector per transmit slice.
#[derive(Debug, Clone, PartialEq)]
pub struct RisUserChannel {
    /// Large-scale gain of the link.
    pub beta: f64,
    /// Combined channel per slice.
    pub h: Vec<CVec>,
    /// Unit-modulus LoS part per slice.
    pub los: Vec<CVec>,
    /// Standard complex normal NLoS part per slice.
    pub nlos: Vec<CVec>,
}

impl RisUserChannel {
    /// Amplitudes `(LoS, NLoS)` multiplying the two parts.
    pub fn weights(&self, kappa: f64) -> (f64, f64) {
        if kappa.is_infinite() {
            return (self.beta.sqrt(), 0.0);
        }
        (
            (kappa * self.beta / (kappa + 1.0)).sqrt(),
            (self.beta / (kappa + 1.0)).sqrt(),
        )
    }
}

/// Draws one `CN(0, I_M)` vector per (user, slice).
pub fn draw_nlos<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Vec<Vec<CVec>> {
    (0..cfg.k_users)
        .map(|_| {
            (0..cfg.n_tx)
                .map(|_| {
                    CVec::from_fn(cfg.m_ris(), |_, _| {
                        let re: f64 = StandardNormal.sample(rng);
                        let im: f64 = StandardNormal.sample(rng);
                        C64::new(re, im) * FRAC_1_SQRT_2
                    })
                })
                .collect()
        })
        .collect()
}

/// RIS-to-user channels with freshly drawn NLoS parts.
pub fn build_ris_user<R: Rng + ?Sized>(
    geom: &Geometry,
    offsets: &FrequencyOffsets,
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<Vec<RisUserChannel>> {
    let nlos = draw_nlos(cfg, rng);
    ris_user_with_nlos(geom, offsets, cfg, &nlos)
}

/// RIS-to-user channels reusing given NLoS parts.
pub fn ris_user_with_nlos(
    geom: &Geometry,
    offsets: &FrequencyOffsets,
    cfg: &ScenarioConfig,
    nlos: &[Vec<CVec>],
) -> Result<Vec<RisUserChannel>> {
    if nlos.len() != geom.users.len() {
        return Err(IsacError::Domain("NLoS draws do not match user count".into()));
    }
    geom.users
        .iter()
        .zip(nlos)
        .map(|(path, nl)| {
            let beta = path_loss(path.distance, cfg.exponent_ru, cfg.pathloss_beta0_db)?;
            let los: Vec<CVec> = offsets
                .as_slice()
                .iter()
                .map(|df| los_vector(cfg, path, cfg.f_ref + df))
                .collect();
            let mut ch = RisUserChannel {
                beta,
                h: Vec::new(),
                los,
                nlos: nl.clone(),
            };
            let (a_los, a_nlos) = ch.weights(cfg.rician_kappa);
            ch.h = ch
                .los
                .iter()
                .zip(&ch.nlos)
                .map(|(l, n)| l * C64::from(a_los) + n * C64::from(a_nlos))
                .collect();
            Ok(ch)
        })
        .collect()
}

/// RIS steering vectors toward the target and the clutters, per slice.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarSteering {
    pub a_tar_t: Vec<CVec>,
    pub a_tar_r: Vec<CVec>,
    /// Indexed `[clutter][slice]`.
    pub a_clu_t: Vec<Vec<CVec>>,
    pub a_clu_r: Vec<Vec<CVec>>,
}

pub fn build_radar_steering(
    geom: &Geometry,
    offsets: &FrequencyOffsets,
    cfg: &ScenarioConfig,
) -> RadarSteering {
    let tx = |p: &PathGeometry| -> Vec<CVec> {
        offsets
            .as_slice()
            .iter()
            .map(|df| los_vector(cfg, p, cfg.f_ref + df))
            .collect()
    };
    let rx = |p: &PathGeometry| -> Vec<CVec> {
        offsets
            .as_slice()
            .iter()
            .map(|df| receive_vector(cfg, p, cfg.f_ref + df))
            .collect()
    };
    RadarSteering {
        a_tar_t: tx(&geom.target),
        a_tar_r: rx(&geom.target),
        a_clu_t: geom.clutters.iter().map(tx).collect(),
        a_clu_r: geom.clutters.iter().map(rx).collect(),
    }
}

/// Phase slopes (rad/Hz) of every link's dependence on its slice offset.
///
/// Column `n` of each cascaded channel depends on `Δf_n` only through a factor
/// `exp(-j · rate · Δf_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRates {
    /// BS-RIS-user via the LoS part, per user.
    pub user_los: Vec<f64>,
    /// BS-RIS-user via the NLoS part (only the BS-RIS leg moves).
    pub user_nlos: f64,
    /// BS-RIS-target-RIS-BS.
    pub target: f64,
    /// BS-RIS-clutter-RIS-BS, per clutter.
    pub clutter: Vec<f64>,
}

impl PhaseRates {
    pub fn from_geometry(geom: &Geometry) -> Self {
        let k = 2.0 * PI / SPEED_OF_LIGHT;
        Self {
            user_los: geom.users.iter().map(|u| k * (geom.d_bs + u.distance)).collect(),
            user_nlos: k * geom.d_bs,
            target: k * 2.0 * (geom.d_bs + geom.target.distance),
            clutter: geom
                .clutters
                .iter()
                .map(|c| k * 2.0 * (geom.d_bs + c.distance))
                .collect(),
        }
    }
}

/// Every channel and steering vector of one scenario realization at given offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub cfg: ScenarioConfig,
    pub geom: Geometry,
    pub offsets: FrequencyOffsets,
    /// BS-RIS channel, `M × N_t`.
    pub h_br: CMat,
    pub users: Vec<RisUserChannel>,
    pub radar: RadarSteering,
    /// RIS-BS receive channel per slice, `N_r × M`.
    pub h_rb: Vec<CMat>,
    /// Zero-offset variants.
    pub g_br: CMat,
    pub h_rb0: CMat,
    pub users_los0: Vec<CVec>,
    pub radar0: RadarSteering,
    pub rates: PhaseRates,
}

impl ChannelSet {
    /// Draws NLoS parts from `rng` and synthesises everything at `offsets`.
    pub fn sample<R: Rng + ?Sized>(
        geom: &Geometry,
        cfg: &ScenarioConfig,
        offsets: FrequencyOffsets,
        rng: &mut R,
    ) -> Result<Self> {
        let nlos = draw_nlos(cfg, rng);
        Self::build(geom, cfg, offsets, &nlos)
    }

    /// Synthesises everything for given NLoS parts.
    pub fn build(
        geom: &Geometry,
        cfg: &ScenarioConfig,
        offsets: FrequencyOffsets,
        nlos: &[Vec<CVec>],
    ) -> Result<Self> {
        cfg.validate()?;
        if offsets.len() != cfg.n_tx {
            return Err(IsacError::Domain(format!(
                "expected {} offsets, got {}",
                cfg.n_tx,
                offsets.len()
            )));
        }
        FrequencyOffsets::new(offsets.as_slice().to_vec(), cfg.f_max)?;
        if geom.clutters.len() != cfg.c_clutters || geom.users.len() != cfg.k_users {
            return Err(IsacError::Domain("geometry does not match configuration".into()));
        }
        let zero = FrequencyOffsets::zeros(cfg.n_tx);
        let h_br = build_bs_ris(geom, &offsets, cfg)?;
        let users = ris_user_with_nlos(geom, &offsets, cfg, nlos)?;
        let radar = build_radar_steering(geom, &offsets, cfg);
        let h_rb = build_ris_bs(geom, &offsets, cfg)?;
        let g_br = build_bs_ris(geom, &zero, cfg)?;
        let h_rb0 = build_ris_bs(geom, &zero, cfg)?.swap_remove(0);
        let users_los0 = geom
            .users
            .iter()
            .map(|p| los_vector(cfg, p, cfg.f_ref))
            .collect();
        let radar0 = build_radar_steering(geom, &zero, cfg);
        Ok(Self {
            cfg: cfg.clone(),
            geom: geom.clone(),
            offsets,
            h_br,
            users,
            radar,
            h_rb,
            g_br,
            h_rb0,
            users_los0,
            radar0,
            rates: PhaseRates::from_geometry(geom),
        })
    }

    /// Same realization (geometry and NLoS draws) at new offsets.
    pub fn retune(&self, offsets: FrequencyOffsets) -> Result<Self> {
        let nlos: Vec<Vec<CVec>> = self.users.iter().map(|u| u.nlos.clone()).collect();
        Self::build(&self.geom, &self.cfg, offsets, &nlos)
    }

    pub fn n_tx(&self) -> usize {
        self.cfg.n_tx
    }

    pub fn n_rx(&self) -> usize {
        self.cfg.n_rx
    }

    pub fn m(&self) -> usize {
        self.cfg.m_ris()
    }

    pub fn k(&self) -> usize {
        self.cfg.k_users
    }

    pub fn c(&self) -> usize {
        self.cfg.c_clutters
    }

    /// Writes the binary dump described in [`ChannelSet::read_dump`].
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(DUMP_MAGIC)?;
        for d in [self.n_tx(), self.n_rx(), self.m(), self.k(), self.c()] {
            w.write_u32::<LittleEndian>(d as u32)?;
        }
        for v in self.offsets.as_slice() {
            w.write_f64::<LittleEndian>(*v)?;
        }
        write_mat(&mut w, &self.h_br)?;
        for u in &self.users {
            for n in 0..self.n_tx() {
                write_vec(&mut w, &u.h[n])?;
                write_vec(&mut w, &u.los[n])?;
                write_vec(&mut w, &u.nlos[n])?;
            }
        }
        write_steering(&mut w, &self.radar)?;
        for h in &self.h_rb {
            write_mat(&mut w, h)?;
        }
        write_mat(&mut w, &self.g_br)?;
        write_mat(&mut w, &self.h_rb0)?;
        for v in &self.users_los0 {
            write_vec(&mut w, v)?;
        }
        write_steering(&mut w, &self.radar0)?;
        Ok(())
    }

    /// Reads the raw arrays of a dump.
    ///
    /// Layout: magic `ISACCH01`; five little-endian `u32` dimensions
    /// `(N_t, N_r, M, K, C)`; `N_t` offsets as `f64`; then complex arrays
    /// stored row-major with interleaved real/imaginary `f64`, in the order
    /// `h_br`, per user and slice `(h, los, nlos)`, radar steering
    /// (`a_tar_t`, `a_tar_r` per slice, then per clutter `a_clu_t`, `a_clu_r`
    /// per slice), `h_rb` per slice, `g_br`, `h_rb0`, per-user zero-offset LoS
    /// and the zero-offset radar steering in the same order as above.
    pub fn read_dump<R: Read>(mut r: R) -> Result<ChannelDump> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(IsacError::Domain("not a channel dump".into()));
        }
        let mut dims = [0usize; 5];
        for d in dims.iter_mut() {
            *d = r.read_u32::<LittleEndian>()? as usize;
        }
        let [n_tx, n_rx, m, k, c] = dims;
        let offsets = (0..n_tx)
            .map(|_| r.read_f64::<LittleEndian>())
            .collect::<std::io::Result<Vec<_>>>()?;
        let h_br = read_mat(&mut r, m, n_tx)?;
        let mut users = Vec::with_capacity(k);
        for _ in 0..k {
            let mut h = Vec::new();
            let mut los = Vec::new();
            let mut nlos = Vec::new();
            for _ in 0..n_tx {
                h.push(read_vec(&mut r, m)?);
                los.push(read_vec(&mut r, m)?);
                nlos.push(read_vec(&mut r, m)?);
            }
            users.push((h, los, nlos));
        }
        let radar = read_steering(&mut r, n_tx, m, c)?;
        let h_rb = (0..n_tx)
            .map(|_| read_mat(&mut r, n_rx, m))
            .collect::<Result<Vec<_>>>()?;
        let g_br = read_mat(&mut r, m, n_tx)?;
        let h_rb0 = read_mat(&mut r, n_rx, m)?;
        let users_los0 = (0..k)
            .map(|_| read_vec(&mut r, m))
            .collect::<Result<Vec<_>>>()?;
        let radar0 = read_steering(&mut r, n_tx, m, c)?;
        Ok(ChannelDump {
            dims,
            offsets,
            h_br,
            users,
            radar,
            h_rb,
            g_br,
            h_rb0,
            users_los0,
            radar0,
        })
    }
}

/// Raw contents of a channel dump.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDump {
    /// `(N_t, N_r, M, K, C)`.
    pub dims: [usize; 5],
    pub offsets: Vec<f64>,
    pub h_br: CMat,
    /// Per user: `(h, los, nlos)` per slice.
    pub users: Vec<(Vec<CVec>, Vec<CVec>, Vec<CVec>)>,
    pub radar: RadarSteering,
    pub h_rb: Vec<CMat>,
    pub g_br: CMat,
    pub h_rb0: CMat,
    pub users_los0: Vec<CVec>,
    pub radar0: RadarSteering,
}

const DUMP_MAGIC: &[u8; 8] = b"ISACCH01";

fn write_c<W: Write>(w: &mut W, z: C64) -> Result<()> {
    w.write_f64::<LittleEndian>(z.re)?;
    w.write_f64::<LittleEndian>(z.im)?;
    Ok(())
}

fn read_c<R: Read>(r: &mut R) -> Result<C64> {
    let re = r.read_f64::<LittleEndian>()?;
    let im = r.read_f64::<LittleEndian>()?;
    Ok(C64::new(re, im))
}

fn write_mat<W: Write>(w: &mut W, m: &CMat) -> Result<()> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            write_c(w, m[(i, j)])?;
        }
    }
    Ok(())
}

fn read_mat<R: Read>(r: &mut R, rows: usize, cols: usize) -> Result<CMat> {
    let mut m = CMat::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = read_c(r)?;
        }
    }
    Ok(m)
}

fn write_vec<W: Write>(w: &mut W, v: &CVec) -> Result<()> {
    v.iter().try_for_each(|z| write_c(w, *z))
}

fn read_vec<R: Read>(r: &mut R, n: usize) -> Result<CVec> {
    let data = (0..n).map(|_| read_c(r)).collect::<Result<Vec<_>>>()?;
    Ok(CVec::from_vec(data))
}

fn write_steering<W: Write>(w: &mut W, s: &RadarSteering) -> Result<()> {
    for (t, rr) in s.a_tar_t.iter().zip(&s.a_tar_r) {
        write_vec(w, t)?;
        write_vec(w, rr)?;
    }
    for (ct, cr) in s.a_clu_t.iter().zip(&s.a_clu_r) {
        for (t, rr) in ct.iter().zip(cr) {
            write_vec(w, t)?;
            write_vec(w, rr)?;
        }
    }
    Ok(())
}

fn read_steering<R: Read>(r: &mut R, n_tx: usize, m: usize, c: usize) -> Result<RadarSteering> {
    let mut s = RadarSteering {
        a_tar_t: Vec::new(),
        a_tar_r: Vec::new(),
        a_clu_t: Vec::new(),
        a_clu_r: Vec::new(),
    };
    for _ in 0..n_tx {
        s.a_tar_t.push(read_vec(r, m)?);
        s.a_tar_r.push(read_vec(r, m)?);
    }
    for _ in 0..c {
        let mut ct = Vec::new();
        let mut cr = Vec::new();
        for _ in 0..n_tx {
            ct.push(read_vec(r, m)?);
            cr.push(read_vec(r, m)?);
        }
        s.a_clu_t.push(ct);
        s.a_clu_r.push(cr);
    }
    Ok(s)
}

/// Effective channels after RIS reflection.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadedChannels {
    /// Per user, `N_t` entries with `h_tilde[n] = conj(h_n^H Θ h_BR,n)`, so that
    /// the received amplitude for beamformer `w` is `h_tilde^H w`.
    pub h_tilde: Vec<CVec>,
    /// Target echo channel, `N_r × N_t`.
    pub h_bt: CMat,
    /// Clutter echo channels, `N_r × N_t` each.
    pub h_bc: Vec<CMat>,
}

/// Checks that every RIS coefficient has unit modulus.
pub fn check_unit_modulus(theta: &CVec, tol: f64) -> Result<()> {
    match theta.iter().position(|z| (z.norm() - 1.0).abs() > tol) {
        Some(i) => Err(IsacError::Domain(format!(
            "RIS coefficient {i} has modulus {}",
            theta[i].norm()
        ))),
        None => Ok(()),
    }
}

/// Assembles the cascaded user and echo channels for RIS phases `theta`.
pub fn cascade(ch: &ChannelSet, theta: &CVec) -> Result<CascadedChannels> {
    if theta.len() != ch.m() {
        return Err(IsacError::Domain(format!(
            "theta has length {}, expected {}",
            theta.len(),
            ch.m()
        )));
    }
    check_unit_modulus(theta, 1e-9)?;
    let n_tx = ch.n_tx();
    // Θ h_BR,n for every slice.
    let refl: Vec<CVec> = (0..n_tx)
        .map(|n| ch.h_br.column(n).component_mul(theta))
        .collect();
    let h_tilde = ch
        .users
        .iter()
        .map(|u| CVec::from_fn(n_tx, |n, _| u.h[n].dotc(&refl[n]).conj()))
        .collect();
    let echo = |a_t: &[CVec], a_r: &[CVec]| -> CMat {
        let mut out = CMat::zeros(ch.n_rx(), n_tx);
        for n in 0..n_tx {
            let tx_gain = a_t[n].dotc(&refl[n]);
            let rx = &ch.h_rb[n] * a_r[n].component_mul(theta);
            out.set_column(n, &(rx * tx_gain));
        }
        out
    };
    let h_bt = echo(&ch.radar.a_tar_t, &ch.radar.a_tar_r);
    let h_bc = ch
        .radar
        .a_clu_t
        .iter()
        .zip(&ch.radar.a_clu_r)
        .map(|(t, r)| echo(t, r))
        .collect();
    Ok(CascadedChannels {
        h_tilde,
        h_bt,
        h_bc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::sample_scenario;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(seed: u64) -> (ScenarioConfig, Geometry) {
        let cfg = ScenarioConfig::desk();
        let geom = sample_scenario(&cfg, &mut ChaCha8Rng::seed_from_u64(seed));
        (cfg, geom)
    }

    #[test]
    fn bs_ris_first_entry_and_modulus() {
        let (cfg, geom) = setup(1);
        let h = build_bs_ris(&geom, &FrequencyOffsets::zeros(cfg.n_tx), &cfg).unwrap();
        let beta = path_loss(geom.d_bs, cfg.exponent_br, cfg.pathloss_beta0_db).unwrap();
        let expect = C64::from_polar(beta.sqrt(), -2.0 * PI * cfg.f_ref * geom.d_bs / SPEED_OF_LIGHT);
        assert!((h[(0, 0)] - expect).norm() < 1e-12 * beta.sqrt());
        for z in h.iter() {
            assert!((z.norm_sqr() - beta).abs() < 1e-12 * beta);
        }
    }

    #[test]
    fn bs_ris_offset_rotates_only_its_column() {
        let (cfg, geom) = setup(2);
        let base = FrequencyOffsets::new(vec![1e6, 2e6, 3e6, 4e6], cfg.f_max).unwrap();
        let moved = FrequencyOffsets::new(vec![2e6, 2e6, 3e6, 4e6], cfg.f_max).unwrap();
        let a = build_bs_ris(&geom, &base, &cfg).unwrap();
        let b = build_bs_ris(&geom, &moved, &cfg).unwrap();
        let rot = phasor_cycles(1e6 * geom.d_bs / SPEED_OF_LIGHT);
        for m in 0..cfg.m_ris() {
            assert!((b[(m, 0)] - a[(m, 0)] * rot).norm() < 1e-12);
            for n in 1..cfg.n_tx {
                assert_eq!(a[(m, n)], b[(m, n)]);
            }
        }
    }

    #[test]
    fn steering_unit_modulus_and_zero_offset_slices_equal() {
        let (cfg, geom) = setup(3);
        let s = build_radar_steering(&geom, &FrequencyOffsets::zeros(cfg.n_tx), &cfg);
        for n in 1..cfg.n_tx {
            assert_eq!(s.a_tar_t[n], s.a_tar_t[0]);
            assert_eq!(s.a_clu_r[1][n], s.a_clu_r[1][0]);
        }
        let s = build_radar_steering(&geom, &FrequencyOffsets::uniform(cfg.n_tx, cfg.f_max), &cfg);
        for v in s.a_tar_t.iter().chain(&s.a_tar_r).chain(s.a_clu_t.iter().flatten()) {
            assert!(v.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn ris_bs_is_rank_one_and_matches_zero_variant() {
        let (cfg, geom) = setup(4);
        let zero = FrequencyOffsets::zeros(cfg.n_tx);
        let h = build_ris_bs(&geom, &zero, &cfg).unwrap();
        for hn in &h {
            assert_eq!(hn, &h[0]);
            let sv = hn.clone().svd(false, false).singular_values;
            assert!(sv[1] < 1e-12 * sv[0]);
        }
    }

    #[test]
    fn cascade_rejects_non_unit_theta() {
        let (cfg, geom) = setup(5);
        let ch = ChannelSet::sample(&geom, &cfg, FrequencyOffsets::zeros(cfg.n_tx), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let theta = CVec::from_element(cfg.m_ris(), C64::new(0.5, 0.0));
        assert!(matches!(cascade(&ch, &theta), Err(IsacError::Domain(_))));
    }

    #[test]
    fn uniform_offsets_span_the_cap() {
        let o = FrequencyOffsets::uniform(4, 8e6);
        assert_eq!(o.as_slice(), &[0.0, 8e6 / 3.0, 16e6 / 3.0, 8e6]);
        assert_eq!(FrequencyOffsets::uniform(1, 8e6).as_slice(), &[0.0]);
        assert!(FrequencyOffsets::new(vec![-1.0], 1.0).is_err());
        assert!(FrequencyOffsets::new(vec![2.0], 1.0).is_err());
    }
}
