//! Scenario configuration, unit conversions, geometry and path loss.
//!
//! Positions are Cartesian (metres). Angles seen from the RIS are expressed in
//! a local frame whose normal points from the RIS to the BS, so the BS-RIS link
//! is broadside at both ends. For a unit direction `d` leaving the RIS the
//! angle pair satisfies
//! `sin(azi)·cos(ele) = d·e_azi`, `sin(azi)·sin(ele) = d·e_ele`, `cos(azi) = d·n`.

use crate::error::{IsacError, Result};
use rand::Rng;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

/// Propagation speed used for every phase term (m/s).
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// dBm to watts.
pub fn dbm_to_watt(x: f64) -> f64 {
    10f64.powf((x - 30.0) / 10.0)
}

/// Watts to dBm.
pub fn watt_to_dbm(p: f64) -> f64 {
    10.0 * p.log10() + 30.0
}

/// dB to linear power ratio.
pub fn db_to_linear(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

/// Linear power ratio to dB.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Large-scale path loss `beta0 · (d / 1 m)^(-exponent)` with `beta0` in dB.
pub fn path_loss(distance: f64, exponent: f64, beta0_db: f64) -> Result<f64> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(IsacError::Domain(format!(
            "path loss distance must be positive, got {distance}"
        )));
    }
    Ok(db_to_linear(beta0_db) * distance.powf(-exponent))
}

/// All physical and system parameters of one ISAC scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub m_azi: usize,
    pub m_ele: usize,
    pub k_users: usize,
    pub c_clutters: usize,
    /// Reference carrier (Hz).
    pub f_ref: f64,
    /// Upper bound of every per-antenna frequency offset (Hz).
    pub f_max: f64,
    pub p_bs_dbm: f64,
    pub noise_user_dbm: f64,
    pub noise_radar_dbm: f64,
    pub gamma_t_db: f64,
    pub rician_kappa: f64,
    pub pathloss_beta0_db: f64,
    pub exponent_br: f64,
    pub exponent_ru: f64,
    pub beta_target: f64,
    pub beta_clutter: f64,
    pub pos_bs: [f64; 3],
    pub pos_ris: [f64; 3],
    pub pos_target: [f64; 3],
    pub user_center: [f64; 3],
    pub user_radius_m: f64,
    pub clutter_radius_m: f64,
    /// BS element spacing in wavelengths of `f_ref`.
    pub bs_spacing_wavelengths: f64,
    /// RIS element spacing (both axes) in wavelengths of `f_ref`.
    pub ris_spacing_wavelengths: f64,
    pub rng_seed: u64,
}

impl Default for ScenarioConfig {
    /// Full-size system: 8 transmit / 4 receive antennas, 8×8 RIS, 4 users, 3 clutters.
    fn default() -> Self {
        Self {
            n_tx: 8,
            n_rx: 4,
            m_azi: 8,
            m_ele: 8,
            k_users: 4,
            c_clutters: 3,
            f_ref: 10e9,
            f_max: 8e6,
            p_bs_dbm: 35.0,
            noise_user_dbm: -80.0,
            noise_radar_dbm: -70.0,
            gamma_t_db: 20.0,
            rician_kappa: 4.0,
            pathloss_beta0_db: -30.0,
            exponent_br: 2.3,
            exponent_ru: 2.3,
            beta_target: 1e-6,
            beta_clutter: 1e-6,
            pos_bs: [0.0, 0.0, 5.0],
            pos_ris: [0.0, 10.0, 5.0],
            pos_target: [5.0, 15.0, 2.0],
            user_center: [70.0, 50.0, 0.0],
            user_radius_m: 12.5,
            clutter_radius_m: 15.0,
            bs_spacing_wavelengths: 0.5,
            ris_spacing_wavelengths: 0.125,
            rng_seed: 1,
        }
    }
}

impl ScenarioConfig {
    /// Reduced system used by the experiment harness: 4 transmit / 2 receive
    /// antennas, 4×4 RIS, 2 users, 2 clutters.
    ///
    /// The echo gain scales as `M⁴ N_t N_r`, about 30 dB below the full
    /// system, so the radar noise is lowered by the same amount to keep the
    /// echoes clutter-limited. The threshold sits between what a phased array
    /// and an FDA can reach at this size.
    pub fn desk() -> Self {
        Self {
            n_tx: 4,
            n_rx: 2,
            m_azi: 4,
            m_ele: 4,
            k_users: 2,
            c_clutters: 2,
            gamma_t_db: DESK_GAMMA_T_DB,
            noise_radar_dbm: DESK_NOISE_RADAR_DBM,
            ..Self::default()
        }
    }

    /// Number of RIS elements.
    pub fn m_ris(&self) -> usize {
        self.m_azi * self.m_ele
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.f_ref
    }

    /// BS element spacing (m).
    pub fn d_bs(&self) -> f64 {
        self.bs_spacing_wavelengths * self.wavelength()
    }

    /// RIS element spacing (m).
    pub fn d_ris(&self) -> f64 {
        self.ris_spacing_wavelengths * self.wavelength()
    }

    pub fn p_bs_watt(&self) -> f64 {
        dbm_to_watt(self.p_bs_dbm)
    }

    pub fn noise_user_watt(&self) -> f64 {
        dbm_to_watt(self.noise_user_dbm)
    }

    pub fn noise_radar_watt(&self) -> f64 {
        dbm_to_watt(self.noise_radar_dbm)
    }

    pub fn gamma_t_linear(&self) -> f64 {
        db_to_linear(self.gamma_t_db)
    }

    /// Per-user noise powers (W).
    pub fn user_noises(&self) -> Vec<f64> {
        vec![self.noise_user_watt(); self.k_users]
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_tx", self.n_tx),
            ("n_rx", self.n_rx),
            ("m_azi", self.m_azi),
            ("m_ele", self.m_ele),
            ("k_users", self.k_users),
            ("c_clutters", self.c_clutters),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(IsacError::Config(format!("{name} must be at least 1")));
            }
        }
        if !(self.f_ref > 0.0) {
            return Err(IsacError::Config("f_ref must be positive".into()));
        }
        if !(self.f_max > 0.0) || self.f_max > self.f_ref / 100.0 {
            return Err(IsacError::Config(format!(
                "f_max must lie in (0, f_ref/100], got {}",
                self.f_max
            )));
        }
        if self.user_radius_m < 0.0 || self.clutter_radius_m < 0.0 {
            return Err(IsacError::Config("placement radii must be nonnegative".into()));
        }
        if !(self.beta_target > 0.0) || !(self.beta_clutter > 0.0) {
            return Err(IsacError::Config("radar gains must be positive".into()));
        }
        if !(self.rician_kappa >= 0.0) {
            return Err(IsacError::Config("rician_kappa must be nonnegative".into()));
        }
        if !(self.bs_spacing_wavelengths > 0.0) || !(self.ris_spacing_wavelengths > 0.0) {
            return Err(IsacError::Config("element spacings must be positive".into()));
        }
        let scalars = [
            self.p_bs_dbm,
            self.noise_user_dbm,
            self.noise_radar_dbm,
            self.gamma_t_db,
            self.pathloss_beta0_db,
            self.exponent_br,
            self.exponent_ru,
        ];
        if scalars.iter().any(|v| !v.is_finite() && *v != f64::NEG_INFINITY) {
            return Err(IsacError::Config("non-finite scalar parameter".into()));
        }
        if self.pos_bs == self.pos_ris {
            return Err(IsacError::Config("BS and RIS positions coincide".into()));
        }
        Ok(())
    }

    /// Sets one field from its textual `key = value` form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "n_tx" => self.n_tx = parse_num(key, v)?,
            "n_rx" => self.n_rx = parse_num(key, v)?,
            "m_azi" => self.m_azi = parse_num(key, v)?,
            "m_ele" => self.m_ele = parse_num(key, v)?,
            "k_users" => self.k_users = parse_num(key, v)?,
            "c_clutters" => self.c_clutters = parse_num(key, v)?,
            "f_ref" => self.f_ref = parse_num(key, v)?,
            "f_max" => self.f_max = parse_num(key, v)?,
            "p_bs_dbm" => self.p_bs_dbm = parse_num(key, v)?,
            "noise_user_dbm" => self.noise_user_dbm = parse_num(key, v)?,
            "noise_radar_dbm" => self.noise_radar_dbm = parse_num(key, v)?,
            "gamma_t_db" => self.gamma_t_db = parse_num(key, v)?,
            "rician_kappa" => self.rician_kappa = parse_num(key, v)?,
            "pathloss_beta0_db" => self.pathloss_beta0_db = parse_num(key, v)?,
            "exponent_br" => self.exponent_br = parse_num(key, v)?,
            "exponent_ru" => self.exponent_ru = parse_num(key, v)?,
            "beta_target" => self.beta_target = parse_num(key, v)?,
            "beta_clutter" => self.beta_clutter = parse_num(key, v)?,
            "pos_bs" => self.pos_bs = parse_point(key, v)?,
            "pos_ris" => self.pos_ris = parse_point(key, v)?,
            "pos_target" => self.pos_target = parse_point(key, v)?,
            "user_center" => self.user_center = parse_point(key, v)?,
            "user_radius_m" => self.user_radius_m = parse_num(key, v)?,
            "clutter_radius_m" => self.clutter_radius_m = parse_num(key, v)?,
            "bs_spacing_wavelengths" => self.bs_spacing_wavelengths = parse_num(key, v)?,
            "ris_spacing_wavelengths" => self.ris_spacing_wavelengths = parse_num(key, v)?,
            "rng_seed" => self.rng_seed = parse_num(key, v)?,
            "preset" => {
                *self = match v {
                    "full" => Self::default(),
                    "desk" => Self::desk(),
                    other => {
                        return Err(IsacError::Config(format!("unknown preset '{other}'")))
                    }
                }
            }
            other => return Err(IsacError::Config(format!("unknown scenario key '{other}'"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text` on top of `self`.
    /// A `preset = desk|full` line resets all fields before later lines apply.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (key, value) in parse_kv_lines(text)? {
            self.set(&key, &value)?;
        }
        self.validate()
    }

    /// Reads a key-value file on top of `base`.
    pub fn load(path: &Path, base: Self) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = base;
        cfg.apply_kv(&text)?;
        Ok(cfg)
    }

    /// Serialises every field in the key-value format accepted by [`Self::apply_kv`].
    pub fn to_kv_string(&self) -> String {
        let pt = |p: [f64; 3]| format!("{},{},{}", p[0], p[1], p[2]);
        let mut s = String::new();
        let _ = writeln!(s, "n_tx = {}", self.n_tx);
        let _ = writeln!(s, "n_rx = {}", self.n_rx);
        let _ = writeln!(s, "m_azi = {}", self.m_azi);
        let _ = writeln!(s, "m_ele = {}", self.m_ele);
        let _ = writeln!(s, "k_users = {}", self.k_users);
        let _ = writeln!(s, "c_clutters = {}", self.c_clutters);
        let _ = writeln!(s, "f_ref = {:e}", self.f_ref);
        let _ = writeln!(s, "f_max = {:e}", self.f_max);
        let _ = writeln!(s, "p_bs_dbm = {}", self.p_bs_dbm);
        let _ = writeln!(s, "noise_user_dbm = {}", self.noise_user_dbm);
        let _ = writeln!(s, "noise_radar_dbm = {}", self.noise_radar_dbm);
        let _ = writeln!(s, "gamma_t_db = {}", self.gamma_t_db);
        let _ = writeln!(s, "rician_kappa = {}", self.rician_kappa);
        let _ = writeln!(s, "pathloss_beta0_db = {}", self.pathloss_beta0_db);
        let _ = writeln!(s, "exponent_br = {}", self.exponent_br);
        let _ = writeln!(s, "exponent_ru = {}", self.exponent_ru);
        let _ = writeln!(s, "beta_target = {:e}", self.beta_target);
        let _ = writeln!(s, "beta_clutter = {:e}", self.beta_clutter);
        let _ = writeln!(s, "pos_bs = {}", pt(self.pos_bs));
        let _ = writeln!(s, "pos_ris = {}", pt(self.pos_ris));
        let _ = writeln!(s, "pos_target = {}", pt(self.pos_target));
        let _ = writeln!(s, "user_center = {}", pt(self.user_center));
        let _ = writeln!(s, "user_radius_m = {}", self.user_radius_m);
        let _ = writeln!(s, "clutter_radius_m = {}", self.clutter_radius_m);
        let _ = writeln!(s, "bs_spacing_wavelengths = {}", self.bs_spacing_wavelengths);
        let _ = writeln!(s, "ris_spacing_wavelengths = {}", self.ris_spacing_wavelengths);
        let _ = writeln!(s, "rng_seed = {}", self.rng_seed);
        s
    }
}

/// SCNR threshold of the reduced configuration (dB).
pub const DESK_GAMMA_T_DB: f64 = -5.0;

/// Radar noise power of the reduced configuration (dBm).
pub const DESK_NOISE_RADAR_DBM: f64 = -100.0;

/// Splits `key = value` lines, skipping blanks and `#` comments.
pub fn parse_kv_lines(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            IsacError::Config(format!("line {}: expected 'key = value'", lineno + 1))
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub(crate) fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse::<T>()
        .map_err(|_| IsacError::Config(format!("cannot parse value '{v}' for '{key}'")))
}

fn parse_point(key: &str, v: &str) -> Result<[f64; 3]> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(IsacError::Config(format!("'{key}' expects x,y,z")));
    }
    Ok([
        parse_num(key, parts[0])?,
        parse_num(key, parts[1])?,
        parse_num(key, parts[2])?,
    ])
}

/// Distance and RIS-frame angles of one RIS-to-point path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathGeometry {
    pub distance: f64,
    pub azi: f64,
    pub ele: f64,
}

impl PathGeometry {
    /// Array-phase direction cosines `(sin azi · sin ele, sin azi · cos ele)`
    /// along the elevation and azimuth RIS axes.
    pub fn direction_cosines(&self) -> (f64, f64) {
        let s = self.azi.sin();
        (s * self.ele.sin(), s * self.ele.cos())
    }
}

/// Link distances and angles of one scenario realization.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    /// BS-RIS distance (m).
    pub d_bs: f64,
    /// Departure angle at the BS array, measured from its broadside.
    pub aod_bs: f64,
    /// Arrival angles at the RIS from the BS.
    pub aoa_azi: f64,
    pub aoa_ele: f64,
    pub users: Vec<PathGeometry>,
    pub target: PathGeometry,
    pub clutters: Vec<PathGeometry>,
    pub user_positions: Vec<[f64; 3]>,
    pub clutter_positions: Vec<[f64; 3]>,
}

impl Geometry {
    /// RIS-frame angles of the BS-RIS link.
    pub fn bs_path(&self) -> PathGeometry {
        PathGeometry {
            distance: self.d_bs,
            azi: self.aoa_azi,
            ele: self.aoa_ele,
        }
    }

    /// Computes every distance and angle from fixed Cartesian positions.
    pub fn from_positions(
        cfg: &ScenarioConfig,
        users: Vec<[f64; 3]>,
        clutters: Vec<[f64; 3]>,
    ) -> Self {
        let frame = RisFrame::new(cfg.pos_ris, cfg.pos_bs);
        let bs = frame.path(cfg.pos_bs);
        Geometry {
            d_bs: bs.distance,
            // The BS ULA is broadside to the RIS.
            aod_bs: 0.0,
            aoa_azi: bs.azi,
            aoa_ele: bs.ele,
            users: users.iter().map(|p| frame.path(*p)).collect(),
            target: frame.path(cfg.pos_target),
            clutters: clutters.iter().map(|p| frame.path(*p)).collect(),
            user_positions: users,
            clutter_positions: clutters,
        }
    }
}

/// Samples user and clutter positions and derives the geometry.
///
/// Users are uniform on the horizontal disk around `user_center` (at z = 0),
/// clutters uniform on the horizontal disk around the target at its height.
pub fn sample_scenario<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Geometry {
    let users = (0..cfg.k_users)
        .map(|_| {
            let (dx, dy) = uniform_disk(rng, cfg.user_radius_m);
            [cfg.user_center[0] + dx, cfg.user_center[1] + dy, 0.0]
        })
        .collect();
    let clutters = (0..cfg.c_clutters)
        .map(|_| {
            let (dx, dy) = uniform_disk(rng, cfg.clutter_radius_m);
            [
                cfg.pos_target[0] + dx,
                cfg.pos_target[1] + dy,
                cfg.pos_target[2],
            ]
        })
        .collect();
    Geometry::from_positions(cfg, users, clutters)
}

fn uniform_disk<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> (f64, f64) {
    let r = radius * rng.random::<f64>().sqrt();
    let phi = 2.0 * PI * rng.random::<f64>();
    (r * phi.cos(), r * phi.sin())
}

struct RisFrame {
    origin: [f64; 3],
    normal: [f64; 3],
    e_azi: [f64; 3],
    e_ele: [f64; 3],
}

impl RisFrame {
    fn new(origin: [f64; 3], toward: [f64; 3]) -> Self {
        let normal = unit(sub(toward, origin));
        let mut e_azi = cross(normal, [0.0, 0.0, 1.0]);
        if norm(e_azi) < 1e-12 {
            e_azi = [1.0, 0.0, 0.0];
        }
        let e_azi = unit(e_azi);
        let e_ele = cross(e_azi, normal);
        Self {
            origin,
            normal,
            e_azi,
            e_ele,
        }
    }

    fn path(&self, p: [f64; 3]) -> PathGeometry {
        let v = sub(p, self.origin);
        let distance = norm(v);
        let d = unit(v);
        let u_n = dot(d, self.normal).clamp(-1.0, 1.0);
        let u_azi = dot(d, self.e_azi);
        let u_ele = dot(d, self.e_ele);
        PathGeometry {
            distance,
            azi: u_n.acos(),
            ele: u_ele.atan2(u_azi),
        }
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn unit(a: [f64; 3]) -> [f64; 3] {
    let n = norm(a);
    if n == 0.0 {
        return a;
    }
    [a[0] / n, a[1] / n, a[2] / n]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dbm_conversions() {
        assert!((dbm_to_watt(30.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_watt(0.0) - 1e-3).abs() < 1e-18);
        assert!((dbm_to_watt(35.0) - 3.1623).abs() < 1e-4);
        assert!((watt_to_dbm(dbm_to_watt(-71.3)) + 71.3).abs() < 1e-12);
    }

    #[test]
    fn path_loss_values() {
        assert!((path_loss(1.0, 2.3, -30.0).unwrap() - 1e-3).abs() < 1e-15);
        assert!((path_loss(10.0, 0.0, -30.0).unwrap() - 1e-3).abs() < 1e-15);
        let v = path_loss(10.0, 2.3, -30.0).unwrap();
        assert!((v - 5.0119e-6).abs() / 5.0119e-6 < 1e-4);
        assert!(matches!(path_loss(0.0, 2.3, -30.0), Err(IsacError::Domain(_))));
        assert!(matches!(path_loss(-1.0, 2.3, -30.0), Err(IsacError::Domain(_))));
    }

    #[test]
    fn default_bs_ris_distance_and_broadside() {
        let cfg = ScenarioConfig::default();
        let g = sample_scenario(&cfg, &mut ChaCha8Rng::seed_from_u64(3));
        assert!((g.d_bs - 10.0).abs() < 1e-12);
        assert!(g.aoa_azi.abs() < 1e-12);
        assert_eq!(g.aod_bs, 0.0);
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = ScenarioConfig::default();
        let a = sample_scenario(&cfg, &mut ChaCha8Rng::seed_from_u64(42));
        let b = sample_scenario(&cfg, &mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(a, b);
    }

    #[test]
    fn zero_radius_places_users_at_center() {
        let cfg = ScenarioConfig {
            user_radius_m: 0.0,
            ..ScenarioConfig::default()
        };
        let g = sample_scenario(&cfg, &mut ChaCha8Rng::seed_from_u64(9));
        for p in &g.user_positions {
            assert_eq!(*p, cfg.user_center);
        }
    }

    #[test]
    fn angles_reproduce_direction_cosines() {
        let cfg = ScenarioConfig::default();
        let g = sample_scenario(&cfg, &mut ChaCha8Rng::seed_from_u64(5));
        // Direction cosines plus the normal component form a unit vector.
        for (path, pos) in g.users.iter().zip(&g.user_positions) {
            let (u_ele, u_azi) = path.direction_cosines();
            let u_n = path.azi.cos();
            assert!((u_ele * u_ele + u_azi * u_azi + u_n * u_n - 1.0).abs() < 1e-12);
            let d = norm(sub(*pos, cfg.pos_ris));
            assert!((d - path.distance).abs() < 1e-12);
        }
    }

    #[test]
    fn kv_round_trip() {
        let mut cfg = ScenarioConfig::desk();
        cfg.pos_target = [1.5, -2.0, 3.25];
        cfg.rng_seed = 77;
        let text = cfg.to_kv_string();
        let mut back = ScenarioConfig::default();
        back.apply_kv(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn kv_rejects_bad_input() {
        let mut cfg = ScenarioConfig::default();
        assert!(cfg.apply_kv("nonsense_key = 1").is_err());
        assert!(cfg.apply_kv("n_tx = many").is_err());
        assert!(cfg.apply_kv("pos_bs = 1,2").is_err());
        assert!(cfg.apply_kv("f_max = 1e9").is_err());
        let mut cfg = ScenarioConfig::default();
        cfg.apply_kv("# comment\npreset = desk\nk_users = 3 # trailing\n").unwrap();
        assert_eq!(cfg.k_users, 3);
        assert_eq!(cfg.n_tx, 4);
    }
}
