//! Channel synthesis checked against independent formulations.

use isac_core::channels::{
    build_bs_ris, build_radar_steering, build_ris_user, cascade, ChannelSet, FrequencyOffsets,
};
use isac_core::metrics::{scnr, sum_rate, IsacDesign};
use isac_core::scenario::{path_loss, sample_scenario, ScenarioConfig, SPEED_OF_LIGHT};
use isac_core::{CVec, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

fn desk(seed: u64) -> (ScenarioConfig, ChaCha8Rng) {
    (ScenarioConfig::desk(), ChaCha8Rng::seed_from_u64(seed))
}

fn random_theta(m: usize, rng: &mut ChaCha8Rng) -> CVec {
    CVec::from_fn(m, |_, _| C64::from_polar(1.0, rng.random::<f64>() * TAU))
}

#[test]
fn bs_ris_close_to_exact_phase_for_small_offsets() {
    let (cfg, mut rng) = desk(1);
    let mut geom = sample_scenario(&cfg, &mut rng);
    // Off-broadside angles so every array term is exercised.
    geom.aod_bs = 0.4;
    geom.aoa_azi = 1.1;
    geom.aoa_ele = -0.7;
    let df = 1e-4 * cfg.f_ref;
    let offsets = FrequencyOffsets::new(vec![0.0, df / 3.0, 2.0 * df / 3.0, df], df).unwrap();
    let h = build_bs_ris(&geom, &offsets, &cfg).unwrap();
    let beta = path_loss(geom.d_bs, cfg.exponent_br, cfg.pathloss_beta0_db).unwrap();
    let d_b = cfg.bs_spacing_wavelengths * cfg.wavelength();
    let d_r = cfg.ris_spacing_wavelengths * cfg.wavelength();
    for m in 0..cfg.m_ris() {
        let (me, ma) = ((m % cfg.m_ele) as f64, (m / cfg.m_ele) as f64);
        for n in 0..cfg.n_tx {
            let f = cfg.f_ref + offsets.as_slice()[n];
            let path = geom.d_bs - n as f64 * d_b * geom.aod_bs.sin()
                + me * d_r * geom.aoa_azi.sin() * geom.aoa_ele.sin()
                + ma * d_r * geom.aoa_azi.sin() * geom.aoa_ele.cos();
            let exact = C64::from_polar(beta.sqrt(), -TAU * f * path / SPEED_OF_LIGHT);
            assert!((h[(m, n)] - exact).norm() < 1e-3 * beta.sqrt(), "entry ({m},{n})");
        }
    }
}

#[test]
fn rician_limits() {
    let (mut cfg, mut rng) = desk(2);
    let geom = sample_scenario(&cfg, &mut rng);
    let offs = FrequencyOffsets::uniform(cfg.n_tx, cfg.f_max);
    cfg.rician_kappa = 1e12;
    for u in build_ris_user(&geom, &offs, &cfg, &mut rng).unwrap() {
        for (h, l) in u.h.iter().zip(&u.los) {
            let d = h - l * C64::new(u.beta.sqrt(), 0.0);
            assert!(d.norm() / h.norm() < 1e-5);
        }
    }
    cfg.rician_kappa = 0.0;
    for u in build_ris_user(&geom, &offs, &cfg, &mut rng).unwrap() {
        for (h, nl) in u.h.iter().zip(&u.nlos) {
            assert_eq!(*h, nl * C64::new(u.beta.sqrt(), 0.0));
        }
    }
}

#[test]
fn rician_power_monte_carlo() {
    let (cfg, mut rng) = desk(3);
    let geom = sample_scenario(&cfg, &mut rng);
    let offs = FrequencyOffsets::zeros(cfg.n_tx);
    let draws = 10_000 / (cfg.k_users * cfg.n_tx) + 1;
    let mut acc = vec![0.0; cfg.k_users];
    let mut count = 0usize;
    let mut betas = vec![0.0; cfg.k_users];
    for _ in 0..draws {
        for (k, u) in build_ris_user(&geom, &offs, &cfg, &mut rng).unwrap().iter().enumerate() {
            betas[k] = u.beta;
            acc[k] += u.h.iter().map(|h| h.norm_squared() / cfg.m_ris() as f64).sum::<f64>();
        }
        count += cfg.n_tx;
    }
    for k in 0..cfg.k_users {
        let mean = acc[k] / count as f64;
        assert!((mean / betas[k] - 1.0).abs() < 0.03, "user {k}: {mean} vs {}", betas[k]);
    }
}

#[test]
fn steering_product_depends_only_on_array_phase() {
    let (cfg, mut rng) = desk(4);
    let geom = sample_scenario(&cfg, &mut rng);
    let offs = FrequencyOffsets::uniform(cfg.n_tx, cfg.f_max);
    let s = build_radar_steering(&geom, &offs, &cfg);
    let p = &geom.target;
    let d_r = cfg.ris_spacing_wavelengths * cfg.wavelength();
    for n in 0..cfg.n_tx {
        for m in 0..cfg.m_ris() {
            let (me, ma) = ((m % cfg.m_ele) as f64, (m / cfg.m_ele) as f64);
            let arr = me * d_r * p.azi.sin() * p.ele.sin() + ma * d_r * p.azi.sin() * p.ele.cos();
            // Distance terms cancel in the product, array terms double.
            let expect = C64::from_polar(1.0, -2.0 * TAU * cfg.f_ref * arr / SPEED_OF_LIGHT);
            let lhs = s.a_tar_t[n][m] * s.a_tar_r[n][m];
            // The conjugate product keeps the distance terms instead.
            let got = s.a_tar_t[n][m].conj() * s.a_tar_r[n][m];
            let dist = C64::from_polar(
                1.0,
                -2.0 * TAU * (cfg.f_ref + offs.as_slice()[n]) * p.distance / SPEED_OF_LIGHT,
            );
            assert!((got - dist).norm() < 1e-9, "conj product ({n},{m})");
            assert!((lhs - expect).norm() < 1e-9, "product ({n},{m})");
        }
    }
}

#[test]
fn zero_offsets_match_cached_variants() {
    let (cfg, mut rng) = desk(5);
    let geom = sample_scenario(&cfg, &mut rng);
    let ch = ChannelSet::sample(&geom, &cfg, FrequencyOffsets::zeros(cfg.n_tx), &mut rng).unwrap();
    assert!((&ch.h_br - &ch.g_br).norm() <= 1e-12 * ch.g_br.norm());
    for h in &ch.h_rb {
        assert!((h - &ch.h_rb0).norm() <= 1e-12 * h.norm());
    }
    let theta = random_theta(cfg.m_ris(), &mut rng);
    let casc = cascade(&ch, &theta).unwrap();
    // Assemble the echo from zero-offset variants only.
    let (a_t, a_r) = (&ch.radar0.a_tar_t[0], &ch.radar0.a_tar_r[0]);
    let rx = &ch.h_rb0 * a_r.component_mul(&theta);
    for n in 0..cfg.n_tx {
        let tx = a_t.dotc(&ch.g_br.column(n).component_mul(&theta));
        let col = &rx * tx;
        assert!((casc.h_bt.column(n) - &col).norm() <= 1e-12 * col.norm());
    }
    for (k, u) in ch.users.iter().enumerate() {
        let (a_los, a_nlos) = u.weights(cfg.rician_kappa);
        for n in 0..cfg.n_tx {
            let h = &ch.users_los0[k] * C64::new(a_los, 0.0) + &u.nlos[n] * C64::new(a_nlos, 0.0);
            let v = h.dotc(&ch.g_br.column(n).component_mul(&theta)).conj();
            assert!((casc.h_tilde[k][n] - v).norm() <= 1e-12 * v.norm());
        }
    }
}

#[test]
fn metrics_invariant_to_global_ris_phase() {
    let (cfg, mut rng) = desk(6);
    let geom = sample_scenario(&cfg, &mut rng);
    let ch = ChannelSet::sample(&geom, &cfg, FrequencyOffsets::uniform(cfg.n_tx, cfg.f_max), &mut rng)
        .unwrap();
    let theta = random_theta(cfg.m_ris(), &mut rng);
    let rotated = &theta * C64::from_polar(1.0, 1.234);
    let w: Vec<CVec> = (0..cfg.k_users)
        .map(|_| CVec::from_fn(cfg.n_tx, |_, _| C64::new(rng.random(), rng.random())))
        .collect();
    let design = |t: CVec| IsacDesign {
        w: w.clone(),
        theta: t,
        offsets: ch.offsets.clone(),
        u: CVec::from_fn(cfg.n_rx, |i, _| C64::new(1.0 + i as f64, 0.5)),
        r0: None,
    };
    let (a, b) = (design(theta.clone()), design(rotated.clone()));
    let (ca, cb) = (cascade(&ch, &theta).unwrap(), cascade(&ch, &rotated).unwrap());
    for (x, y) in ca.h_tilde.iter().zip(&cb.h_tilde) {
        assert!((x.norm() - y.norm()).abs() <= 1e-12 * x.norm());
    }
    let noises = cfg.user_noises();
    let (ra, rb) = (sum_rate(&a, &ca, &noises), sum_rate(&b, &cb, &noises));
    assert!((ra - rb).abs() <= 1e-9 * ra);
    let (sa, sb) = (scnr(&a, &ca, &cfg).unwrap(), scnr(&b, &cb, &cfg).unwrap());
    assert!((sa - sb).abs() <= 1e-9 * sa);
}

#[test]
fn dump_round_trip() {
    let (cfg, mut rng) = desk(7);
    let geom = sample_scenario(&cfg, &mut rng);
    let ch = ChannelSet::sample(&geom, &cfg, FrequencyOffsets::uniform(cfg.n_tx, cfg.f_max), &mut rng)
        .unwrap();
    let mut buf = Vec::new();
    ch.write_dump(&mut buf).unwrap();
    let d = ChannelSet::read_dump(buf.as_slice()).unwrap();
    assert_eq!(d.dims, [cfg.n_tx, cfg.n_rx, cfg.m_ris(), cfg.k_users, cfg.c_clutters]);
    assert_eq!(d.offsets, ch.offsets.as_slice());
    assert_eq!(d.h_br, ch.h_br);
    assert_eq!(d.h_rb, ch.h_rb);
    assert_eq!(d.radar, ch.radar);
    assert_eq!(d.radar0, ch.radar0);
    for (u, (h, l, n)) in ch.users.iter().zip(&d.users) {
        assert_eq!((&u.h, &u.los, &u.nlos), (h, l, n));
    }
    assert!(ChannelSet::read_dump(&buf[..buf.len() / 2]).is_err());
}
