//! Values frozen from independent calculations: 40-digit arithmetic,
//! numerical root finding and quadrature outside this crate, or series and
//! sampling implemented here without touching the library formulas.

use approx::assert_relative_eq;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};

use twinsense::mechanics::{
    back_action_psd, crossing_power, crossing_power_bisection, min_displacement, snl_psd, thermal_psd,
    CantileverParams, DisplacementConvention,
};
use twinsense::quanta::{gain_from_interaction, Gain, LossChannel, TwinBeamState};
use twinsense::spatial::{
    gain_for_squeezing, half_plane_overlap, optimal_knife_edge_transmission, single_mode_penalty, ModeLayout,
};
use twinsense::experiments::{run_fig3a, ReproductionConfig};

const LAMBDA: f64 = 795e-9;

#[test]
fn shot_noise_and_back_action_psd() {
    assert_relative_eq!(snl_psd(130e-6, LAMBDA).unwrap(), 1.538_547_030_411_148e-29, max_relative = 1e-13);
    let p = CantileverParams::default();
    assert_relative_eq!(back_action_psd(130e-6, LAMBDA, &p).unwrap(), 1.111_437_168_106_376_5e-33, max_relative = 1e-13);
    assert_relative_eq!(thermal_psd(745e3, &p).unwrap(), 7.587_565_522_877_563e-34, max_relative = 1e-12);
}

#[test]
fn crossing_powers_from_root_finding() {
    let p = CantileverParams::default();
    for (db, expected) in [
        (0.0, 0.015_295_239_522_553_908),
        (4.0, 0.009_650_643_712_339_112),
        (13.0, 0.003_424_177_603_860_735),
        (26.0, 0.000_766_577_878_397_531_4),
    ] {
        assert_relative_eq!(crossing_power(&p, LAMBDA, db).unwrap(), expected, max_relative = 1e-13);
        assert_relative_eq!(crossing_power_bisection(&p, LAMBDA, db).unwrap(), expected, max_relative = 1e-12);
    }
}

#[test]
fn minimum_displacement_conventions() {
    let coherent = min_displacement(130e-6, LAMBDA, 10e3, 0.0, DisplacementConvention::Power).unwrap();
    assert_relative_eq!(coherent.value, 3.922_431_682_529_535e-13, max_relative = 1e-13);
    let by_power = min_displacement(130e-6, LAMBDA, 10e3, 4.0, DisplacementConvention::Power).unwrap();
    assert_relative_eq!(by_power.value, 1.561_548_178_821_227e-13, max_relative = 1e-13);
    let amp = min_displacement(130e-6, LAMBDA, 10e3, 4.0, DisplacementConvention::Amplitude).unwrap();
    assert_relative_eq!(amp.value, 2.474_887_078_313_812e-13, max_relative = 1e-13);
}

#[test]
fn calibrated_gains() {
    assert_relative_eq!(Gain::from_ideal_squeezing_db(4.5).unwrap().value(), 1.909_191_465_632_227, max_relative = 1e-14);
    let layout = ModeLayout::isolated(130e-6, 0.96).unwrap();
    for (db, g) in [
        (4.0, 1.840_380_867_710_922_6),
        (3.0, 1.540_792_036_294_595_3),
        (2.8, 1.490_083_774_190_901),
    ] {
        assert_relative_eq!(gain_for_squeezing(&layout, db).unwrap().value(), g, max_relative = 1e-10);
    }
}

#[test]
fn interaction_gain_matches_cosh_series() {
    for kt in [0.0, 0.1, 0.5, 1.0, 2.0] {
        // √G = cosh(κt) = Σ (κt)^(2n)/(2n)!
        let mut term = 1.0;
        let mut sum = 1.0;
        for n in 1..40 {
            term *= kt * kt / ((2 * n - 1) as f64 * (2 * n) as f64);
            sum += term;
        }
        let g = gain_from_interaction(1.0, kt).unwrap().value();
        assert_relative_eq!(g, sum * sum, max_relative = 1e-14);
    }
}

#[test]
fn gaussian_half_plane_quadrature() {
    for (offset, expected) in [
        (0.0, 0.5),
        (2e-4, 0.655_421_741_610_324_2),
        (5e-4, 0.841_344_746_068_542_9),
        (-1e-3, 0.977_249_868_051_820_8),
    ] {
        assert_relative_eq!(half_plane_overlap(offset, 1e-3).unwrap(), expected, max_relative = 1e-13);
    }
}

#[test]
fn knife_edge_optimum_from_bounded_minimizer() {
    assert!((optimal_knife_edge_transmission() - 0.270_267_826_469_713_2).abs() < 1e-8);
}

#[test]
fn single_mode_penalty_is_half_gain() {
    for g in [1.5, 2.0, 4.0, 7.5] {
        assert_relative_eq!(single_mode_penalty(Gain::new(g).unwrap()).unwrap(), g / 2.0, max_relative = 1e-12);
    }
}

#[test]
fn aperture_sweep_grid_values() {
    let out = run_fig3a(&ReproductionConfig {
        fig3a: twinsense::experiments::Fig3aConfig {
            monte_carlo_samples: 1 << 14,
            ..Default::default()
        },
        ..Default::default()
    })
    .unwrap();
    let t = out.table("fig3a").unwrap();
    let gain = t.column("snr_gain").unwrap();
    let best = gain.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!((best - 0.609_316_050_529_209_2).abs() < 1e-12);
    let ts = t.column("conj_transmission").unwrap();
    let i = gain.iter().position(|&g| g == best).unwrap();
    assert!((ts[i] - 0.77).abs() < 1e-12);
    let noise = t.column("noise").unwrap();
    assert!((noise.last().unwrap() + 0.191_991_071_970_523_7).abs() < 1e-12);
}

/// Thinning by explicit binomial draws. The unthinned counts are a Poisson
/// surrogate with correlated beams; the loss formula holds for any count
/// distribution, so only the first two moments matter.
#[test]
fn binomial_thinning_matches_loss_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (eta_p, eta_c) = (0.7, 0.4);
    let seed_mean = 20.0;
    let g: f64 = 2.0;
    let trials = 200_000;
    let mut sum = [0.0f64; 2];
    let mut sum_sq = [0.0f64; 3];
    for _ in 0..trials {
        let n_seed = Poisson::new(seed_mean).unwrap().sample(&mut rng) as u64;
        let pairs = Poisson::new((g - 1.0) * seed_mean).unwrap().sample(&mut rng) as u64;
        let probe = n_seed + pairs;
        let conj = pairs;
        let kp = Binomial::new(probe, eta_p).unwrap().sample(&mut rng) as f64;
        let kc = Binomial::new(conj, eta_c).unwrap().sample(&mut rng) as f64;
        sum[0] += kp;
        sum[1] += kc;
        sum_sq[0] += kp * kp;
        sum_sq[1] += kc * kc;
        sum_sq[2] += kp * kc;
    }
    let n = trials as f64;
    let mp = sum[0] / n;
    let mc = sum[1] / n;
    let vp = sum_sq[0] / n - mp * mp;
    let vc = sum_sq[1] / n - mc * mc;
    let cov = sum_sq[2] / n - mp * mc;

    // Unthinned: Var_p = G·s, Var_c = Cov = (G−1)·s.
    let s = seed_mean;
    let state = TwinBeamState {
        gain: Gain::new(g).unwrap(),
        mean_probe: g * s,
        mean_conj: (g - 1.0) * s,
        number_cov: [[g * s, (g - 1.0) * s], [(g - 1.0) * s, (g - 1.0) * s]],
        wavelength: LAMBDA,
    }
    .apply_loss(LossChannel::new(eta_p).unwrap(), LossChannel::new(eta_c).unwrap());

    let se = |v: f64| 4.0 * (2.0 * v * v / n).sqrt() + 1e-9;
    assert!((mp - state.mean_probe).abs() < 4.0 * (state.number_cov[0][0] / n).sqrt());
    assert!((mc - state.mean_conj).abs() < 4.0 * (state.number_cov[1][1] / n).sqrt());
    assert!((vp - state.number_cov[0][0]).abs() < se(state.number_cov[0][0]), "{vp}");
    assert!((vc - state.number_cov[1][1]).abs() < se(state.number_cov[1][1]), "{vc}");
    assert!((cov - state.number_cov[0][1]).abs() < se(state.number_cov[0][0]), "{cov}");
}
