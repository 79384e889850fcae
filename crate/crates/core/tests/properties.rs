use proptest::prelude::*;

use twinsense::cli::grid;
use twinsense::mechanics::{back_action_psd, crossing_power, crossing_power_bisection, snl_psd, CantileverParams};
use twinsense::quanta::{
    convert_squeezing, ideal_twin_noise, symmetric_loss_noise, Gain, LossChannel, SqueezingUnit, TwinBeamState,
};
use twinsense::spatial::{single_mode_penalty, split_detector_noise, ModeLayout, SplitMode};
use twinsense::units::{Meter, Quantity, Watt};

const LAMBDA: f64 = 795e-9;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #[test]
    fn loss_conserves_photons(g in 1.0f64..20.0, s in 1.0f64..1e12, ep in 0.0f64..=1.0, ec in 0.0f64..=1.0) {
        let state = TwinBeamState::amplify(s, Gain::new(g).unwrap(), LAMBDA).unwrap();
        let lossy = state.apply_loss(LossChannel::new(ep).unwrap(), LossChannel::new(ec).unwrap());
        prop_assert!(close(lossy.mean_probe, ep * g * s, 1e-12));
        prop_assert!(close(lossy.mean_conj, ec * (g - 1.0) * s, 1e-12));
        // pairs are created together: probe − conjugate equals the seed
        prop_assert!(close(state.mean_probe - state.mean_conj, s, 1e-9));
    }

    #[test]
    fn loss_channels_compose(g in 1.0f64..20.0, a in 0.0f64..=1.0, b in 0.0f64..=1.0, c in 0.0f64..=1.0, d in 0.0f64..=1.0) {
        let state = TwinBeamState::amplify(1e6, Gain::new(g).unwrap(), LAMBDA).unwrap();
        let (a, b, c, d) = (LossChannel::new(a).unwrap(), LossChannel::new(b).unwrap(),
                            LossChannel::new(c).unwrap(), LossChannel::new(d).unwrap());
        let stepwise = state.apply_loss(a, c).apply_loss(b, d);
        let direct = state.apply_loss(a.then(b), c.then(d));
        for i in 0..2 {
            for j in 0..2 {
                let (x, y) = (stepwise.number_cov[i][j], direct.number_cov[i][j]);
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0));
            }
        }
    }

    #[test]
    fn covariance_stays_physical(g in 1.0f64..50.0, s in 1.0f64..1e9, ep in 0.0f64..=1.0, ec in 0.0f64..=1.0) {
        let state = TwinBeamState::amplify(s, Gain::new(g).unwrap(), LAMBDA).unwrap();
        prop_assert!(state.is_physical());
        prop_assert!(state.apply_loss(LossChannel::new(ep).unwrap(), LossChannel::new(ec).unwrap()).is_physical());
    }

    #[test]
    fn lossless_noise_is_ideal(g in 1.0f64..100.0) {
        let gain = Gain::new(g).unwrap();
        let state = TwinBeamState::amplify(1e8, gain, LAMBDA).unwrap();
        // Var_p + Var_c − 2Cov cancels terms of order G²: relative error ~ G³ε
        let tol = 1e-14 * g.powi(3) + 1e-12;
        prop_assert!(close(state.intensity_difference_noise().unwrap(), ideal_twin_noise(gain), tol));
    }

    #[test]
    fn symmetric_loss_matches_state(g in 1.0f64..30.0, eta in 0.0f64..=1.0) {
        let gain = Gain::new(g).unwrap();
        let ch = LossChannel::new(eta).unwrap();
        let state = TwinBeamState::amplify(1e8, gain, LAMBDA).unwrap().apply_loss(ch, ch);
        if state.total_rate() > 0.0 {
            prop_assert!(close(state.intensity_difference_noise().unwrap(), symmetric_loss_noise(gain, eta), 1e-10));
        }
    }

    #[test]
    fn crossing_closed_form_matches_bisection(k in 0.01f64..100.0, q in 1.0f64..1e5, lambda in 400e-9f64..2e-6, db in 0.0f64..30.0) {
        let p = CantileverParams::new(k, q, 745e3, 13e3, 300.0).unwrap();
        let a = crossing_power(&p, lambda, db).unwrap();
        let b = crossing_power_bisection(&p, lambda, db).unwrap();
        prop_assert!(close(a, b, 1e-10), "{a} vs {b}");
    }

    #[test]
    fn back_action_times_shot_noise_is_power_independent(log_p in -9.0f64..-3.0, shift in 0.0f64..6.0) {
        // six decades of power
        let p = CantileverParams::default();
        let p1 = 10f64.powf(log_p);
        let p2 = p1 * 10f64.powf(shift);
        let prod = |w: f64| back_action_psd(w, LAMBDA, &p).unwrap() * snl_psd(w, LAMBDA).unwrap();
        prop_assert!(close(prod(p1), prod(p2), 1e-12));
    }

    #[test]
    fn split_noise_bounded_below_by_ideal(
        g in 3.0f64..=10.0, eta_d in 0.9f64..=1.0, frac in 0.0f64..=1.0, u in 0.0f64..=1.0,
    ) {
        let eta_i = eta_d * (0.5 + 0.5 * u);
        let layout = ModeLayout::new(1.0, 1.0 - frac, vec![SplitMode { power: frac, overlap: eta_i }], eta_d).unwrap();
        let gain = Gain::new(g).unwrap();
        let n = split_detector_noise(&layout, gain).unwrap();
        prop_assert!(n >= ideal_twin_noise(gain) * (1.0 - 1e-12));
    }

    #[test]
    fn isolating_power_lowers_split_noise(
        g in 3.0f64..=10.0, eta_d in 0.9f64..=1.0, a in 0.0f64..=1.0, b in 0.0f64..=1.0, u in 0.0f64..=1.0,
    ) {
        let (less, more) = if a < b { (a, b) } else { (b, a) };
        let eta_i = eta_d * (0.5 + 0.5 * u);
        let gain = Gain::new(g).unwrap();
        let noise = |iso: f64| {
            let layout = ModeLayout::new(1.0, iso, vec![SplitMode { power: 1.0 - iso, overlap: eta_i }], eta_d).unwrap();
            split_detector_noise(&layout, gain).unwrap()
        };
        prop_assert!(noise(more) <= noise(less) * (1.0 + 1e-12));
    }

    #[test]
    fn isolated_layout_limits(g in 1.0f64..100.0, eta_d in 0.0f64..=1.0, power in 1e-9f64..1.0) {
        let gain = Gain::new(g).unwrap();
        let amp = 2.0 * g - 1.0;
        let layout = ModeLayout::isolated(power, eta_d).unwrap();
        let expected = (amp + 2.0 * eta_d - 2.0 * g * eta_d) / amp;
        prop_assert!(close(split_detector_noise(&layout, gain).unwrap(), expected, 1e-12));
        let ideal = ModeLayout::isolated(power, 1.0).unwrap();
        prop_assert!(close(split_detector_noise(&ideal, gain).unwrap(), ideal_twin_noise(gain), 1e-12));
    }

    #[test]
    fn single_mode_penalty_is_half_gain(g in 1.0f64..1e3) {
        prop_assert!(close(single_mode_penalty(Gain::new(g).unwrap()).unwrap(), g / 2.0, 1e-12));
    }

    #[test]
    fn squeezing_units_round_trip(db in 0.0f64..40.0) {
        use SqueezingUnit::*;
        for unit in [PowerRatio, SqueezingParameter] {
            let there = convert_squeezing(db, Decibel, unit).unwrap();
            let back = convert_squeezing(there, unit, Decibel).unwrap();
            prop_assert!((back - db).abs() < 1e-10);
        }
        let r = convert_squeezing(db, Decibel, SqueezingParameter).unwrap();
        let ratio = convert_squeezing(db, Decibel, PowerRatio).unwrap();
        prop_assert!(close((-2.0 * r).exp(), ratio, 1e-12));
    }

    #[test]
    fn quantity_display_parses_back(v in -1e6f64..1e6) {
        let q = Quantity::<Watt>::new(v);
        let back: Quantity<Watt> = q.to_string().parse().unwrap();
        prop_assert_eq!(back, q);
    }

    #[test]
    fn quantity_prefixes_scale(v in 0.001f64..1000.0) {
        let mw: Quantity<Watt> = format!("{v} mW").parse().unwrap();
        prop_assert!(close(mw.si(), v * 1e-3, 1e-15));
        let nm: Quantity<Meter> = format!("{v}nm").parse().unwrap();
        prop_assert!(close(nm.si(), v * 1e-9, 1e-15));
    }

    #[test]
    fn grid_is_sorted_and_bounded(from in -1e3f64..1e3, span in 1e-6f64..1e3, points in 2usize..200, log in any::<bool>()) {
        let from = if log { from.abs() + 1e-3 } else { from };
        let to = from + span;
        let g = grid(from, to, points, log).unwrap();
        prop_assert_eq!(g.len(), points);
        prop_assert!(close(g[0], from, 1e-12) && close(g[points - 1], to, 1e-12));
        prop_assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn grid_rejects_inverted_ranges(from in -1e3f64..1e3, span in 1e-6f64..1e3, points in 2usize..50) {
        prop_assert!(grid(from + span, from, points, false).is_err());
        prop_assert!(grid(from, from, points, false).is_err());
    }
}

#[test]
fn grid_single_point_and_empty() {
    assert_eq!(grid(2.0, 2.0, 1, false).unwrap(), vec![2.0]);
    assert!(grid(1.0, 2.0, 1, false).is_err());
    assert!(grid(1.0, 2.0, 0, false).is_err());
    assert!(grid(0.0, 2.0, 5, true).is_err());
}
