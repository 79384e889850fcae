//! Power dependence: measured floors, inferred minimum displacement and the
//! back-action theory curves.

use super::{derive_seed, inferred_min_displacement, Anchor, AnchorKind, AnchorReport, Bench, ReproductionConfig, ScenarioOutput, Table};
use crate::error::{Error, Result};
use crate::mechanics::{
    back_action_psd, crossing_power, crossing_power_bisection, min_displacement, noise_budget, snl_psd, BudgetQuery,
    DisplacementConvention,
};
use crate::timeseries::{extract_snr, noise_floor};
use crate::units::ratio_to_db;

pub fn run_fig4(config: &ReproductionConfig) -> Result<ScenarioOutput> {
    let m = &config.measurement;
    let c = &config.fig4;
    let params = &config.cantilever;
    if c.powers.is_empty() || c.powers.iter().any(|p| !(*p > 0.0)) {
        return Err(Error::InvalidRange("fig4 powers must be a non-empty list of positive values".into()));
    }
    let (p_lo, p_hi) = c.theory_power_range;
    if !(p_lo > 0.0 && p_hi > p_lo) || c.theory_points < 2 {
        return Err(Error::InvalidRange(format!(
            "theory power range {p_lo}..{p_hi} with {} points",
            c.theory_points
        )));
    }

    let gain = Bench::gain(m, c.squeezing_db)?;
    let f = m.modulation_frequency;
    let x = c.drive * m.drive_calibration;
    let reference = Bench::new(m, gain, m.power, 0.0)?.snl_psd;

    let mut floors = Table::new(
        "fig4a",
        &[
            ("power", "W"),
            ("coherent_floor", "dB"),
            ("squeezed_floor", "dB"),
            ("electronic_floor", "dB"),
            ("squeezing_raw", "dB"),
            ("squeezing_subtracted", "dB"),
        ],
    );
    let mut displacement = Table::new(
        "fig4b",
        &[
            ("power", "W"),
            ("d_min_coherent", "m"),
            ("d_min_squeezed", "m"),
            ("reduction", "dB"),
            ("d_min_shot_noise", "m"),
        ],
    );
    let mut coherent_linear = Vec::new();
    let mut reductions = Vec::new();
    let mut at_reference = None;
    for (i, &p) in c.powers.iter().enumerate() {
        let bench = Bench::new(m, gain, p, m.geometry.electronic_noise_psd)?;
        let e = bench.electronic_psd();
        let coh = bench.trace(false, x, derive_seed(config.seed, "fig4", 2 * i as u64))?;
        let sq = bench.trace(true, x, derive_seed(config.seed, "fig4", 2 * i as u64 + 1))?;
        let fc = noise_floor(&coh, &[f]).mean;
        let fs = noise_floor(&sq, &[f]).mean;
        let raw = ratio_to_db(fc / fs);
        let subtracted = ratio_to_db((fc - e) / (fs - e));
        floors.push(vec![
            p,
            ratio_to_db(fc / reference),
            ratio_to_db(fs / reference),
            ratio_to_db(e / reference),
            raw,
            subtracted,
        ]);
        coherent_linear.push((p, fc));

        let rms = x / 2f64.sqrt();
        let dc = inferred_min_displacement(rms, extract_snr(&coh, f)?);
        let ds = inferred_min_displacement(rms, extract_snr(&sq, f)?);
        let shot = (snl_psd(p, m.wavelength)? * coh.rbw).sqrt();
        let reduction = 20.0 * (dc / ds).log10();
        displacement.push(vec![p, dc, ds, reduction, shot]);
        reductions.push(reduction);
        if p == m.power {
            let dc_sub = inferred_min_displacement(rms, extract_snr(&coh.subtract(e), f)?);
            at_reference = Some((subtracted, dc_sub));
        }
    }

    let mut theory_cols = vec![
        ("power".to_string(), "W"),
        ("thermal".to_string(), "m/Hz^0.5"),
        ("back_action".to_string(), "m/Hz^0.5"),
        ("shot_noise".to_string(), "m/Hz^0.5"),
    ];
    theory_cols.extend(c.theory_squeezing_db.iter().map(|db| (format!("total_{db}dB"), "m/Hz^0.5")));
    let theory_cols: Vec<(&str, &str)> = theory_cols.iter().map(|(a, b)| (a.as_str(), *b)).collect();
    let mut theory = Table::new("fig4c", &theory_cols);
    let ratio = (p_hi / p_lo).powf(1.0 / (c.theory_points - 1) as f64);
    for i in 0..c.theory_points {
        let p = p_lo * ratio.powi(i as i32);
        let mut row = vec![p];
        let base = noise_budget(&budget_query(config, p, 0.0), params)?;
        row.extend([base.thermal.sqrt(), base.back_action.sqrt(), base.shot_noise.sqrt()]);
        for &db in &c.theory_squeezing_db {
            row.push(noise_budget(&budget_query(config, p, db), params)?.squeezed_floor.sqrt());
        }
        theory.push(row);
    }

    let mut crossings = Table::new(
        "fig4c_crossings",
        &[("squeezing", "dB"), ("crossing_power", "W"), ("crossing_power_bisection", "W")],
    );
    let mut worst_bisection: f64 = 0.0;
    for &db in &c.theory_squeezing_db {
        let closed = crossing_power(params, m.wavelength, db)?;
        let numeric = crossing_power_bisection(params, m.wavelength, db)?;
        worst_bisection = worst_bisection.max((numeric - closed).abs() / closed);
        crossings.push(vec![db, closed, numeric]);
    }

    let p_ref = 130e-6;
    let snl = snl_psd(p_ref, m.wavelength)?.sqrt();
    let back = back_action_psd(p_ref, m.wavelength, params)?.sqrt();
    let cross0 = crossing_power(params, m.wavelength, 0.0)?;
    let cross4 = crossing_power(params, m.wavelength, 4.0)?;
    let dmin = min_displacement(p_ref, m.wavelength, 10e3, 4.0, DisplacementConvention::Power)?;
    let fm_tol = |v: f64| 1.2e-15 + 0.02 * v;

    let coherent_r2 = linear_fit_r2(&coherent_linear);
    let min_red = reductions.iter().copied().fold(f64::INFINITY, f64::min);
    let max_red = reductions.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut anchors = vec![
        Anchor::check(AnchorKind::Reported, "shot-noise limit at 130 uW", "m/Hz^0.5", 3.9e-15, 0.02 * 3.9e-15, snl, "reported SNL of 3.9 fm/rtHz"),
        Anchor::check(AnchorKind::Reported, "back-action limit at 130 uW", "m/Hz^0.5", 33e-18, 0.03 * 33e-18, back, "reported back action limit of 33 am/rtHz"),
        Anchor::check(AnchorKind::Reported, "back-action crossing without squeezing", "W", 15e-3, 0.05 * 15e-3, cross0, "reported crossing below 15 mW"),
        Anchor::check(AnchorKind::Reported, "back-action crossing at 4 dB", "W", 10e-3, 0.05 * 10e-3, cross4, "reported crossing down to 10 mW"),
        Anchor::check(AnchorKind::Derived, "crossing power bisection vs closed form", "", 0.0, 1e-9, worst_bisection, "oracle: log-power bisection"),
        Anchor::check(AnchorKind::Reported, "coherent minimum displacement at 10 kHz", "m", 392e-15, fm_tol(392e-15), dmin.coherent, "reported 392 ± 1.2 fm"),
        Anchor::check(AnchorKind::Reported, "squeezed minimum displacement at 10 kHz", "m", 156e-15, fm_tol(156e-15), dmin.value, "reported 156 ± 1.2 fm"),
        Anchor::band(AnchorKind::Derived, "coherent floor linear fit R^2", "", 0.999, 1.0, coherent_r2, "Gaussian shot noise is linear in power"),
        Anchor::band(AnchorKind::Reported, "smallest displacement reduction", "dB", 2.4, 2.9, min_red, "reported 2.5 to 2.8 dB below the classical limit, ±0.1 dB"),
        Anchor::band(AnchorKind::Reported, "largest displacement reduction", "dB", 2.4, 2.9, max_red, "reported 2.5 to 2.8 dB below the classical limit, ±0.1 dB"),
    ];
    if let Some((subtracted, dc_sub)) = at_reference {
        anchors.push(Anchor::check(
            AnchorKind::Reported,
            "subtracted squeezing at the reference power",
            "dB",
            2.8,
            0.1,
            subtracted,
            "reported 2.8 dB of quantum noise reduction",
        ));
        let expected = (snl_psd(m.power, m.wavelength)? * m.spectrum.rbw).sqrt();
        anchors.push(Anchor::check(
            AnchorKind::Derived,
            "inferred coherent minimum displacement at the reference power",
            "m",
            expected,
            0.02 * expected,
            dc_sub,
            "oracle: shot-noise minimum displacement",
        ));
    }
    for &db in &c.theory_squeezing_db {
        if db != 0.0 && db != 4.0 {
            anchors.push(Anchor::informational(
                &format!("back-action crossing at {db} dB"),
                "W",
                crossing_power(params, m.wavelength, db)?,
                crossing_power_bisection(params, m.wavelength, db)?,
                "closed form vs bisection",
            ));
        }
    }
    Ok(ScenarioOutput {
        report: AnchorReport {
            scenario: "fig4".into(),
            seed: config.seed,
            anchors,
        },
        tables: vec![floors, displacement, theory, crossings],
    })
}

fn budget_query(config: &ReproductionConfig, power: f64, squeezing_db: f64) -> BudgetQuery {
    BudgetQuery {
        power,
        wavelength: config.measurement.wavelength,
        frequency: config.cantilever.mode_frequency,
        squeezing_db,
        bandwidth: config.measurement.spectrum.rbw,
        ..BudgetQuery::default()
    }
}

/// Coefficient of determination of an ordinary least-squares line.
pub fn linear_fit_r2(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if syy == 0.0 {
        return 1.0;
    }
    sxy * sxy / (sxx * syy)
}
