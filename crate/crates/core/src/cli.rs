//! Command-line front end.
//!
//! Exit codes: 0 success, 1 an anchor missed its tolerance, 2 bad
//! configuration or arguments, 3 I/O failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::experiments::{run_scenario, Bench, ScenarioOutput, Table, SCENARIOS};
use crate::mechanics::{noise_budget, BackActionModel, BudgetQuery, CantileverParams, DisplacementConvention, NoiseBudget};
use crate::quanta::{ideal_twin_noise, Gain, LossChannel, TwinBeamState};
use crate::spatial::{aperture_sweep, split_detector_noise};
use crate::units::{photon_rate, ratio_to_db, Hertz, Meter, Quantity, Volt, Watt};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ANCHOR_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "twinsense", version, about = "Twin-beam squeezed-light cantilever readout simulator")]
pub struct Cli {
    /// TOML run configuration; laboratory defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads for the Monte Carlo (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Also write a gnuplot script next to every CSV.
    #[arg(long, global = true)]
    pub plot_scripts: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Displacement noise budget at one operating point.
    Budget(BudgetArgs),
    /// Budget or detector noise along one axis.
    Sweep(SweepArgs),
    /// Reproduction scenario with anchor report.
    Reproduce {
        /// fig3a, fig3b, fig3c, fig4 or all.
        figure: String,
    },
    /// Simulated spectrum-analyzer trace of the differential photocurrent.
    Psd(PsdArgs),
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct BudgetArgs {
    /// e.g. "15 mW".
    #[arg(long)]
    pub power: Option<Quantity<Watt>>,
    #[arg(long)]
    pub squeezing_db: Option<f64>,
    #[arg(long)]
    pub wavelength: Option<Quantity<Meter>>,
    #[arg(long)]
    pub bandwidth: Option<Quantity<Hertz>>,
    /// unchanged or anti_squeezed.
    #[arg(long)]
    pub back_action: Option<BackActionModel>,
    /// power or amplitude.
    #[arg(long)]
    pub convention: Option<DisplacementConvention>,
    /// Print JSON instead of CSV.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Axis {
    Power,
    SqueezingDb,
    Gain,
    Transmission,
}

#[derive(Debug, Clone, clap::Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub axis: Axis,
    /// Start; powers take units ("10 uW").
    #[arg(long)]
    pub from: String,
    #[arg(long)]
    pub to: String,
    #[arg(long, default_value_t = 51)]
    pub points: usize,
    /// Logarithmic spacing.
    #[arg(long)]
    pub log: bool,
    #[command(flatten)]
    pub budget: BudgetArgs,
}

#[derive(Debug, Clone, clap::Args)]
pub struct PsdArgs {
    /// Squeezing at the detector; 0 gives the coherent reference.
    #[arg(long, default_value_t = 4.0)]
    pub squeezing_db: f64,
    /// Piezo drive amplitude, e.g. "120 mV".
    #[arg(long, default_value = "0 V")]
    pub drive: Quantity<Volt>,
    /// Total detected power; the configured power when omitted.
    #[arg(long)]
    pub power: Option<Quantity<Watt>>,
    /// Keep the electronic noise instead of subtracting it.
    #[arg(long)]
    pub raw: bool,
}

/// Parses `args`, runs, and returns the exit code. Results go to `out`,
/// diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut (dyn std::io::Write + Send), err: &mut (dyn std::io::Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::Io(_) => EXIT_IO,
                _ => EXIT_CONFIG,
            }
        }
    }
}

fn execute(cli: &Cli, out: &mut (dyn std::io::Write + Send), err: &mut (dyn std::io::Write + Send)) -> Result<i32> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(dir) = &cli.output {
        config.output_dir = dir.clone();
    }
    config.emit_plot_scripts |= cli.plot_scripts;

    let mut work = || -> Result<i32> {
        match &cli.command {
            Command::Budget(a) => cmd_budget(&config, a, out),
            Command::Sweep(a) => cmd_sweep(&config, a, out),
            Command::Reproduce { figure } => cmd_reproduce(&config, figure, out, err),
            Command::Psd(a) => cmd_psd(&config, a, out),
        }
    };
    match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

fn apply_budget_args(config: &RunConfig, a: &BudgetArgs) -> Result<BudgetQuery> {
    let mut q = config.budget_query()?;
    if let Some(p) = a.power {
        q.power = p.si();
    }
    if let Some(db) = a.squeezing_db {
        q.squeezing_db = db;
    }
    if let Some(w) = a.wavelength {
        q.wavelength = w.si();
    }
    if let Some(b) = a.bandwidth {
        q.bandwidth = b.si();
    }
    if let Some(m) = a.back_action {
        q.back_action = m;
    }
    if let Some(c) = a.convention {
        q.convention = c;
    }
    Ok(q)
}

fn budget_table() -> Table {
    Table::new(
        "budget",
        &[
            ("power", "W"),
            ("wavelength", "m"),
            ("frequency", "Hz"),
            ("squeezing", "dB"),
            ("bandwidth", "Hz"),
            ("thermal", "m/Hz^0.5"),
            ("back_action", "m/Hz^0.5"),
            ("shot_noise", "m/Hz^0.5"),
            ("sql", "m/Hz^0.5"),
            ("squeezed_floor", "m/Hz^0.5"),
            ("crossing_power", "W"),
            ("min_displacement", "m"),
            ("min_displacement_coherent", "m"),
        ],
    )
}

fn budget_row(b: &NoiseBudget) -> Vec<f64> {
    vec![
        b.query.power,
        b.query.wavelength,
        b.query.frequency,
        b.query.squeezing_db,
        b.query.bandwidth,
        b.thermal.sqrt(),
        b.back_action.sqrt(),
        b.shot_noise.sqrt(),
        b.sql.sqrt(),
        b.squeezed_floor.sqrt(),
        b.crossing_power,
        b.min_displacement.value,
        b.min_displacement.coherent,
    ]
}

fn cmd_budget(config: &RunConfig, a: &BudgetArgs, out: &mut (dyn std::io::Write + Send)) -> Result<i32> {
    let params = config.cantilever.resolve()?;
    let budget = noise_budget(&apply_budget_args(config, a)?, &params)?;
    if a.json {
        let text = serde_json::to_string_pretty(&budget).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(out, "{text}")?;
    } else {
        let mut t = budget_table();
        t.push(budget_row(&budget));
        write!(out, "{}", t.to_csv()?)?;
    }
    Ok(EXIT_OK)
}

/// Grid from `from` to `to`. A single point needs `from == to`.
pub fn grid(from: f64, to: f64, points: usize, log: bool) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(Error::InvalidRange("sweep needs at least one point".into()));
    }
    if !from.is_finite() || !to.is_finite() {
        return Err(Error::InvalidRange(format!("non-finite bounds {from}..{to}")));
    }
    if points == 1 {
        if from != to {
            return Err(Error::InvalidRange(format!(
                "a single-point sweep needs equal bounds, got {from}..{to}"
            )));
        }
        return Ok(vec![from]);
    }
    if !(to > from) {
        return Err(Error::InvalidRange(format!("empty or inverted range {from}..{to}")));
    }
    if log && !(from > 0.0) {
        return Err(Error::InvalidRange(format!("logarithmic range must start above zero, got {from}")));
    }
    let n = (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            let f = i as f64 / n;
            if log {
                from * (to / from).powf(f)
            } else {
                from + (to - from) * f
            }
        })
        .collect())
}

fn parse_axis_value(axis: Axis, text: &str) -> Result<f64> {
    match axis {
        Axis::Power => Ok(text.parse::<Quantity<Watt>>()?.si()),
        _ => text
            .trim()
            .parse::<f64>()
            .map_err(|e| Error::InvalidRange(format!("'{text}': {e}"))),
    }
}

fn cmd_sweep(config: &RunConfig, a: &SweepArgs, out: &mut (dyn std::io::Write + Send)) -> Result<i32> {
    let values = grid(
        parse_axis_value(a.axis, &a.from)?,
        parse_axis_value(a.axis, &a.to)?,
        a.points,
        a.log,
    )?;
    let table = sweep_table(config, a, &values)?;
    write!(out, "{}", table.to_csv()?)?;
    if config.emit_plot_scripts {
        write_outputs(&config.output_dir, std::slice::from_ref(&table), true)?;
    }
    Ok(EXIT_OK)
}

pub fn sweep_table(config: &RunConfig, a: &SweepArgs, values: &[f64]) -> Result<Table> {
    let params: CantileverParams = config.cantilever.resolve()?;
    let base = apply_budget_args(config, &a.budget)?;
    match a.axis {
        Axis::Power | Axis::SqueezingDb => {
            let mut t = budget_table();
            t.name = format!("sweep_{}", if a.axis == Axis::Power { "power" } else { "squeezing_db" });
            for &v in values {
                let mut q = base;
                if a.axis == Axis::Power {
                    q.power = v;
                } else {
                    q.squeezing_db = v;
                }
                t.push(budget_row(&noise_budget(&q, &params)?));
            }
            Ok(t)
        }
        Axis::Gain => {
            let layout = config.layout()?;
            let mut t = Table::new(
                "sweep_gain",
                &[("gain", ""), ("ideal_noise", ""), ("ideal_noise_db", "dB"), ("detector_noise_db", "dB")],
            );
            for &v in values {
                let g = Gain::new(v)?;
                let ideal = ideal_twin_noise(g);
                t.push(vec![v, ideal, ratio_to_db(ideal), ratio_to_db(split_detector_noise(&layout, g)?)]);
            }
            Ok(t)
        }
        Axis::Transmission => {
            let r = config.reproduction()?;
            let m = &r.measurement;
            let gain = Gain::from_ideal_squeezing_db(r.fig3a.source_squeezing_db)?;
            let rate = photon_rate(m.power, m.wavelength);
            let state = TwinBeamState::amplify(rate / gain.value(), gain, m.wavelength)?;
            let probe = LossChannel::new(r.fig3a.probe_transmission)?;
            let signal = 4.0 * std::f64::consts::PI * probe.transmission() * rate * r.fig3a.displacement / m.wavelength;
            let mut t = Table::new(
                "sweep_transmission",
                &[
                    ("conj_transmission", ""),
                    ("noise", "dB"),
                    ("noise_re_snl", "dB"),
                    ("snr", "dB"),
                    ("classical_snr", "dB"),
                ],
            );
            for p in aperture_sweep(&state, probe, values, signal)? {
                t.push(vec![p.conj_transmission, p.noise_db, p.noise_snl_db, p.snr_db, p.classical_snr_db]);
            }
            Ok(t)
        }
    }
}

fn cmd_reproduce(
    config: &RunConfig,
    figure: &str,
    out: &mut (dyn std::io::Write + Send),
    err: &mut (dyn std::io::Write + Send),
) -> Result<i32> {
    let names: Vec<&str> = if figure == "all" {
        SCENARIOS.to_vec()
    } else if SCENARIOS.contains(&figure) {
        vec![figure]
    } else {
        return Err(Error::UnknownVariant {
            kind: "figure",
            value: figure.to_string(),
            expected: "fig3a, fig3b, fig3c, fig4, all",
        });
    };
    let r = config.reproduction()?;
    let mut code = EXIT_OK;
    for name in names {
        let output = run_scenario(name, &r)?;
        write_scenario(&config.output_dir, &output, config.emit_plot_scripts)?;
        writeln!(out, "{}", summary(&output))?;
        if !output.report.passed() {
            for a in output.report.failures() {
                writeln!(
                    err,
                    "{name}: anchor '{}' failed: got {} {}, expected {} ± {}",
                    a.quantity,
                    a.got,
                    a.unit,
                    a.expected,
                    a.tolerance.unwrap_or(0.0)
                )?;
            }
            code = EXIT_ANCHOR_FAILURE;
        }
    }
    Ok(code)
}

fn summary(output: &ScenarioOutput) -> String {
    let mut s = String::new();
    let r = &output.report;
    let _ = writeln!(s, "{} (seed {}): {}", r.scenario, r.seed, if r.passed() { "pass" } else { "FAIL" });
    for a in &r.anchors {
        let status = match (a.pass, a.tolerance) {
            (_, None) => "info",
            (true, _) => "pass",
            (false, _) => "FAIL",
        };
        let _ = writeln!(s, "  [{status}] {}: {} {} (expected {})", a.quantity, a.got, a.unit, a.expected);
    }
    s.pop();
    s
}

fn write_scenario(dir: &Path, output: &ScenarioOutput, plots: bool) -> Result<()> {
    output.write_to(dir)?;
    if plots {
        write_outputs(dir, &output.tables, true)?;
    }
    Ok(())
}

fn write_outputs(dir: &Path, tables: &[Table], plots: bool) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for t in tables {
        std::fs::write(dir.join(format!("{}.csv", t.name)), t.to_csv()?)?;
        if plots {
            std::fs::write(dir.join(format!("{}.gp", t.name)), plot_script(t))?;
        }
    }
    Ok(())
}

/// Gnuplot script drawing every column of `table` against the first.
pub fn plot_script(table: &Table) -> String {
    let header = table.header();
    let logx = matches!(table.name.as_str(), "fig4c" | "sweep_power" | "fig4a" | "fig4b");
    let logy = table.columns.iter().skip(1).all(|(_, u)| u != "dB" && !u.is_empty())
        && table.rows.iter().flat_map(|r| r.iter().skip(1)).all(|v| *v > 0.0);
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set terminal pngcairo size 900,600");
    let _ = writeln!(s, "set output '{}.png'", table.name);
    let _ = writeln!(s, "set xlabel '{}'", header[0]);
    if logx {
        let _ = writeln!(s, "set logscale x");
    }
    if logy {
        let _ = writeln!(s, "set logscale y");
    }
    let plots: Vec<String> = (2..=header.len())
        .map(|i| format!("'{}.csv' using 1:{i} with lines", table.name))
        .collect();
    let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    s
}

fn cmd_psd(config: &RunConfig, a: &PsdArgs, out: &mut (dyn std::io::Write + Send)) -> Result<i32> {
    let r = config.reproduction()?;
    let m = r.measurement;
    let power = a.power.map_or(m.power, |p| p.si());
    let squeezed = a.squeezing_db > 0.0;
    let gain = if squeezed { Bench::gain(&m, a.squeezing_db)? } else { Gain::UNITY };
    let bench = Bench::new(&m, gain, power, m.geometry.electronic_noise_psd)?;
    let mut trace = bench.trace(squeezed, a.drive.si() * m.drive_calibration, r.seed)?;
    if !a.raw {
        trace = trace.subtract(bench.electronic_psd());
    }
    let mut t = Table::new("psd", &[("frequency", "Hz"), ("psd", "1/Hz"), ("psd_re_snl", "dB")]);
    for k in 1..trace.psd.len() - 1 {
        t.push(vec![trace.frequencies[k], trace.psd[k], ratio_to_db(trace.psd[k] / bench.snl_psd)]);
    }
    write!(out, "{}", t.to_csv()?)?;
    if config.emit_plot_scripts {
        write_outputs(&config.output_dir, std::slice::from_ref(&t), true)?;
    }
    Ok(EXIT_OK)
}
