//! Command-line front end: `nbody simulate | coeffs | verify | radius |
//! parity`, each driven by a `key = value` config file.
//!
//! Exit codes: 0 on success, 1 for configuration or usage problems, 2 when a
//! run ends in a collision (or a series degenerates at a collision), 3 when a
//! symmetry verification runs to completion but fails. Output files are
//! written to a temporary file in the destination directory and renamed into
//! place, so a failed command never leaves a partial file behind. Floats are
//! emitted with 17 significant digits, which round-trips `f64` exactly: re-
//! reading and re-emitting a trajectory reproduces it byte for byte.
//!
//! The sampling commands honor the `NBODY_SEED` environment variable
//! (unsigned integer, default 0) so that every run is reproducible.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::forces::{total_energy, ForceModel, ModelKind};
use crate::symmetry::{lemma5_check, symmetry_report, SymmetryKind, SymmetryReport};
use crate::taylor::{
    default_ball_radius, force_bound_on_ball, integrate, radius_estimate, taylor_coefficients,
};

/// Hard cap on trajectory rows, so a tiny cadence cannot ask for an
/// unbounded file.
const MAX_ROWS: usize = 5_000_000;

/// Fallback half-span for `verify` when the model imposes no bound
/// (free body) and no `t_end` is given.
const FALLBACK_SPAN: f64 = 0.5;

#[derive(Parser)]
#[command(name = "nbody", version, about = "Power-series integrator and symmetry checks for second-order systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Even,
    Odd,
}

impl From<KindArg> for SymmetryKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Even => SymmetryKind::Even,
            KindArg::Odd => SymmetryKind::Odd,
        }
    }
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Path to the run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output path; overrides the config's `out` key.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the configured system to `t_end` and write a trajectory CSV.
    Simulate(CommonArgs),
    /// Write the Taylor coefficients of the solution at t = 0 as a CSV table.
    Coeffs(CommonArgs),
    /// Check the solution for mirror symmetry and write a report.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Symmetry to check: `even` (time-reflected positions agree) or
        /// `odd` (they negate; softened systems only).
        #[arg(long, value_enum)]
        kind: KindArg,
    },
    /// Print the guaranteed convergence radius for the configured start.
    Radius(CommonArgs),
    /// Sample the parity of the force Jacobian and write a report.
    Parity(CommonArgs),
}

/// Formats a float with 17 significant digits; parsing the result recovers
/// the exact `f64`, so emitted files round-trip byte for byte.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `contents` to `path` atomically: temp file in the same directory,
/// then rename.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn resolve_out(flag: &Option<PathBuf>, config: &RunConfig, default_name: &str) -> PathBuf {
    flag.clone()
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from(default_name))
}

fn seed_from_env() -> Result<u64> {
    match std::env::var("NBODY_SEED") {
        Ok(raw) => raw.trim().parse::<u64>().map_err(|_| {
            Error::Config(format!(
                "NBODY_SEED: expected an unsigned integer, got `{raw}`"
            ))
        }),
        Err(std::env::VarError::NotPresent) => Ok(0),
        Err(e) => Err(Error::Config(format!("NBODY_SEED: {e}"))),
    }
}

/// Coordinate column labels: `x1,y1,z1,...` for body systems, `x1` for the
/// pendulum; velocity labels get a `v` prefix.
fn coordinate_labels(model: &ForceModel, prefix: &str) -> Vec<String> {
    match model.body_count() {
        Some(n) => (1..=n)
            .flat_map(|i| {
                ["x", "y", "z"]
                    .iter()
                    .map(move |axis| format!("{prefix}{axis}{i}"))
            })
            .collect(),
        None => vec![format!("{prefix}x1")],
    }
}

/// Output-row times: multiples of the cadence from 0 toward `t_end`, with
/// the final row snapped to exactly `t_end`. The default cadence yields 64
/// rows.
fn output_times(t_end: f64, cadence: Option<f64>) -> Result<Vec<f64>> {
    if t_end == 0.0 {
        return Ok(vec![0.0]);
    }
    let step = match cadence {
        Some(c) => c,
        None => t_end.abs() / 63.0,
    };
    let count = t_end.abs() / step;
    if !count.is_finite() || count > MAX_ROWS as f64 {
        return Err(Error::Config(format!(
            "cadence {step} yields more than {MAX_ROWS} output rows"
        )));
    }
    // Tolerate cadences that divide t_end up to roundoff.
    let last_index = (count * (1.0 + 1e-12)).floor() as usize;
    let sign = t_end.signum();
    let mut times: Vec<f64> = (0..=last_index).map(|i| sign * i as f64 * step).collect();
    let last = *times.last().expect("at least the t = 0 row");
    if (last - t_end).abs() <= 1e-9 * (1.0 + t_end.abs()) {
        *times.last_mut().expect("nonempty") = t_end;
    } else {
        times.push(t_end);
    }
    Ok(times)
}

fn cmd_simulate(common: &CommonArgs) -> Result<i32> {
    let config = RunConfig::load(&common.config)?;
    let model = config.build_model()?;
    let initial = config.initial_state()?;
    let t_end = config.require_t_end()?;
    let b = match config.b {
        Some(b) => b,
        None => default_ball_radius(&model, &initial.positions),
    };
    let trajectory = integrate(&model, &initial, t_end, config.tol, config.order, b)?;

    let mut csv = String::new();
    let mut header = vec!["t".to_string()];
    header.extend(coordinate_labels(&model, ""));
    header.extend(coordinate_labels(&model, "v"));
    header.push("energy".to_string());
    csv.push_str(&header.join(","));
    csv.push('\n');

    for t in output_times(t_end, config.cadence)? {
        let state = trajectory.dense_eval(t)?;
        let energy = total_energy(&model, &state.positions, &state.velocities)?;
        let mut row = vec![fmt_float(state.t)];
        row.extend(state.positions.iter().map(|&x| fmt_float(x)));
        row.extend(state.velocities.iter().map(|&v| fmt_float(v)));
        row.push(fmt_float(energy));
        csv.push_str(&row.join(","));
        csv.push('\n');
    }

    let out = resolve_out(&common.out, &config, "trajectory.csv");
    write_atomic(&out, &csv)?;
    eprintln!("wrote {}", out.display());
    Ok(0)
}

fn cmd_coeffs(common: &CommonArgs) -> Result<i32> {
    let config = RunConfig::load(&common.config)?;
    let model = config.build_model()?;
    let y0 = config.flat_positions();
    let v0 = config.flat_velocities();
    let series = taylor_coefficients(&model, &y0, &v0, config.order)?;

    let mut csv = String::new();
    let mut header = vec!["order".to_string()];
    header.extend(coordinate_labels(&model, ""));
    csv.push_str(&header.join(","));
    csv.push('\n');
    for m in 0..=series.truncation_order() {
        let mut row = vec![m.to_string()];
        row.extend(series.coords().iter().map(|c| fmt_float(c.coeff(m))));
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    csv.push_str(&format!(
        "# odd_defect={} even_defect={}\n",
        fmt_float(series.odd_coeff_defect()),
        fmt_float(series.even_coeff_defect())
    ));

    let out = resolve_out(&common.out, &config, "coeffs.csv");
    write_atomic(&out, &csv)?;
    eprintln!("wrote {}", out.display());
    Ok(0)
}

/// Half-span for the mirror check: `t_end` when given, otherwise half the
/// guaranteed convergence radius at the initial positions.
fn verify_span(config: &RunConfig, model: &ForceModel, y0: &[f64]) -> Result<f64> {
    if let Some(t) = config.t_end {
        return Ok(t.abs());
    }
    let b = match config.b {
        Some(b) => b,
        None => default_ball_radius(model, y0),
    };
    let radius = radius_estimate(model, y0, b)?;
    if radius.is_finite() {
        Ok(0.5 * radius)
    } else {
        Ok(FALLBACK_SPAN)
    }
}

fn render_report(report: &SymmetryReport, span: f64) -> String {
    format!(
        "kind={}\nspan={}\nsamples={}\ntolerance={}\ncoeff_defect={}\nmirror_defect={}\npassed={}\n",
        report.kind,
        fmt_float(span),
        report.samples,
        fmt_float(report.tolerance),
        fmt_float(report.coeff_defect),
        fmt_float(report.mirror_defect),
        report.passed
    )
}

fn cmd_verify(common: &CommonArgs, kind: SymmetryKind) -> Result<i32> {
    let config = RunConfig::load(&common.config)?;
    let model = config.build_model()?;
    if kind == SymmetryKind::Odd && model.kind() != ModelKind::Softened {
        return Err(Error::InvalidModel(format!(
            "odd-symmetry verification requires the softened kind, got {}",
            model.kind()
        )));
    }
    let y0 = config.flat_positions();
    let v0 = config.flat_velocities();
    let span = verify_span(&config, &model, &y0)?;
    let report = symmetry_report(&model, &y0, &v0, kind, span, config.tol, config.order)?;

    let out = resolve_out(&common.out, &config, "verify.txt");
    write_atomic(&out, &render_report(&report, span))?;
    println!(
        "kind={} coeff_defect={} mirror_defect={} passed={}",
        report.kind,
        fmt_float(report.coeff_defect),
        fmt_float(report.mirror_defect),
        report.passed
    );
    Ok(if report.passed { 0 } else { 3 })
}

fn cmd_radius(common: &CommonArgs) -> Result<i32> {
    let config = RunConfig::load(&common.config)?;
    let model = config.build_model()?;
    let b = config
        .b
        .ok_or_else(|| Error::Config("missing required key `b`".into()))?;
    let y0 = config.flat_positions();
    let m = force_bound_on_ball(&model, &y0, b)?;
    let radius = radius_estimate(&model, &y0, b)?;
    let line = format!("b={b} M={m} radius={radius}");
    println!("{line}");
    if common.out.is_some() || config.out.is_some() {
        let out = resolve_out(&common.out, &config, "radius.txt");
        write_atomic(&out, &format!("{line}\n"))?;
    }
    Ok(0)
}

fn cmd_parity(common: &CommonArgs) -> Result<i32> {
    let config = RunConfig::load(&common.config)?;
    let model = config.build_model()?;
    let seed = seed_from_env()?;
    let defect = lemma5_check(&model, config.samples, config.box_half_width, seed)?;
    let body = format!(
        "kind={}\nsamples={}\nbox={}\nseed={seed}\nmax_defect={}\n",
        model.kind(),
        config.samples,
        fmt_float(config.box_half_width),
        fmt_float(defect)
    );
    let out = resolve_out(&common.out, &config, "parity.txt");
    write_atomic(&out, &body)?;
    println!("max_defect={}", fmt_float(defect));
    Ok(0)
}

fn dispatch(cli: Cli) -> Result<i32> {
    match &cli.command {
        Command::Simulate(common) => cmd_simulate(common),
        Command::Coeffs(common) => cmd_coeffs(common),
        Command::Verify { common, kind } => cmd_verify(common, (*kind).into()),
        Command::Radius(common) => cmd_radius(common),
        Command::Parity(common) => cmd_parity(common),
    }
}

/// Parses arguments from the process environment, runs the selected command,
/// and returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; anything else is a
            // usage error, which shares exit code 1 with config errors.
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp
                | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Collision { .. } | Error::NearSingularSeries { .. } => 2,
                _ => 1,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_round_trips_exactly() {
        for &x in &[
            0.125,
            -0.0,
            1.0 / 3.0,
            6.02e23,
            -1.7976931348623157e308,
            5e-324,
            std::f64::consts::PI,
        ] {
            let s = fmt_float(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
            assert_eq!(fmt_float(back), s);
        }
    }

    #[test]
    fn default_grid_has_64_rows_ending_exactly_at_t_end() {
        let ts = output_times(2.0, None).unwrap();
        assert_eq!(ts.len(), 64);
        assert_eq!(ts[0], 0.0);
        assert_eq!(*ts.last().unwrap(), 2.0);
    }

    #[test]
    fn explicit_cadence_lands_on_integer_multiples() {
        let ts = output_times(2.0, Some(1.0)).unwrap();
        assert_eq!(ts, vec![0.0, 1.0, 2.0]);
        let ts = output_times(-2.0, Some(1.0)).unwrap();
        assert_eq!(ts, vec![0.0, -1.0, -2.0]);
        // A cadence that does not divide the span appends the endpoint.
        let ts = output_times(1.0, Some(0.4)).unwrap();
        assert_eq!(ts.len(), 4);
        assert_eq!(*ts.last().unwrap(), 1.0);
        // Degenerate span: a single row.
        assert_eq!(output_times(0.0, None).unwrap(), vec![0.0]);
    }

    #[test]
    fn absurd_cadence_is_rejected() {
        assert!(output_times(1.0, Some(1e-12)).is_err());
    }

    #[test]
    fn labels_match_the_model_shape() {
        let c = RunConfig::parse(
            "kind = newtonian\nmasses = 1, 1\npositions = [0,0,0], [1,0,0]\n",
        )
        .unwrap();
        let model = c.build_model().unwrap();
        assert_eq!(
            coordinate_labels(&model, ""),
            vec!["x1", "y1", "z1", "x2", "y2", "z2"]
        );
        assert_eq!(coordinate_labels(&model, "v")[3], "vx2");
        let p = RunConfig::parse("kind = pendulum\npositions = [0.3]\n").unwrap();
        assert_eq!(coordinate_labels(&p.build_model().unwrap(), ""), vec!["x1"]);
    }

    #[test]
    fn atomic_write_replaces_and_creates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.txt");
        write_atomic(&path, "first\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "first\n");
        write_atomic(&path, "second\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second\n");
    }
}
