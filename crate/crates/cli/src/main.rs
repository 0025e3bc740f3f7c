//! `viscowave`: batch front end for dispersion curves, creep curves, regime
//! classification and Green's functions.
//!
//! Exit status: 0 success, 2 bad input or schema, 3 numerical failure,
//! 4 invariant violated by a computed output.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use viscowave_core::config::ModelSpec;
use viscowave_core::dispersion::{
    classify_from_creep, classify_model, dispersion_curve, high_freq_exponent, write_dispersion_csv,
    RegimeReport, FIT_POINTS, STRONG_FIT_WINDOW, WEAK_FIT_WINDOW,
};
use viscowave_core::duality::{
    creep_from_model, duality_residual, uniform_step, volterra_solve_creep, CreepAnalysisOptions, CreepCurve,
};
use viscowave_core::wavefield::{seismogram, snapshot, write_field_csv, GreenControls};
use viscowave_core::{Error, ErrorKind, Model};

use output::{provenance, write_atomic, write_sidecar};

#[derive(Parser, Debug)]
#[command(name = "viscowave", version, about = "Viscoelastic wave toolkit: curves, creep, regimes, Green's functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Attenuation and phase velocity over a frequency grid.
    Curves(CurvesArgs),
    /// Creep compliance by transform inversion, cross-checked by a Volterra solve.
    Creep(CreepArgs),
    /// Regime classification from a model or from creep data.
    Classify(ClassifyArgs),
    /// Green's function snapshot (--t) or seismogram (--x).
    Green(GreenArgs),
    /// High-frequency attenuation exponent.
    FitExponent(FitArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Spacing {
    Linear,
    Geometric,
}

#[derive(Args, Debug)]
struct OutArgs {
    /// Output file; a `.meta.json` sidecar is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the machine-readable report instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct CurvesArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 1e-2)]
    omega_min: f64,
    #[arg(long, default_value_t = 1e4)]
    omega_max: f64,
    #[arg(long, default_value_t = 61)]
    points: usize,
    #[arg(long, value_enum, default_value_t = Spacing::Geometric)]
    spacing: Spacing,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct CreepArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    t_min: f64,
    #[arg(long, default_value_t = 10.0)]
    t_max: f64,
    #[arg(long, default_value_t = 100)]
    points: usize,
    #[arg(long, value_enum, default_value_t = Spacing::Linear)]
    spacing: Spacing,
    /// Fail with status 4 when the duality residual exceeds this value.
    #[arg(long)]
    tol_residual: Option<f64>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[arg(long, conflicts_with = "creep", required_unless_present = "creep")]
    model: Option<PathBuf>,
    /// Creep curve CSV with header `t,C,C_rate`.
    #[arg(long)]
    creep: Option<PathBuf>,
    /// Density used for the wavefront speed of creep data.
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol_c0: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol_shape: f64,
    #[arg(long, default_value_t = 0.05)]
    tol_divergence: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct GreenArgs {
    #[arg(long)]
    model: PathBuf,
    /// Snapshot time; the grid runs over x.
    #[arg(long, conflicts_with = "x", required_unless_present = "x")]
    t: Option<f64>,
    /// Receiver position; the grid runs over t.
    #[arg(long)]
    x: Option<f64>,
    #[arg(long)]
    x_min: Option<f64>,
    #[arg(long)]
    x_max: Option<f64>,
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long, default_value_t = 41)]
    points: usize,
    #[arg(long, value_enum, default_value_t = Spacing::Linear)]
    spacing: Spacing,
    #[arg(long, default_value_t = 1e-10)]
    tol_tail: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol_quad: f64,
    #[arg(long, default_value_t = 1.0)]
    shift_factor: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    omega_min: Option<f64>,
    #[arg(long)]
    omega_max: Option<f64>,
    #[arg(long, default_value_t = FIT_POINTS)]
    points: usize,
    #[command(flatten)]
    out: OutArgs,
}

/// Failure with the operation that raised it.
struct Failure {
    op: &'static str,
    error: Error,
}

trait Context<T> {
    fn during(self, op: &'static str) -> Result<T, Failure>;
}

impl<T> Context<T> for Result<T, Error> {
    fn during(self, op: &'static str) -> Result<T, Failure> {
        self.map_err(|error| Failure { op, error })
    }
}

fn grid(lo: f64, hi: f64, n: usize, spacing: Spacing) -> Result<Vec<f64>, Error> {
    if n < 2 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Input(format!("grid needs count >= 2 and max > min, got [{lo}, {hi}] x {n}")));
    }
    match spacing {
        Spacing::Linear => {
            let step = (hi - lo) / (n - 1) as f64;
            Ok((0..n).map(|i| if i + 1 == n { hi } else { lo + step * i as f64 }).collect())
        }
        Spacing::Geometric => {
            if lo <= 0.0 {
                return Err(Error::Input(format!("geometric grid needs min > 0, got {lo}")));
            }
            Ok(viscowave_core::dispersion::geometric_grid(lo, hi, n))
        }
    }
}

fn load_model(path: &Path) -> Result<(ModelSpec, Model), Failure> {
    let spec = ModelSpec::load(path).during("reading model file")?;
    let model = spec.build().during("validating model")?;
    Ok((spec, model))
}

fn emit<R: Serialize>(out: &OutArgs, text: &str, report: &R) -> Result<(), Failure> {
    let json = serde_json::to_string_pretty(report).unwrap_or_default();
    if out.json {
        println!("{json}");
    } else {
        print!("{text}");
    }
    Ok(())
}

#[derive(Serialize)]
struct CurvesReport {
    points: usize,
    max_attenuation: f64,
    min_phase_velocity: f64,
    max_phase_velocity: f64,
}

fn run_curves(a: &CurvesArgs, header: Vec<String>) -> Result<(), Failure> {
    let (_, model) = load_model(&a.model)?;
    let omegas = grid(a.omega_min, a.omega_max, a.points, a.spacing).during("building omega grid")?;
    if omegas[0] <= 0.0 {
        return Err(Failure {
            op: "building omega grid",
            error: Error::Input("omega grid must be positive".into()),
        });
    }
    let samples = dispersion_curve(&model, &omegas).during("dispersion curve")?;
    if let Some(s) = samples.iter().find(|s| !(s.kappa.re >= 0.0) || !(s.phase_velocity > 0.0)) {
        return Err(Failure {
            op: "dispersion curve",
            error: Error::Invariant(format!("branch contract broken at omega = {}: kappa = {}", s.omega, s.kappa)),
        });
    }
    let report = CurvesReport {
        points: samples.len(),
        max_attenuation: samples.iter().fold(0.0, |m, s| m.max(s.attenuation)),
        min_phase_velocity: samples.iter().fold(f64::INFINITY, |m, s| m.min(s.phase_velocity)),
        max_phase_velocity: samples.iter().fold(0.0, |m, s| m.max(s.phase_velocity)),
    };
    if let Some(path) = &a.out.out {
        let mut buf = Vec::new();
        write_dispersion_csv(&samples, &mut buf, &header).during("writing dispersion csv")?;
        write_atomic(path, &buf).during("writing dispersion csv")?;
        write_sidecar(path, &header, &report).during("writing sidecar")?;
    }
    let text = format!(
        "{} frequencies, max attenuation {:.6e}, phase velocity in [{:.6e}, {:.6e}]\n",
        report.points, report.max_attenuation, report.min_phase_velocity, report.max_phase_velocity
    );
    emit(&a.out, &text, &report)
}

#[derive(Serialize)]
struct CreepReport {
    transform_method: String,
    c0: f64,
    c_rate0: String,
    duality_residual: Option<f64>,
    volterra: String,
    volterra_max_relative_difference: Option<f64>,
}

fn run_creep(a: &CreepArgs, mut header: Vec<String>) -> Result<(), Failure> {
    let (_, model) = load_model(&a.model)?;
    let t = grid(a.t_min, a.t_max, a.points, a.spacing).during("building time grid")?;
    let curve = creep_from_model(&model, &t).during("creep_from_model")?;
    let uniform = uniform_step(&t).is_ok();
    let (residual, volterra, diff) = if uniform {
        let residual = duality_residual(&model, &curve).during("duality_residual")?;
        match volterra_solve_creep(&model, &t) {
            Ok(v) => {
                let d = curve
                    .c
                    .iter()
                    .zip(&v.c)
                    .map(|(a, b)| (a - b).abs() / a.abs().max(f64::MIN_POSITIVE))
                    .fold(0.0, f64::max);
                (Some(residual), v.source.describe(), Some(d))
            }
            Err(e @ Error::IllConditioned { .. }) => (Some(residual), format!("skipped: {e}"), None),
            Err(e) => return Err(Failure { op: "volterra_solve_creep", error: e }),
        }
    } else {
        (None, "skipped: grid is not uniform with t_min equal to the step".into(), None)
    };
    let report = CreepReport {
        transform_method: curve.source.describe(),
        c0: curve.c0.unwrap_or(f64::NAN),
        c_rate0: curve.c_rate0.map(|v| v.to_string()).unwrap_or_default(),
        duality_residual: residual,
        volterra,
        volterra_max_relative_difference: diff,
    };
    header.push(format!("method: {}", report.transform_method));
    if let Some(path) = &a.out.out {
        let mut buf = Vec::new();
        curve.write_csv(&mut buf, &header).during("writing creep csv")?;
        write_atomic(path, &buf).during("writing creep csv")?;
        write_sidecar(path, &header, &report).during("writing sidecar")?;
    }
    let mut text = format!(
        "creep via {}: C(0) = {}, C'(0) = {}\n",
        report.transform_method, report.c0, report.c_rate0
    );
    match residual {
        Some(r) => text += &format!("duality residual: {r:.3e}\n"),
        None => text += "duality residual: not computed (non-uniform grid)\n",
    }
    text += &format!("volterra: {}\n", report.volterra);
    if let Some(d) = diff {
        text += &format!("max relative difference transform vs volterra: {d:.3e}\n");
    }
    emit(&a.out, &text, &report)?;
    if let (Some(limit), Some(r)) = (a.tol_residual, residual) {
        if r > limit {
            return Err(Failure {
                op: "duality_residual",
                error: Error::Invariant(format!("duality residual {r:e} exceeds {limit:e}")),
            });
        }
    }
    Ok(())
}

fn run_classify(a: &ClassifyArgs, header: Vec<String>) -> Result<(), Failure> {
    let report: RegimeReport = if let Some(path) = &a.model {
        let (_, model) = load_model(path)?;
        classify_model(&model).during("classify_model")?
    } else {
        let path = a.creep.as_ref().expect("clap enforces one input");
        let file = std::fs::File::open(path).map_err(Error::from).during("reading creep file")?;
        let curve = CreepCurve::<f64>::read_csv(file).during("reading creep file")?;
        let opts = CreepAnalysisOptions {
            tol_c0: a.tol_c0,
            shape_tol: a.tol_shape,
            divergence_slope: a.tol_divergence,
        };
        classify_from_creep(&curve, a.rho, &opts).during("classify_from_creep")?
    };
    if let Some(path) = &a.out.out {
        let json = serde_json::to_string_pretty(&report).unwrap_or_default() + "\n";
        write_atomic(path, json.as_bytes()).during("writing report")?;
        write_sidecar(path, &header, &report.regime).during("writing sidecar")?;
    }
    emit(&a.out, &report.to_text(), &report)
}

#[derive(Serialize)]
struct GreenReport {
    kind: &'static str,
    points: usize,
    peak: f64,
    low_confidence: Vec<f64>,
    controls: GreenControls,
}

fn run_green(a: &GreenArgs, header: Vec<String>) -> Result<(), Failure> {
    let (_, model) = load_model(&a.model)?;
    let ctl = GreenControls {
        shift_factor: a.shift_factor,
        tail_tol: a.tol_tail,
        quad_rel_tol: a.tol_quad,
        ..GreenControls::default()
    };
    let (samples, by_time) = if let Some(t) = a.t {
        let xs = grid(a.x_min.unwrap_or(-2.0), a.x_max.unwrap_or(2.0), a.points, a.spacing)
            .during("building x grid")?;
        (snapshot(&model, t, &xs, &ctl).during("snapshot")?, false)
    } else {
        let x = a.x.expect("clap enforces one of --t, --x");
        let ts = grid(a.t_min.unwrap_or(0.05), a.t_max.unwrap_or(2.0), a.points, a.spacing)
            .during("building t grid")?;
        (seismogram(&model, x, &ts, &ctl).during("seismogram")?, true)
    };
    let report = GreenReport {
        kind: if by_time { "seismogram" } else { "snapshot" },
        points: samples.len(),
        peak: samples.iter().fold(0.0, |m, s| m.max(s.u.abs())),
        low_confidence: samples
            .iter()
            .filter(|s| s.low_confidence)
            .map(|s| if by_time { s.t } else { s.x })
            .collect(),
        controls: ctl,
    };
    if let Some(path) = &a.out.out {
        let mut buf = Vec::new();
        write_field_csv(&samples, by_time, &mut buf, &header).during("writing field csv")?;
        write_atomic(path, &buf).during("writing field csv")?;
        write_sidecar(path, &header, &report).during("writing sidecar")?;
    }
    let text = format!(
        "{} of {} points, peak |u| = {:.6e}, {} low-confidence samples near a front\n",
        report.kind,
        report.points,
        report.peak,
        report.low_confidence.len()
    );
    emit(&a.out, &text, &report)
}

fn run_fit(a: &FitArgs, header: Vec<String>) -> Result<(), Failure> {
    let (_, model) = load_model(&a.model)?;
    let weak = model.newtonian() == 0.0 && model.kernel().strong_singularity_exponent().is_none();
    let (lo, hi) = if weak { WEAK_FIT_WINDOW } else { STRONG_FIT_WINDOW };
    let fit = high_freq_exponent(&model, a.omega_min.unwrap_or(lo), a.omega_max.unwrap_or(hi), a.points)
        .during("high_freq_exponent")?;
    if let Some(path) = &a.out.out {
        let json = serde_json::to_string_pretty(&fit).unwrap_or_default() + "\n";
        write_atomic(path, json.as_bytes()).during("writing report")?;
        write_sidecar(path, &header, &fit).during("writing sidecar")?;
    }
    let text = format!(
        "slope {:.6} +/- {:.2e} on omega in [{:e}, {:e}] ({} points)\n",
        fit.slope, fit.stderr, fit.omega_min, fit.omega_max, fit.points
    );
    emit(&a.out, &text, &fit)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let header = provenance(cli);
    match &cli.command {
        Command::Curves(a) => run_curves(a, header),
        Command::Creep(a) => run_creep(a, header),
        Command::Classify(a) => run_classify(a, header),
        Command::Green(a) => run_green(a, header),
        Command::FitExponent(a) => run_fit(a, header),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("viscowave: {} failed: {}", f.op, f.error);
            ExitCode::from(match f.error.kind() {
                ErrorKind::Input => 2,
                ErrorKind::Numerical => 3,
                ErrorKind::Invariant => 4,
            })
        }
    }
}
