//! `pinchlab` command-line front end.
//!
//! Exit codes: 0 when every check passes, 1 when a report carries
//! violations, 2 on invalid input or any other error.

use std::f64::consts::PI;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use pinchlab::curvature::{curvature_sample, uniform_grid, CSV_HEADER};
use pinchlab::geodesics::{
    inj_at_pole, shoot_from, DistanceOptions, Point, ShootOptions, DEFAULT_DISTANCE_TOL,
    DEFAULT_LAUNCHES, DEFAULT_MAX_STEP, DEFAULT_ODE_TOL,
};
use pinchlab::profiles::{build_model, ManifoldWithDensity, ModelParams, ScaleMode};
use pinchlab::report::{csv_row, to_canonical_json};
use pinchlab::variation::{geodesic_index, loop_index_check};
use pinchlab::verify::{
    diameter_gap, inj_gap_hypothesis, klingenberg_delta_search, verify_pinch, SuiteReport,
    DEFAULT_GRID,
};

#[derive(Parser)]
#[command(name = "pinchlab", version, about = "Verification lab for rotationally symmetric manifolds with density")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the profile JSON of a model.
    Build {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Curvature table on a uniform radial grid.
    Curvature {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Pinching verification report.
    Pinch {
        #[command(flatten)]
        model: ModelArgs,
        /// Which curvature pair to check; defaults to the model's scale.
        #[arg(long, value_enum)]
        mode: Option<Scale>,
        /// Upper curvature bound per unit (sectional) or per (n-1) (Ricci).
        #[arg(long, default_value_t = 1.0)]
        upper: f64,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Shoot a geodesic and write its samples.
    Geodesic {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        ray: RayArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Morse index of a geodesic, or the loop check for a meridian loop.
    Index {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        ray: RayArgs,
        /// Check a meridian loop of this length at the pole instead.
        #[arg(long)]
        loop_length: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Diameter and injectivity gap report.
    Gap {
        #[command(flatten)]
        model: ModelArgs,
        /// Base point `r,theta`; defaults to the pole.
        #[arg(long, value_parser = parse_point)]
        from: Option<Point>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Sweep the family over a list of deltas.
    FamilyLimit {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0.8)]
        eps: f64,
        /// Comma-separated list.
        #[arg(long, value_delimiter = ',', default_value = "0.08,0.04,0.02,0.01")]
        deltas: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Scale::Ricci)]
        scale: Scale,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Klingenberg delta search for a hypothesized loop at the pole.
    Klingenberg {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        loop_length: f64,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// `gaussian`, `sphere`, `family`, or a path to a profile JSON.
    #[arg(long, default_value = "family")]
    model: String,
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Pinching constant; also the target of the verification suites.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 0.02)]
    delta: f64,
    #[arg(long, value_enum, default_value_t = Scale::Ricci)]
    scale: Scale,
}

#[derive(Args, Clone)]
struct RayArgs {
    /// Start point `r,theta`.
    #[arg(long, value_parser = parse_point, default_value = "0,0")]
    from: Point,
    /// Launch angle from the outward radial direction, in radians.
    #[arg(long, default_value_t = 0.0)]
    dir: f64,
    #[arg(long, default_value_t = PI)]
    length: f64,
}

#[derive(Args, Clone)]
struct OutArgs {
    /// Output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Scale {
    Ricci,
    Sec,
}

impl From<Scale> for ScaleMode {
    fn from(s: Scale) -> Self {
        match s {
            Scale::Ricci => ScaleMode::Ricci,
            Scale::Sec => ScaleMode::Sec,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

/// Any error ends the run with exit code 2.
struct Failure(String);

impl From<pinchlab::Error> for Failure {
    fn from(e: pinchlab::Error) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<bool, Failure>;

fn parse_point(s: &str) -> Result<Point, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [r, theta] = parts[..] else {
        return Err(format!("expected `r,theta`, got `{s}`"));
    };
    let r: f64 = r.parse().map_err(|e| format!("bad r `{r}`: {e}"))?;
    let theta: f64 = theta.parse().map_err(|e| format!("bad theta `{theta}`: {e}"))?;
    if !r.is_finite() || !theta.is_finite() {
        return Err("point coordinates must be finite".into());
    }
    Ok(Point::new(r, theta))
}

fn check(cond: bool, msg: impl Into<String>) -> Result<(), Failure> {
    if cond {
        Ok(())
    } else {
        Err(Failure(msg.into()))
    }
}

fn load_model(a: &ModelArgs) -> Result<ManifoldWithDensity, Failure> {
    check(a.n >= 2 && a.n <= 1000, format!("--n {} outside [2, 1000]", a.n))?;
    if let Some(eps) = a.eps {
        check(eps > 0.0 && eps.is_finite(), format!("--eps {eps} must be positive"))?;
    }
    check(a.delta > 0.0 && a.delta < 1.0, format!("--delta {} outside (0, 1)", a.delta))?;
    let params = match a.model.as_str() {
        "gaussian" => ModelParams::gaussian(a.n, a.eps.unwrap_or(1.0 / (a.n as f64 - 1.0))),
        "sphere" => ModelParams::round_sphere(a.n),
        "family" => ModelParams::family(a.n, a.eps.unwrap_or(0.8), a.delta),
        path => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure(format!("cannot read model `{path}`: {e}")))?;
            return Ok(ManifoldWithDensity::from_json_str(&text)?);
        }
    };
    Ok(build_model(&params.with_scale(a.scale.into()))?)
}

fn target_eps(a: &ModelArgs, m: &ManifoldWithDensity) -> Result<f64, Failure> {
    a.eps
        .or(m.eps())
        .ok_or_else(|| Failure("--eps is required for this model".into()))
}

fn emit(out: &OutArgs, text: &str) -> Result<(), Failure> {
    match &out.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure(format!("cannot write `{}`: {e}", path.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure(e.to_string())),
    }
}

fn format_of(out: &OutArgs, default: Format, allowed: &[Format]) -> Result<Format, Failure> {
    let f = out.format.unwrap_or(default);
    check(allowed.contains(&f), "unsupported --format for this subcommand")?;
    Ok(f)
}

fn json_text(v: &Value) -> Result<String, Failure> {
    Ok(to_canonical_json(v)?)
}

fn defaults() -> Value {
    json!({
        "grid": DEFAULT_GRID,
        "integrator_tol": DEFAULT_ODE_TOL,
        "integrator_max_step": DEFAULT_MAX_STEP,
        "distance_tol": DEFAULT_DISTANCE_TOL,
        "distance_launches": DEFAULT_LAUNCHES,
    })
}

/// Suite report with the run defaults attached.
fn suite_doc(r: &SuiteReport) -> Result<Value, Failure> {
    let mut v = serde_json::to_value(r).map_err(pinchlab::Error::from)?;
    v["defaults"] = defaults();
    Ok(v)
}

fn rows_csv(header: &str, rows: &[Vec<f64>]) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&csv_row(r));
        s.push('\n');
    }
    s
}

fn rows_json(header: &str, rows: &[Vec<f64>]) -> Value {
    let keys: Vec<&str> = header.split(',').collect();
    Value::Array(
        rows.iter()
            .map(|r| {
                Value::Object(
                    keys.iter()
                        .zip(r)
                        .map(|(k, x)| (k.to_string(), json!(x)))
                        .collect(),
                )
            })
            .collect(),
    )
}

fn write_table(out: &OutArgs, header: &str, rows: &[Vec<f64>]) -> Result<(), Failure> {
    match format_of(out, Format::Csv, &[Format::Csv, Format::Json])? {
        Format::Csv => emit(out, &rows_csv(header, rows)),
        Format::Json => emit(out, &json_text(&rows_json(header, rows))?),
    }
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Build { model, out } => {
            format_of(&out, Format::Json, &[Format::Json])?;
            let m = load_model(&model)?;
            for w in &m.meta().warnings {
                eprintln!("warning: {w}");
            }
            emit(&out, &to_canonical_json(&m)?)?;
            Ok(true)
        }
        Command::Curvature { model, grid, out } => {
            check(grid >= 2, "--grid must be at least 2")?;
            let m = load_model(&model)?;
            let rows = uniform_grid(&m, grid)
                .into_iter()
                .map(|r| Ok(curvature_sample(&m, r)?.csv_values().to_vec()))
                .collect::<Result<Vec<_>, Failure>>()?;
            write_table(&out, CSV_HEADER, &rows)?;
            Ok(true)
        }
        Command::Pinch { model, mode, upper, grid, out } => {
            format_of(&out, Format::Json, &[Format::Json])?;
            check(grid >= 100, "--grid must be at least 100")?;
            check(upper.is_finite(), "--upper must be finite")?;
            let m = load_model(&model)?;
            let eps = target_eps(&model, &m)?;
            let mode = mode.unwrap_or(model.scale).into();
            let r = verify_pinch(&m, mode, eps, upper, grid)?;
            emit(&out, &json_text(&suite_doc(&SuiteReport::pinch(&m, &r)?)?)?)?;
            Ok(r.violation_count == 0)
        }
        Command::Geodesic { model, ray, out } => {
            check(ray.length >= 0.0 && ray.length.is_finite(), "--length must be non-negative")?;
            let m = load_model(&model)?;
            let g = shoot_from(&m, ray.from, ray.dir, ray.length, &ShootOptions::default())?;
            let rows: Vec<Vec<f64>> = g.residual_rows(&m)?.iter().map(|r| r.to_vec()).collect();
            write_table(&out, "t,r,theta,rdot,clairaut_residual,speed_residual", &rows)?;
            Ok(true)
        }
        Command::Index { model, ray, loop_length, out } => {
            format_of(&out, Format::Json, &[Format::Json])?;
            let m = load_model(&model)?;
            let (doc, ok) = match loop_length {
                Some(l) => {
                    check(l > 0.0 && l.is_finite(), "--loop-length must be positive")?;
                    let eps = target_eps(&model, &m)?;
                    let g = shoot_from(&m, Point::pole(), 0.0, l, &ShootOptions::default())?;
                    let rep = loop_index_check(&m, &g, eps)?;
                    let ok = rep.loop_check_satisfied && rep.index.cross_check_agree;
                    (serde_json::to_value(&rep).map_err(pinchlab::Error::from)?, ok)
                }
                None => {
                    check(ray.length > 0.0 && ray.length.is_finite(), "--length must be positive")?;
                    let g = shoot_from(&m, ray.from, ray.dir, ray.length, &ShootOptions::default())?;
                    let rep = geodesic_index(&m, &g)?;
                    let ok = rep.cross_check_agree;
                    (serde_json::to_value(&rep).map_err(pinchlab::Error::from)?, ok)
                }
            };
            let mut doc = doc;
            doc["defaults"] = defaults();
            emit(&out, &json_text(&doc)?)?;
            Ok(ok)
        }
        Command::Gap { model, from, out } => {
            format_of(&out, Format::Json, &[Format::Json])?;
            let m = load_model(&model)?;
            let eps = target_eps(&model, &m)?;
            let opts = DistanceOptions::default();
            let p = from.unwrap_or_else(Point::pole);
            let g = diameter_gap(&m, p, Some(eps), &opts)?;
            let inj = inj_gap_hypothesis(&m, Some(eps))?;
            let r = SuiteReport::gap(&m, &g, &inj, &opts)?;
            emit(&out, &json_text(&suite_doc(&r)?)?)?;
            Ok(r.violations.is_empty())
        }
        Command::FamilyLimit { n, eps, deltas, scale, grid, out } => {
            check(grid >= 100, "--grid must be at least 100")?;
            check(!deltas.is_empty(), "--deltas must list at least one value")?;
            let mut rows = Vec::new();
            let mut ok = true;
            for &delta in &deltas {
                let args = ModelArgs {
                    model: "family".into(),
                    n,
                    eps: Some(eps),
                    delta,
                    scale,
                };
                let m = load_model(&args)?;
                let half = m.half_length().unwrap_or(f64::NAN);
                let p = verify_pinch(&m, scale.into(), eps, 1.0, grid)?;
                ok &= p.pass;
                rows.push(vec![
                    delta,
                    half,
                    2.0 * half,
                    PI / eps,
                    inj_at_pole(&m)?,
                    p.lower_margin,
                    p.upper_margin,
                    if p.pass { 1.0 } else { 0.0 },
                ]);
            }
            write_table(
                &out,
                "delta,L,diameter,pi_over_eps,inj_p,lower_margin,upper_margin,pinch_pass",
                &rows,
            )?;
            Ok(ok)
        }
        Command::Klingenberg { model, loop_length, out } => {
            format_of(&out, Format::Json, &[Format::Json])?;
            let m = load_model(&model)?;
            let eps = target_eps(&model, &m)?;
            let k = klingenberg_delta_search(&m, eps, loop_length)?;
            let r = SuiteReport::klingenberg(&m, &k)?;
            emit(&out, &json_text(&suite_doc(&r)?)?)?;
            Ok(r.violations.is_empty())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
