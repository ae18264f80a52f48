//! Command-line front end.
//!
//! Machine-readable output goes to `--out` (written atomically) or standard
//! output; human-readable summaries go to standard error. Exit codes: `0` on
//! success, `1` when a computation fails, `2` on usage errors (including bad
//! paths), `3` when a verification report does not pass.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::format::{sig12, write_atomic};
use crate::nonlinearity::{sigma4, GConstants};
use crate::pdesim::{self, Boundary, SimConfig, SimError, Trajectory};
use crate::profiles::{Category, ProfileOptions, SelfSimilarProfile, NU1};
use crate::radiation::{self, RadialData, RadiationProfile, SampledTail};
use crate::verify::{self, VerifyConfig};

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VERIFICATION: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failure(String),
    #[error("verification failed")]
    Verification,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Failure(_) => EXIT_FAILURE,
            CliError::Verification => EXIT_VERIFICATION,
        }
    }
}

fn fail<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Failure(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "critwave", version, about = "Profiles, radiation fields, exterior simulation and verification for the radial 5D energy-critical wave equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form constants as JSON.
    Constants {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the self-similar profile with initial slope ν.
    Profile {
        #[arg(long)]
        nu: f64,
        #[arg(long, default_value_t = crate::profiles::DEFAULT_TOL)]
        tol: f64,
        /// Stop the integration at this y (≤ 1).
        #[arg(long, default_value_t = 1.0)]
        y_stop: f64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The 16-row table behind the main inequality.
    Table1 {
        #[arg(long, default_value_t = verify::DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = verify::NU0)]
        nu0: f64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every check and emit a JSON report (exit 3 unless all pass).
    Verify {
        #[arg(long, default_value_t = verify::DEFAULT_TOL)]
        tol: f64,
        /// Slope of the comparison profile (change only for sensitivity runs).
        #[arg(long, default_value_t = verify::NU0)]
        nu0: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the table as CSV.
        #[arg(long)]
        table: Option<PathBuf>,
        /// Worker threads (0 = automatic).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Radiation-field conversions.
    Radiation {
        #[command(subcommand)]
        action: RadiationAction,
    },
    /// Evolve a preset initial state on an exterior grid.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct ProfileInput {
    /// Profile CSV with columns s,G.
    #[arg(long = "in", conflicts_with = "gspec")]
    pub input: Option<PathBuf>,
    /// Closed-form profile, e.g. `bump:0:1+box:2:3`.
    #[arg(long)]
    pub gspec: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum RadiationAction {
    /// Profile → initial data CSV (r,u0,u1) on `[rmin, rmax]`.
    ToData {
        #[command(flatten)]
        profile: ProfileInput,
        #[arg(long, default_value_t = 0.05)]
        rmin: f64,
        #[arg(long, default_value_t = 10.0)]
        rmax: f64,
        #[arg(long, default_value_t = 0.05)]
        dr: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Initial data CSV (r,u0,u1) → profile CSV (s,G).
    FromData {
        #[arg(long = "in")]
        input: PathBuf,
        /// Behaviour past the last sample.
        #[arg(long, value_enum, default_value_t = TailArg::InverseCube)]
        tail: TailArg,
        #[arg(long, default_value_t = 0.05)]
        ds: f64,
        /// Largest |s| written.
        #[arg(long)]
        reach: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Residues τ₁, τ₂ at radius R.
    Residues {
        #[command(flatten)]
        profile: ProfileInput,
        #[arg(long = "R")]
        radius: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Asymptotic numbers α₁, α₂.
    Asymptotic {
        #[command(flatten)]
        profile: ProfileInput,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TailArg {
    Compact,
    InverseCube,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    GroundState,
    FreeWave,
    SelfSimilar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundaryArg {
    /// Boundary values from the preset's closed form.
    Exact,
    /// Upwind outflow; diagnostics restricted to the domain of dependence.
    Outflow,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub preset: Preset,
    /// Slope of the self-similar preset.
    #[arg(long)]
    pub nu: Option<f64>,
    /// Past profile of the free-wave preset.
    #[arg(long)]
    pub gspec: Option<String>,
    /// Scale of the ground-state preset.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long)]
    pub rmin: f64,
    #[arg(long)]
    pub rmax: f64,
    #[arg(long)]
    pub dr: f64,
    #[arg(long = "T")]
    pub t_final: f64,
    #[arg(long, default_value_t = 1.0)]
    pub cfl: f64,
    #[arg(long, default_value_t = 1)]
    pub save_every: usize,
    /// Drop the power nonlinearity.
    #[arg(long)]
    pub linear: bool,
    #[arg(long, value_enum, default_value_t = BoundaryArg::Exact)]
    pub boundary: BoundaryArg,
    /// Snapshot CSV (t,r,u,u_t).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Energy diagnostics JSON.
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            match &e {
                CliError::Verification => eprintln!("critwave: verification failed"),
                other => eprintln!("critwave: {other}"),
            }
            e.exit_code()
        }
    }
}

fn check_output(path: &Option<PathBuf>) -> Result<(), CliError> {
    let Some(p) = path else { return Ok(()) };
    if p.is_dir() {
        return Err(CliError::Usage(format!("output path {} is a directory", p.display())));
    }
    let parent = match p.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    if !parent.is_dir() {
        return Err(CliError::Usage(format!("output directory {} does not exist", parent.display())));
    }
    Ok(())
}

fn check_input(path: &Path) -> Result<(), CliError> {
    if !path.is_file() {
        return Err(CliError::Usage(format!("input file {} does not exist", path.display())));
    }
    Ok(())
}

fn emit(path: &Option<PathBuf>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => write_atomic(p, bytes).map_err(|e| CliError::Failure(format!("writing {}: {e}", p.display()))),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush()).map_err(fail)
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s.into_bytes()
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Constants { out } => {
            check_output(&out)?;
            let g = GConstants::new();
            let value = json!({
                "z0": g.z0,
                "z_max": g.z_max,
                "g_max": g.g_max,
                "sigma4": sigma4(),
                "nu0": verify::NU0,
                "nu1": NU1,
            });
            emit(&out, &to_json(&value))
        }
        Command::Profile { nu, tol, y_stop, format, out } => {
            check_output(&out)?;
            let opts = ProfileOptions { y_stop, ..ProfileOptions::with_tol(tol) };
            let p = SelfSimilarProfile::solve(nu, &opts).map_err(fail)?;
            eprintln!(
                "profile nu = {nu}: {}, sup phi = {}, drift = {:e}",
                describe(&p.category),
                sig12(p.sup_phi),
                p.energy_drift
            );
            let bytes = match format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    p.write_csv(&mut buf).map_err(fail)?;
                    buf
                }
                Format::Json => to_json(&json!({
                    "nu": p.nu,
                    "category": p.category,
                    "sup_phi": p.sup_phi,
                    "energy_drift": p.energy_drift,
                    "y_max": p.y_max(),
                })),
            };
            emit(&out, &bytes)
        }
        Command::Table1 { tol, nu0, format, out } => {
            check_output(&out)?;
            let table = verify::build_table1_for(nu0, tol).map_err(fail)?;
            let s = &table.summary;
            eprintln!(
                "total = {}, g_minus = {}, margin = {}",
                sig12(s.total),
                sig12(s.g_minus),
                sig12(s.total - s.g_minus)
            );
            let bytes = match format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    verify::write_table1_csv(&table, &mut buf).map_err(fail)?;
                    buf
                }
                Format::Json => to_json(&table),
            };
            emit(&out, &bytes)
        }
        Command::Verify { tol, nu0, out, table, jobs } => {
            check_output(&out)?;
            check_output(&table)?;
            if !(tol > 0.0) {
                return Err(CliError::Usage(format!("--tol must be positive, got {tol}")));
            }
            let report = verify::run_all(&VerifyConfig { nu0, tol, jobs });
            for item in &report.items {
                eprintln!("{:<28} {:>5}  {}", item.name, if item.pass { "PASS" } else { "FAIL" }, sig12(item.computed));
            }
            if let Some(path) = &table {
                match verify::build_table1_for(nu0, tol) {
                    Ok(t) => {
                        let mut buf = Vec::new();
                        verify::write_table1_csv(&t, &mut buf).map_err(fail)?;
                        emit(&Some(path.clone()), &buf)?;
                    }
                    Err(e) => eprintln!("table not written: {e}"),
                }
            }
            emit(&out, report.to_json().as_bytes())?;
            if report.overall {
                Ok(())
            } else {
                Err(CliError::Verification)
            }
        }
        Command::Radiation { action } => radiation_command(action),
        Command::Simulate(args) => simulate_command(args),
    }
}

fn describe(c: &Category) -> String {
    match c {
        Category::BlowUp { y_plus } => format!("blows up at y = {}", sig12(*y_plus)),
        Category::Global { limit_phi, limit_flux, .. } => {
            format!("global, phi(1) = {}, flux(1) = {}", sig12(*limit_phi), sig12(*limit_flux))
        }
        Category::Truncated { y_end } => format!("stopped at y = {}", sig12(*y_end)),
    }
}

fn load_profile(p: &ProfileInput) -> Result<RadiationProfile, CliError> {
    match (&p.input, &p.gspec) {
        (Some(path), None) => {
            let f = File::open(path).map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))?;
            radiation::read_profile_csv(BufReader::new(f)).map_err(fail)
        }
        (None, Some(spec)) => RadiationProfile::from_spec(spec).map_err(|e| CliError::Usage(e.to_string())),
        _ => Err(CliError::Usage("give exactly one of --in or --gspec".into())),
    }
}

fn check_profile_input(p: &ProfileInput) -> Result<(), CliError> {
    if let Some(path) = &p.input {
        check_input(path)?;
    }
    Ok(())
}

fn grid(rmin: f64, rmax: f64, dr: f64) -> Result<Vec<f64>, CliError> {
    if !(rmin > 0.0 && rmax > rmin && dr > 0.0) {
        return Err(CliError::Usage(format!("need 0 < rmin < rmax and dr > 0, got {rmin}, {rmax}, {dr}")));
    }
    let n = ((rmax - rmin) / dr).round() as usize;
    Ok((0..=n).map(|i| rmin + i as f64 * dr).collect())
}

fn radiation_command(action: RadiationAction) -> Result<(), CliError> {
    match action {
        RadiationAction::ToData { profile, rmin, rmax, dr, out } => {
            check_profile_input(&profile)?;
            check_output(&out)?;
            let grid = grid(rmin, rmax, dr)?;
            let g = load_profile(&profile)?;
            let d = radiation::data_from_profile(&g);
            let mut buf = Vec::new();
            radiation::write_data_csv(&d, &grid, &mut buf).map_err(fail)?;
            emit(&out, &buf)
        }
        RadiationAction::FromData { input, tail, ds, reach, out } => {
            check_input(&input)?;
            check_output(&out)?;
            if !(ds > 0.0) {
                return Err(CliError::Usage(format!("--ds must be positive, got {ds}")));
            }
            let f = File::open(&input).map_err(|e| CliError::Failure(format!("{}: {e}", input.display())))?;
            let tail = match tail {
                TailArg::Compact => SampledTail::Compact,
                TailArg::InverseCube => SampledTail::InverseCube,
            };
            let d = radiation::read_data_csv(BufReader::new(f), tail).map_err(fail)?;
            let g = radiation::profile_from_data(&d).map_err(fail)?;
            let reach = reach.unwrap_or_else(|| g.support().map(|(a, b)| a.abs().max(b.abs())).unwrap_or(10.0));
            let mut buf = Vec::new();
            radiation::write_profile_csv(&g, ds, reach, &mut buf).map_err(fail)?;
            emit(&out, &buf)
        }
        RadiationAction::Residues { profile, radius, out } => {
            check_profile_input(&profile)?;
            check_output(&out)?;
            let g = load_profile(&profile)?;
            let tau = radiation::residues(&g, radius).map_err(fail)?;
            eprintln!("tau1 = {}, tau2 = {} at R = {}", sig12(tau.tau1), sig12(tau.tau2), sig12(radius));
            emit(&out, &to_json(&tau))
        }
        RadiationAction::Asymptotic { profile, out } => {
            check_profile_input(&profile)?;
            check_output(&out)?;
            let g = load_profile(&profile)?;
            let (a1, a2) = radiation::asymptotic_numbers(&g).map_err(fail)?;
            emit(&out, &to_json(&json!({ "alpha1": a1, "alpha2": a2 })))
        }
    }
}

fn simulate_command(args: SimulateArgs) -> Result<(), CliError> {
    check_output(&args.out)?;
    check_output(&args.diagnostics)?;
    let (data, exact): (RadialData, Boundary) = match args.preset {
        Preset::GroundState => {
            if !(args.lambda > 0.0) {
                return Err(CliError::Usage(format!("--lambda must be positive, got {}", args.lambda)));
            }
            pdesim::ground_state_setup(args.lambda)
        }
        Preset::FreeWave => {
            let spec = args.gspec.as_deref().ok_or_else(|| CliError::Usage("free-wave needs --gspec".into()))?;
            let g = RadiationProfile::from_spec(spec).map_err(|e| CliError::Usage(e.to_string()))?;
            pdesim::free_wave_setup(&g)
        }
        Preset::SelfSimilar => {
            let nu = args.nu.ok_or_else(|| CliError::Usage("self-similar needs --nu".into()))?;
            if args.boundary == BoundaryArg::Exact && args.t_final >= args.rmin {
                return Err(CliError::Usage(format!(
                    "the self-similar solution lives on r > t; need --T < --rmin, got T = {} and rmin = {}",
                    args.t_final, args.rmin
                )));
            }
            let (d, b, _) = pdesim::self_similar_setup(nu).map_err(fail)?;
            (d, b)
        }
    };
    let mut cfg = SimConfig::new(args.rmin, args.rmax, args.dr, args.t_final)
        .with_cfl(args.cfl)
        .with_save_every(args.save_every)
        .with_boundary(match args.boundary {
            BoundaryArg::Exact => exact,
            BoundaryArg::Outflow => Boundary::DomainOfDependence,
        });
    if args.linear {
        cfg = cfg.linear();
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let (trajectory, failure) = match pdesim::simulate(&data, &cfg) {
        Ok(tr) => (tr, None),
        Err(SimError::BlowUp { t, r, last }) => (*last, Some(format!("blow-up guard tripped at t = {t}, r = {r}"))),
        Err(e) => return Err(fail(e)),
    };
    emit(&args.out, &snapshot_csv(&trajectory)?)?;
    if args.diagnostics.is_some() {
        emit(&args.diagnostics, &to_json(&diagnostics(&trajectory)))?;
    }
    eprintln!("saved {} levels up to t = {}", trajectory.len(), trajectory.times.last().map(|t| sig12(*t)).unwrap_or_default());
    match failure {
        Some(msg) => Err(CliError::Failure(msg)),
        None => Ok(()),
    }
}

fn snapshot_csv(tr: &Trajectory) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "r", "u", "u_t"]).map_err(fail)?;
    for k in 0..tr.len() {
        let (u, ut) = (tr.u(k), tr.u_t(k));
        let t = sig12(tr.times[k]);
        for i in 0..tr.r.len() {
            w.write_record([t.clone(), sig12(tr.r[i]), sig12(u[i]), sig12(ut[i])]).map_err(fail)?;
        }
    }
    w.into_inner().map_err(|e| CliError::Failure(e.to_string()))
}

#[derive(Debug, Serialize)]
struct EnergyPoint {
    t: f64,
    radius: f64,
    energy: Option<f64>,
}

fn diagnostics(tr: &Trajectory) -> serde_json::Value {
    let points: Vec<EnergyPoint> = tr
        .times
        .iter()
        .map(|&t| {
            let (lo, hi) = tr.config.trusted(t);
            let energy = if lo < hi { pdesim::energy(tr, t, lo).ok() } else { None };
            EnergyPoint { t, radius: lo, energy }
        })
        .collect();
    json!({
        "r_min": tr.config.r_min,
        "r_max": tr.config.r_max,
        "dr": tr.config.dr,
        "dt": tr.config.dt(),
        "nonlinearity": tr.config.nonlinearity,
        "energy": points,
    })
}
