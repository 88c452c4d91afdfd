use std::path::PathBuf;

use nuloss_core::coeffs::CoefficientProfile;
use nuloss_core::counterexample::{build_family, demonstrate_blowup, integral_periods, member_solver_options, solve_family};
use nuloss_core::energy::{default_initial_data, verify_estimate};
use nuloss_core::exprlang::parse;
use nuloss_core::modesolve::{integrate_mode, ModeState, START_FRACTION};
use nuloss_core::spectral::MagneticOperator1D;
use nuloss_core::table::Table;
use nuloss_core::zones::zone_map;
use nuloss_core::Error;
use serde_json::json;

use crate::config::{ConfigError, RunConfig};
use crate::output::Emitter;

/// Why a command stopped; decides the exit code.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Verification(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 1,
            Failure::Verification(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Failure {
        Failure::Config(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e {
            Error::Expr(_) | Error::InvalidInput(_) | Error::OutOfRange { .. } => Failure::Config(e.to_string()),
            _ => Failure::Verification(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::Config(format!("cannot write output: {e}"))
    }
}

pub type Outcome = Result<Vec<PathBuf>, Failure>;

fn octave_grid(lo: i32, hi: i32, per_octave: u32) -> Result<Vec<f64>, Failure> {
    if hi < lo || per_octave == 0 {
        return Err(Failure::Config(format!("empty frequency grid 2^{lo}..2^{hi} at {per_octave} per octave")));
    }
    let n = per_octave as i32;
    Ok((n * lo..=n * hi).map(|e| 2f64.powf(e as f64 / n as f64)).collect())
}

pub fn eigen(config: &RunConfig, count: usize) -> Outcome {
    let d = &config.domain;
    let op = MagneticOperator1D::new(d.length, parse(&d.potential).map_err(Error::from)?, d.boundary.into())?;
    let modes = op.eigen_modes(count)?;
    let mut table = Table::new(["eigenvalue", "index", "lambda"]);
    for m in &modes {
        table.push(vec![m.eigenvalue.into(), m.index.into(), m.lambda.into()]);
    }
    let out = Emitter::new(config)?;
    Ok(vec![out.table("eigen", &table)?])
}

pub fn zones(config: &RunConfig, lambda_max_exp: i32, time_points: usize) -> Outcome {
    let nu = config.nu()?;
    let params = config.zone_params();
    if time_points < 2 {
        return Err(Failure::Config("need at least two time samples".into()));
    }
    // Forty octaves below the horizon.
    let times: Vec<f64> =
        (0..time_points).map(|i| nu.horizon() * 2f64.powf(-40.0 * i as f64 / (time_points - 1) as f64)).collect();
    let lambdas = octave_grid(0, lambda_max_exp, 1)?;
    let table = zone_map(&params, &nu, &times, &lambdas)?;
    let out = Emitter::new(config)?;
    Ok(vec![out.table("zones", &table)?])
}

pub fn solve(config: &RunConfig, lambdas: &[f64]) -> Outcome {
    let profile = CoefficientProfile::from_expr(&config.coefficient.b, config.nu()?)?;
    let horizon = profile.horizon();
    let opts = config.solver_options();
    let mut table = Table::new(["lambda", "t", "re_u", "im_u", "re_ut", "im_ut", "energy"]);
    for &lambda in lambdas {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Failure::Config(format!("frequency must be positive, got {lambda}")));
        }
        // Data (1/λ, 1), so the initial energy is 2.
        let init = ModeState::real(horizon * START_FRACTION, 1.0 / lambda, 1.0, lambda);
        let traj = integrate_mode(&profile, lambda, horizon, &init, &opts)?;
        for s in &traj.states {
            table.push(vec![
                lambda.into(),
                s.t.into(),
                s.u.re.into(),
                s.u.im.into(),
                s.ut.re.into(),
                s.ut.im.into(),
                s.energy().into(),
            ]);
        }
    }
    let out = Emitter::new(config)?;
    Ok(vec![out.table("solve", &table)?])
}

pub fn verify(config: &RunConfig, lo: i32, hi: i32, per_octave: u32) -> Outcome {
    let profile = CoefficientProfile::from_expr(&config.coefficient.b, config.nu()?)?;
    let lambdas = octave_grid(lo, hi, per_octave)?;
    let (u0, u1) = default_initial_data(&lambdas)?;
    let report = verify_estimate(&profile, &config.zone_params(), &u0, &u1, &config.solver_options())?;
    let out = Emitter::new(config)?;
    let summary = json!({
        "assumptions": profile.report(),
        "c1": report.c1,
        "c1_coarse": report.c1_coarse,
        "passed": report.passed,
        "stable": report.stable,
    });
    let files = vec![out.table("energy", &report.to_table())?, out.document("verify", &summary)?];
    println!("c1 = {:.6} (every other mode: {:.6})", report.c1, report.c1_coarse);
    if !report.passed {
        return Err(Failure::Verification(format!(
            "loss constant is not stable under grid refinement: {} vs {}",
            report.c1, report.c1_coarse
        )));
    }
    Ok(files)
}

pub fn counterexample(config: &RunConfig) -> Outcome {
    let family = build_family(&config.family_config(), &config.nu()?)?;
    for m in &family.members {
        integral_periods(m)?;
    }
    let solutions = solve_family(&family, &member_solver_options())?;
    let report = demonstrate_blowup(&family, &solutions)?;
    let out = Emitter::new(config)?;
    let manifest = json!({ "family": family, "solutions": solutions });
    let files = vec![out.document("family", &manifest)?, out.table("blowup", &report.to_table())?];
    println!(
        "{} members, min slope {:.3}, log weighted energy {:.3} .. {:.3}",
        report.rows.len(),
        report.min_slope,
        report.rows[0].log_weighted,
        report.rows[report.rows.len() - 1].log_weighted
    );
    if !(family.checks.all() && solutions.iter().all(|s| s.passed) && report.passed) {
        return Err(Failure::Verification("family checks or blow-up trend failed".into()));
    }
    Ok(files)
}

pub fn classify(config: &RunConfig) -> Outcome {
    let class = config.nu()?.classify_loss()?;
    println!("{}", class.label());
    Ok(Vec::new())
}
