//! Time coefficients `b(t)`, oscillation scales `ν(t)` and the quantities
//! derived from them: `μ(t) = t/ν(t)`, its inverse, the separating time
//! `t_λ` and the loss weight `exp(c₁ ν(t_λ))`.

mod nu;

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::exprlang::{parse, Expr, ExprError, Func};
use crate::{Error, Result};

pub use nu::{LossClass, NuFunction, NuSpec, T_FLOOR};

/// Grid points per octave of `t` in the assumption sweeps.
pub const POINTS_PER_OCTAVE: usize = 8;
/// Default sweep length: 48 octaves below the horizon.
pub const DEFAULT_GRID_SIZE: usize = 48 * POINTS_PER_OCTAVE;
/// Samples per unit of `λ_k`-scaled time inside refined intervals.
const REFINED_SAMPLES_PER_PERIOD: f64 = 32.0;
const MAX_REFINED_SAMPLES: usize = 1 << 18;
const BISECTION_ITERATIONS: usize = 200;
/// Relative growth per octave above which a running supremum counts as
/// unbounded.
const GROWTH_THRESHOLD: f64 = 0.01;

/// A positive time coefficient with two derivatives.
pub trait Coefficient: fmt::Debug + Send + Sync {
    fn b(&self, t: f64) -> Result<f64>;
    fn db(&self, t: f64) -> Result<f64>;
    fn d2b(&self, t: f64) -> Result<f64>;

    fn b_squared(&self, t: f64) -> Result<f64> {
        let b = self.b(t)?;
        Ok(b * b)
    }

    /// Intervals on which `b` varies much faster than the geometric grid
    /// resolves, each with the local oscillation frequency. Samplers and
    /// integrators treat them separately.
    fn refined_intervals(&self) -> Vec<RefinedInterval> {
        Vec::new()
    }

    fn is_constant(&self) -> bool {
        false
    }

    fn label(&self) -> String;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefinedInterval {
    pub start: f64,
    pub end: f64,
    /// Angular frequency of the fast variable.
    pub frequency: f64,
}

/// `b(t)` given as an expression in `t`, with symbolic derivatives.
#[derive(Debug, Clone)]
pub struct ExprCoefficient {
    expr: Expr,
    d1: Expr,
    d2: Expr,
    constant: Option<f64>,
}

impl ExprCoefficient {
    pub fn new(expr: Expr) -> Result<Self> {
        expr.check_only_var("t")?;
        if expr.contains_func(Func::Floor) {
            return Err(ExprError::NonDifferentiable("floor").into());
        }
        let d1 = expr.differentiate("t")?;
        let d2 = d1.differentiate("t")?;
        let constant = if expr.free_vars().is_empty() { Some(expr.eval1("t", 1.0)?) } else { None };
        Ok(ExprCoefficient { expr, d1, d2, constant })
    }

    pub fn parse(source: &str) -> Result<Self> {
        ExprCoefficient::new(parse(source)?)
    }

    pub fn constant(value: f64) -> Self {
        ExprCoefficient::new(Expr::num(value)).expect("constants are differentiable")
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }
}

impl Coefficient for ExprCoefficient {
    fn b(&self, t: f64) -> Result<f64> {
        match self.constant {
            Some(c) => Ok(c),
            None => Ok(self.expr.eval1("t", t)?),
        }
    }

    fn db(&self, t: f64) -> Result<f64> {
        match self.constant {
            Some(_) => Ok(0.0),
            None => Ok(self.d1.eval1("t", t)?),
        }
    }

    fn d2b(&self, t: f64) -> Result<f64> {
        match self.constant {
            Some(_) => Ok(0.0),
            None => Ok(self.d2.eval1("t", t)?),
        }
    }

    fn is_constant(&self) -> bool {
        self.constant.is_some()
    }

    fn label(&self) -> String {
        self.expr.to_string()
    }
}

/// Bounds `C₁ ≤ b ≤ C₂` and oscillation constant `C₃`, estimated on a sample grid.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    /// `inf b`.
    pub c1: f64,
    /// `sup b`.
    pub c2: f64,
    /// `max_k sup |b^(k)| (t/ν)^k` for `k = 1, 2`.
    pub c3: f64,
    pub c3_by_order: [f64; 2],
    pub assumption_one: bool,
    pub assumption_two: bool,
    /// Time at which `c3` is attained.
    pub worst_t: f64,
    pub samples: usize,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.assumption_one && self.assumption_two
    }
}

/// `b` together with its oscillation scale `ν` on `(0, T]`, checked against
/// Assumptions I and II.
#[derive(Debug, Clone)]
pub struct CoefficientProfile {
    b: Arc<dyn Coefficient>,
    nu: NuFunction,
    report: AssumptionReport,
}

impl CoefficientProfile {
    /// Verifies both assumptions on the default grid and rejects profiles
    /// that fail either.
    pub fn new(b: Arc<dyn Coefficient>, nu: NuFunction) -> Result<Self> {
        CoefficientProfile::with_grid(b, nu, DEFAULT_GRID_SIZE)
    }

    pub fn with_grid(b: Arc<dyn Coefficient>, nu: NuFunction, grid_size: usize) -> Result<Self> {
        let report = sweep(b.as_ref(), &nu, grid_size)?;
        if !report.assumption_one {
            return Err(Error::Verification(format!(
                "{} is not bounded away from 0 and infinity: inf b = {:e}, sup b = {:e}",
                b.label(),
                report.c1,
                report.c2
            )));
        }
        if !report.assumption_two {
            return Err(Error::Verification(format!(
                "{} oscillates faster than nu allows near t = {:e}",
                b.label(),
                report.worst_t
            )));
        }
        Ok(CoefficientProfile { b, nu, report })
    }

    pub fn from_expr(b: &str, nu: NuFunction) -> Result<Self> {
        CoefficientProfile::new(Arc::new(ExprCoefficient::parse(b)?), nu)
    }

    pub fn coefficient(&self) -> &dyn Coefficient {
        self.b.as_ref()
    }

    pub fn coefficient_arc(&self) -> Arc<dyn Coefficient> {
        Arc::clone(&self.b)
    }

    pub fn nu(&self) -> &NuFunction {
        &self.nu
    }

    pub fn horizon(&self) -> f64 {
        self.nu.horizon()
    }

    pub fn report(&self) -> &AssumptionReport {
        &self.report
    }

    pub fn c1(&self) -> f64 {
        self.report.c1
    }

    pub fn c2(&self) -> f64 {
        self.report.c2
    }

    pub fn c3(&self) -> f64 {
        self.report.c3
    }

    pub fn c4(&self) -> f64 {
        self.nu.c4()
    }

    pub fn b(&self, t: f64) -> Result<f64> {
        self.b.b(t)
    }

    pub fn nu_at(&self, t: f64) -> Result<f64> {
        self.nu.eval(t)
    }

    pub fn mu(&self, t: f64) -> Result<f64> {
        mu(&self.nu, t)
    }

    pub fn mu_inverse(&self, y: f64) -> Result<f64> {
        mu_inverse(&self.nu, y)
    }

    pub fn t_lambda(&self, lambda: f64, p: u32) -> Result<f64> {
        t_lambda(&self.nu, lambda, p)
    }

    pub fn separating_time(&self, lambda: f64, p: u32) -> Result<f64> {
        separating_time(&self.nu, lambda, p)
    }

    pub fn loss_weight(&self, lambda: f64, p: u32, c1: f64) -> Result<f64> {
        loss_weight(&self.nu, lambda, p, c1)
    }

    pub fn classify_loss(&self) -> Result<LossClass> {
        self.nu.classify_loss()
    }
}

/// Estimates `C₁, C₂, C₃` for `b` against `ν` on the geometric grid
/// `t_j = T 2^{-j/8}`, plus dense samples inside the refined intervals of `b`.
///
/// A supremum is declared unbounded when it grows by more than 1% in each of
/// the last three octaves of the sweep.
pub fn verify_assumptions(
    b: &dyn Coefficient,
    nu: &NuFunction,
    grid_size: usize,
) -> Result<AssumptionReport> {
    sweep(b, nu, grid_size)
}

struct Sample {
    t: f64,
    octave: usize,
    b: f64,
    r1: f64,
    r2: f64,
}

fn sweep(b: &dyn Coefficient, nu: &NuFunction, grid_size: usize) -> Result<AssumptionReport> {
    let horizon = nu.horizon();
    let step = 2f64.powf(-1.0 / POINTS_PER_OCTAVE as f64);
    let octave_of = |t: f64| ((horizon / t).log2().max(0.0)).floor() as usize;

    let refined = b.refined_intervals();
    // Extend the sweep so every refined interval lies inside it.
    let mut grid_size = grid_size.max(POINTS_PER_OCTAVE * 3);
    for r in &refined {
        let needed = ((horizon / r.start.max(T_FLOOR)).log2() * POINTS_PER_OCTAVE as f64).ceil() as usize;
        grid_size = grid_size.max(needed + 3 * POINTS_PER_OCTAVE);
    }

    let mut times: Vec<f64> = (0..=grid_size)
        .map(|j| horizon * step.powi(j as i32))
        .take_while(|t| *t >= T_FLOOR)
        .collect();
    for r in &refined {
        let lo = r.start.max(T_FLOOR);
        let hi = r.end.min(horizon);
        if hi <= lo {
            continue;
        }
        let periods = (hi - lo) * r.frequency / (2.0 * std::f64::consts::PI);
        let n = ((periods * REFINED_SAMPLES_PER_PERIOD).ceil() as usize).clamp(64, MAX_REFINED_SAMPLES);
        times.extend((0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64));
    }

    let samples: Vec<Sample> = times
        .par_iter()
        .map(|&t| -> Result<Sample> {
            let v = nu.eval(t)?;
            let scale = v / t;
            Ok(Sample {
                t,
                octave: octave_of(t),
                b: b.b(t)?,
                r1: b.db(t)?.abs() / scale,
                r2: b.d2b(t)?.abs() / (scale * scale),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let octaves = samples.iter().map(|s| s.octave).max().unwrap_or(0) + 1;
    // Per-octave extremes, reduced in a fixed order.
    let mut b_min = vec![f64::INFINITY; octaves];
    let mut b_max = vec![0.0f64; octaves];
    let mut r1 = vec![0.0f64; octaves];
    let mut r2 = vec![0.0f64; octaves];
    let (mut c3, mut worst_t) = (0.0f64, horizon);
    for s in &samples {
        if !(s.b.is_finite() && s.r1.is_finite() && s.r2.is_finite()) {
            return Err(Error::Invariant(format!("coefficient not finite at t = {:e}", s.t)));
        }
        let o = s.octave;
        b_min[o] = b_min[o].min(s.b);
        b_max[o] = b_max[o].max(s.b);
        r1[o] = r1[o].max(s.r1);
        r2[o] = r2[o].max(s.r2);
        let r = s.r1.max(s.r2);
        if r > c3 {
            c3 = r;
            worst_t = s.t;
        }
    }
    let c1 = b_min.iter().copied().fold(f64::INFINITY, f64::min);
    let c2 = b_max.iter().copied().fold(0.0, f64::max);
    let c3_by_order = [
        r1.iter().copied().fold(0.0, f64::max),
        r2.iter().copied().fold(0.0, f64::max),
    ];
    let inverse_b: Vec<f64> = b_min.iter().map(|v| 1.0 / v).collect();
    let assumption_one = c1 > 0.0 && !grows(&b_max) && !grows(&inverse_b);
    let assumption_two = !grows(&r1) && !grows(&r2);
    Ok(AssumptionReport {
        c1,
        c2,
        c3,
        c3_by_order,
        assumption_one,
        assumption_two,
        worst_t,
        samples: samples.len(),
    })
}

// Running supremum over octaves; true if it rose by more than the threshold
// in each of the last three octaves.
fn grows(per_octave: &[f64]) -> bool {
    let mut running = Vec::with_capacity(per_octave.len());
    let mut sup = 0.0f64;
    for &v in per_octave {
        sup = sup.max(v);
        running.push(sup);
    }
    if running.len() < 4 {
        return false;
    }
    let n = running.len();
    (n - 3..n).all(|i| running[i] > running[i - 1] * (1.0 + GROWTH_THRESHOLD))
}

/// `μ(t) = t/ν(t)`.
pub fn mu(nu: &NuFunction, t: f64) -> Result<f64> {
    Ok(t / nu.eval(t)?)
}

/// Inverse of the increasing function `μ` on `[T_FLOOR, T]`.
pub fn mu_inverse(nu: &NuFunction, y: f64) -> Result<f64> {
    let top = mu(nu, nu.horizon())?;
    let bottom = mu(nu, T_FLOOR)?;
    if !(y >= bottom && y <= top * (1.0 + 1e-12)) {
        return Err(Error::OutOfRange { what: "mu", value: y, range: format!("[{bottom:e}, {top:e}]") });
    }
    if nu.is_constant() {
        return Ok((y * nu.c4()).min(nu.horizon()));
    }
    bisect_increasing(|t| Ok(mu(nu, t)? - y), T_FLOOR, nu.horizon())
}

/// The separating time: the root of `tλ = 2^P ν(t)` in `(0, T]`.
pub fn t_lambda(nu: &NuFunction, lambda: f64, p: u32) -> Result<f64> {
    let scale = 2f64.powi(p as i32);
    let horizon = nu.horizon();
    let g = |t: f64| -> Result<f64> { Ok(t * lambda - scale * nu.eval(t)?) };
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::OutOfRange { what: "lambda", value: lambda, range: "(0, inf)".into() });
    }
    if g(horizon)? < 0.0 {
        return Err(Error::NoRoot("separating time lies beyond the horizon"));
    }
    if g(T_FLOOR)? > 0.0 {
        return Err(Error::NoRoot("separating time lies below the evaluation floor"));
    }
    if nu.is_constant() {
        return Ok(scale * nu.c4() / lambda);
    }
    bisect_increasing(g, T_FLOOR, horizon)
}

/// `t_λ`, or `T` when the whole strip `(0, T]` lies in the pseudo-differential
/// zone.
pub fn separating_time(nu: &NuFunction, lambda: f64, p: u32) -> Result<f64> {
    match t_lambda(nu, lambda, p) {
        Err(Error::NoRoot(_)) if lambda * nu.horizon() < 2f64.powi(p as i32) * nu.c4() => Ok(nu.horizon()),
        other => other,
    }
}

/// `exp(c₁ ν(t_λ))`, with `t_λ` clipped to the horizon.
pub fn loss_weight(nu: &NuFunction, lambda: f64, p: u32, c1: f64) -> Result<f64> {
    let t = separating_time(nu, lambda, p)?;
    Ok((c1 * nu.eval(t)?).exp())
}

/// Reference profile for a catalog scale: `b = 2 + sin Θ(log(1/t))` with
/// `Θ' = ν` in the variable `L = log(1/t)`, so that `b` oscillates as fast
/// as `ν` allows. The horizon is the largest `T` on which every logarithm in
/// `ν` is at least 1. A constant scale gets `b ≡ 1` on `(0, 1]`.
pub fn catalog_profile(spec: &NuSpec) -> Result<CoefficientProfile> {
    let e = std::f64::consts::E;
    let (b, horizon) = match spec {
        NuSpec::Constant { .. } => ("1".to_string(), 1.0),
        NuSpec::Log => ("2 + sin(log(1/t)^2/2)".to_string(), 1.0 / e),
        NuSpec::LogPower { gamma } => {
            let g = gamma + 1.0;
            (format!("2 + sin(log(1/t)^{g:?}/{g:?})"), 1.0 / e)
        }
        NuSpec::IteratedLog { gammas } if gammas.as_slice() == [1.0] => {
            ("2 + sin(log(1/t)^2/2*log(log(1/t)) - log(1/t)^2/4)".to_string(), (-e).exp())
        }
        // Θ = L²/2 has Θ' = L ≤ ν once the inner logarithms exceed 1.
        NuSpec::IteratedLog { gammas } if gammas.len() <= 2 => {
            let horizon = if gammas.len() == 1 { (-e).exp() } else { (-e.powf(e)).exp() };
            ("2 + sin(log(1/t)^2/2)".to_string(), horizon)
        }
        _ => return Err(Error::InvalidInput("no reference profile for this scale".into())),
    };
    CoefficientProfile::from_expr(&b, NuFunction::new(spec.clone(), horizon)?)
}

// Root of an increasing function on [lo, hi]. Bisects geometrically while the
// bracket spans more than a factor of two, then arithmetically.
fn bisect_increasing(mut g: impl FnMut(f64) -> Result<f64>, lo: f64, hi: f64) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    if g(lo)? > 0.0 || g(hi)? < 0.0 {
        return Err(Error::NoRoot("no sign change in bracket"));
    }
    for _ in 0..BISECTION_ITERATIONS {
        let mid = if hi > 2.0 * lo { lo.sqrt() * hi.sqrt() } else { 0.5 * (lo + hi) };
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
