use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use serde::Serialize;

use super::psi::{a_eps_range, calibrate_psi, BumpPsi};
use crate::coeffs::{t_lambda, verify_assumptions, Coefficient, NuFunction, RefinedInterval, DEFAULT_GRID_SIZE, T_FLOOR};
use crate::exprlang::Expr;
use crate::spectral::{Boundary, MagneticOperator1D};
use crate::{Error, Result};

/// Samples per period for the range of `a_ε`.
const RANGE_SAMPLES: usize = 100_000;
/// Relative slack between the sampled range of `a_ε` and the assumption sweeps.
const BOUND_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyConfig {
    pub epsilon: f64,
    /// Zone parameter `P`.
    #[serde(rename = "P")]
    pub zone_p: u32,
    pub p: u32,
    /// Constant integer potential on the periodic interval `(0, 2π)`.
    pub a0: i64,
    pub k_count: usize,
    pub c1: f64,
    pub psi_r: f64,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        FamilyConfig { epsilon: 0.05, zone_p: 8, p: 8, a0: 1, k_count: 8, c1: 1.0, psi_r: 2.0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyMember {
    pub k: usize,
    pub lambda: f64,
    /// Offset `N - a₀` of the periodic mode with frequency `λ_k`.
    pub mode_index: i64,
    pub t_k: f64,
    pub rho_k: f64,
    pub start: f64,
    pub end: f64,
    pub nu_t_k: f64,
    pub floor_nu: u64,
    /// `λ_k ρ_k / (4π) = 2^{p-2} ⌊ν(t_k)⌋`, in integer arithmetic.
    pub periods_multiple: u64,
    /// Floating-point `λ_k ρ_k / (4π)`, for comparison.
    pub periods_float: f64,
    /// `|2^P ν(t_k)/t_k - λ_k| / λ_k`.
    pub separating_residual: f64,
    /// Bounds of `b_k` found by the assumption sweep.
    pub b_min: f64,
    pub b_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyChecks {
    pub p_condition: bool,
    pub inside_horizon: bool,
    pub disjoint: bool,
    pub integral_multiples: bool,
    pub positive: bool,
    pub uniform_bounds: bool,
}

impl FamilyChecks {
    pub fn all(&self) -> bool {
        self.p_condition
            && self.inside_horizon
            && self.disjoint
            && self.integral_multiples
            && self.positive
            && self.uniform_bounds
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleFamily {
    pub config: FamilyConfig,
    pub horizon: f64,
    pub psi: Arc<BumpPsi>,
    /// `inf a_ε` and `sup a_ε`, shared by every `b_k²`.
    pub b0_sq: f64,
    pub b1_sq: f64,
    pub members: Vec<FamilyMember>,
    pub checks: FamilyChecks,
    #[serde(skip)]
    pub nu: NuFunction,
}

impl CounterexampleFamily {
    pub fn member(&self, k: usize) -> Result<&FamilyMember> {
        self.members
            .iter()
            .find(|m| m.k == k)
            .ok_or_else(|| Error::InvalidInput(format!("no family member k = {k}")))
    }

    pub fn coefficient(&self, k: usize) -> Result<BkCoefficient> {
        let m = self.member(k)?;
        Ok(BkCoefficient {
            t_k: m.t_k,
            lambda: m.lambda,
            start: m.start,
            end: m.end,
            eps: self.config.epsilon,
            psi: self.psi.clone(),
        })
    }
}

/// `b_k(t) = √(a_ε(λ_k(t - t_k)))` on `I_k`, `1` elsewhere.
#[derive(Debug, Clone)]
pub struct BkCoefficient {
    pub t_k: f64,
    pub lambda: f64,
    pub start: f64,
    pub end: f64,
    pub eps: f64,
    pub psi: Arc<BumpPsi>,
}

impl BkCoefficient {
    fn local(&self, t: f64) -> Option<f64> {
        (t > self.start && t < self.end).then_some(self.lambda * (t - self.t_k))
    }

    /// `(b, b', b'')`.
    pub fn derivatives(&self, t: f64) -> [f64; 3] {
        let Some(s) = self.local(t) else { return [1.0, 0.0, 0.0] };
        let [a, a1, a2] = self.psi.a_eps_derivatives(s, self.eps);
        let b = a.sqrt();
        let l = self.lambda;
        [b, l * a1 / (2.0 * b), l * l * (a2 / (2.0 * b) - a1 * a1 / (4.0 * b * b * b))]
    }
}

impl Coefficient for BkCoefficient {
    fn b(&self, t: f64) -> Result<f64> {
        Ok(self.derivatives(t)[0])
    }

    fn db(&self, t: f64) -> Result<f64> {
        Ok(self.derivatives(t)[1])
    }

    fn d2b(&self, t: f64) -> Result<f64> {
        Ok(self.derivatives(t)[2])
    }

    fn b_squared(&self, t: f64) -> Result<f64> {
        Ok(self.local(t).map_or(1.0, |s| self.psi.a_eps(s, self.eps)))
    }

    fn refined_intervals(&self) -> Vec<RefinedInterval> {
        vec![RefinedInterval { start: self.start, end: self.end, frequency: self.lambda }]
    }

    fn label(&self) -> String {
        format!("b_k(lambda = {})", self.lambda)
    }
}

/// Builds `λ_k`, `t_k`, `ρ_k`, `I_k` and `b_k²` for `k = 1..=k_count`.
///
/// Member `k` aims at `ν(t_k) ≈ ⌊ν(T)⌋ + k + 1/2`, keeping `ν(t_k)` away
/// from integers. `λ_k` is the nearest lattice frequency and `t_k` then
/// solves `2^P ν(t_k) = λ_k t_k` exactly.
pub fn build_family(config: &FamilyConfig, nu: &NuFunction) -> Result<CounterexampleFamily> {
    let FamilyConfig { epsilon, zone_p, p, a0, k_count, c1, psi_r } = *config;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::OutOfRange { what: "epsilon", value: epsilon, range: "(0, inf)".into() });
    }
    if !(2..=60).contains(&p) {
        return Err(Error::OutOfRange { what: "p", value: p as f64, range: "[2, 60]".into() });
    }
    if k_count == 0 {
        return Err(Error::InvalidInput("k_max must be at least 1".into()));
    }
    let p_condition = 2f64.powi(p as i32 - 1) * epsilon * PI > c1 + 1.0;
    if !p_condition {
        return Err(Error::InvalidInput(format!("2^(p-1) eps pi > c1 + 1 fails for p = {p}, eps = {epsilon}, c1 = {c1}")));
    }
    let horizon = nu.horizon();
    let nu_top = nu.eval(horizon)?;
    if nu.is_constant() || nu.eval(T_FLOOR)? < nu_top + k_count as f64 + 1.0 {
        return Err(Error::InvalidInput("the counterexample needs nu(t) -> infinity as t -> 0".into()));
    }
    let psi = Arc::new(calibrate_psi(psi_r)?);
    let (b0_sq, b1_sq) = a_eps_range(epsilon, &psi, RANGE_SAMPLES);
    let lattice = MagneticOperator1D::new(TAU, Expr::num(a0 as f64), Boundary::Periodic)?;
    let scale = 2f64.powi(zone_p as i32);

    let mut members = Vec::with_capacity(k_count);
    for k in 1..=k_count {
        let target = nu_top.floor() + k as f64 + 0.5;
        let t_star = solve_nu(nu, target)?;
        let lambda = (scale * nu.eval(t_star)? / t_star).round();
        if !(lambda >= 1.0 && lambda < 2f64.powi(53)) {
            return Err(Error::OutOfRange { what: "lambda_k", value: lambda, range: "[1, 2^53)".into() });
        }
        let mode_index = lambda as i64;
        if lattice.frequency(mode_index) != lambda {
            return Err(Error::Invariant(format!("lambda = {lambda} is not a lattice frequency")));
        }
        let t_k = t_lambda(nu, lambda, zone_p)?;
        let nu_t_k = nu.eval(t_k)?;
        let floor_nu = nu_t_k.floor() as u64;
        let rho_k = 2f64.powi(p as i32 - zone_p as i32) * PI * t_k * floor_nu as f64 / nu_t_k;
        let (start, end) = (t_k - 0.5 * rho_k, t_k + 0.5 * rho_k);
        if !(start > 0.0 && end <= horizon) {
            return Err(Error::Verification(format!(
                "I_{k} = [{start:e}, {end:e}] escapes (0, {horizon}] for P = {zone_p}, p = {p}"
            )));
        }
        let bk = BkCoefficient { t_k, lambda, start, end, eps: epsilon, psi: psi.clone() };
        let report = verify_assumptions(&bk, nu, DEFAULT_GRID_SIZE)?;
        members.push(FamilyMember {
            k,
            lambda,
            mode_index,
            t_k,
            rho_k,
            start,
            end,
            nu_t_k,
            floor_nu,
            periods_multiple: (1u64 << (p - 2)) * floor_nu,
            periods_float: lambda * rho_k / (4.0 * PI),
            separating_residual: (scale * nu_t_k / t_k - lambda).abs() / lambda,
            b_min: report.c1,
            b_max: report.c2,
        });
    }

    let disjoint = members.windows(2).all(|w| w[1].end < w[0].start);
    let integral_multiples = members.iter().all(|m| m.floor_nu >= 1 && m.periods_multiple >= 1);
    // Every b_k samples the same profile a_ε, so the sweeps must stay inside its range.
    let (b0, b1) = (b0_sq.sqrt(), b1_sq.sqrt());
    let uniform_bounds =
        members.iter().all(|m| m.b_min >= b0 * (1.0 - BOUND_SLACK) && m.b_max <= b1 * (1.0 + BOUND_SLACK));
    let checks = FamilyChecks {
        p_condition,
        inside_horizon: true,
        disjoint,
        integral_multiples,
        positive: b0_sq > 0.0,
        uniform_bounds,
    };
    if !checks.all() {
        return Err(Error::Verification(format!("family invariants failed: {checks:?}")));
    }
    Ok(CounterexampleFamily { config: *config, horizon, psi, b0_sq, b1_sq, members, checks, nu: nu.clone() })
}

// Root of ν(t) = target; ν decreases in t.
fn solve_nu(nu: &NuFunction, target: f64) -> Result<f64> {
    let (mut lo, mut hi) = (T_FLOOR, nu.horizon());
    if nu.eval(hi)? > target || nu.eval(lo)? < target {
        return Err(Error::NoRoot("nu(t) = target"));
    }
    for _ in 0..400 {
        let mid = if hi > 2.0 * lo { lo.sqrt() * hi.sqrt() } else { 0.5 * (lo + hi) };
        if mid <= lo || mid >= hi {
            break;
        }
        if nu.eval(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
