//! Decomposition of the extended phase space `(t, λ)` into the low
//! frequency, pseudo-differential and evolution zones, the micro-energies
//! attached to them, and numerical estimators for the symbol classes
//! `S^r{m₁, m₂}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeffs::{separating_time, t_lambda, NuFunction, T_FLOOR};
use crate::linalg::{vec_norm, C64, I};
use crate::quad::gauss_kronrod;
use crate::table::{Cell, Table};
use crate::{Error, Result};

/// Zone cut-offs: `λ ≤ M` is low frequency; above it the curve
/// `tλ = 2^P ν(t)` separates the pseudo-differential zone from the
/// evolution zone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneParams {
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "P")]
    pub p: u32,
}

impl ZoneParams {
    pub fn new(m: f64, p: u32) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::OutOfRange { what: "M", value: m, range: "(0, inf)".into() });
        }
        if p > 60 {
            return Err(Error::OutOfRange { what: "P", value: p as f64, range: "[0, 60]".into() });
        }
        Ok(ZoneParams { m, p })
    }

    /// `2^P`.
    pub fn scale(&self) -> f64 {
        2f64.powi(self.p as i32)
    }

    /// `M` must not cut below the first eigenvalue.
    pub fn check_first_frequency(&self, lambda1: f64) -> Result<()> {
        if self.m < lambda1 {
            return Err(Error::InvalidInput(format!("M = {} is below the first frequency {lambda1}", self.m)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ZoneKind {
    Low,
    Pd,
    Pe,
}

impl ZoneKind {
    pub fn label(self) -> &'static str {
        match self {
            ZoneKind::Low => "low",
            ZoneKind::Pd => "pd",
            ZoneKind::Pe => "pe",
        }
    }
}

/// Zone of `(t, λ)`. The separating line itself belongs to the evolution
/// zone, so the WKB treatment starts exactly at `t_λ`.
pub fn classify(t: f64, lambda: f64, params: &ZoneParams, nu: &NuFunction) -> Result<ZoneKind> {
    if lambda <= params.m {
        return Ok(ZoneKind::Low);
    }
    // ν blows up at t = 0, where every λ is pseudo-differential.
    if t < T_FLOOR {
        return Ok(ZoneKind::Pd);
    }
    if t * lambda < params.scale() * nu.eval(t)? {
        Ok(ZoneKind::Pd)
    } else {
        Ok(ZoneKind::Pe)
    }
}

/// The zone-dependent energy vector, with `D_t = -i∂_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicroEnergy {
    pub v: [C64; 2],
    pub zone: ZoneKind,
}

impl MicroEnergy {
    pub fn norm(&self) -> f64 {
        vec_norm(self.v)
    }
}

/// `(û, D_tû)` in the low zone, `(λû, D_tû)` in the pseudo-differential zone
/// and `(λb û, D_tû)` in the evolution zone.
pub fn micro_energy(lambda: f64, u: C64, ut: C64, zone: ZoneKind, b: f64) -> MicroEnergy {
    let dt = -I * ut;
    let first = match zone {
        ZoneKind::Low => u,
        ZoneKind::Pd => u * lambda,
        ZoneKind::Pe => u * (lambda * b),
    };
    MicroEnergy { v: [first, dt], zone }
}

/// Zone map on a tensor grid, one row per `(t, λ)`.
pub fn zone_map(params: &ZoneParams, nu: &NuFunction, times: &[f64], lambdas: &[f64]) -> Result<Table> {
    let mut table = Table::new(["t", "lambda", "zone"]);
    for &lambda in lambdas {
        for &t in times {
            let z = classify(t, lambda, params, nu)?;
            table.push(vec![Cell::Real(t), Cell::Real(lambda), z.label().into()]);
        }
    }
    Ok(table)
}

/// The class `S^r{m₁, m₂}` checked for `k ≤ kmax` time derivatives and
/// `α ≤ alpha_max` frequency derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymbolClass {
    pub m1: f64,
    pub m2: f64,
    pub kmax: usize,
    pub alpha_max: usize,
}

/// Sampling window for the symbol estimator. Level `ℓ` of the refinement
/// uses `λ ∈ [lambda_min, lambda_max 2^ℓ]` with `2^ℓ` times as many samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymbolGrid {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_points: usize,
    pub t_points: usize,
    pub levels: usize,
}

impl Default for SymbolGrid {
    fn default() -> Self {
        SymbolGrid { lambda_min: 1024.0, lambda_max: 8192.0, lambda_points: 6, t_points: 24, levels: 4 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SymbolConstant {
    pub k: usize,
    pub alpha: usize,
    /// Fitted `C_{k,α}` on the finest level.
    pub constant: f64,
    pub by_level: Vec<f64>,
    pub stable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SymbolEstimate {
    pub class: SymbolClass,
    pub constants: Vec<SymbolConstant>,
    pub passed: bool,
}

/// Relative steps of the time and frequency differences. Fourth-order mixed
/// differences amplify rounding by `(h_t h_λ)^{-2}`, so the steps are wider
/// than the usual `1e-4`.
const H_T: f64 = 1e-3;
const H_L: f64 = 1e-2;
/// Margin kept between samples and the separating line.
const BOUNDARY_MARGIN: f64 = 0.01;

/// Estimates `sup |D_t^k ∂_λ^α a| / (λ^{m₁-α} (ν/t)^{m₂+k})` over the
/// evolution zone by central differences with `h_t = 10⁻³ t` and
/// `h_λ = max(1, 10⁻² λ)`.
///
/// A constant is accepted when its estimate does not grow by more than 1% in
/// each of the last three refinement levels.
pub fn symbol_class_estimate<F>(
    a: F,
    class: SymbolClass,
    nu: &NuFunction,
    params: &ZoneParams,
    grid: &SymbolGrid,
) -> Result<SymbolEstimate>
where
    F: Fn(f64, f64) -> Result<C64> + Sync,
{
    if class.kmax > 2 || class.alpha_max > 2 {
        return Err(Error::InvalidInput("symbol estimator supports k, alpha <= 2".into()));
    }
    if grid.levels == 0 || grid.lambda_points < 2 || grid.t_points < 2 {
        return Err(Error::InvalidInput("symbol grid needs at least two points per axis".into()));
    }
    let horizon = nu.horizon();
    let pairs: Vec<(usize, usize)> =
        (0..=class.kmax).flat_map(|k| (0..=class.alpha_max).map(move |al| (k, al))).collect();
    let mut by_level = vec![Vec::with_capacity(grid.levels); pairs.len()];
    for level in 0..grid.levels {
        let refine = 1usize << level;
        let lambda_hi = grid.lambda_max * refine as f64;
        let nl = grid.lambda_points * refine;
        let nt = grid.t_points * refine;
        let lambdas: Vec<f64> =
            (0..nl).map(|i| grid.lambda_min * (lambda_hi / grid.lambda_min).powf(i as f64 / (nl - 1) as f64)).collect();
        let mut points = Vec::with_capacity(nl * nt);
        for &lambda in &lambdas {
            let h_l = (H_L * lambda).max(1.0);
            if lambda - h_l <= params.m {
                return Err(Error::InvalidInput(format!("symbol grid at lambda = {lambda} touches the low zone")));
            }
            let t_sep = t_lambda(nu, lambda - h_l, params.p)
                .map_err(|_| Error::InvalidInput(format!("lambda = {lambda} has no evolution zone below T")))?;
            let lo = t_sep * (1.0 + BOUNDARY_MARGIN);
            let hi = horizon * (1.0 - 2.0 * H_T);
            if lo >= hi {
                return Err(Error::InvalidInput(format!("evolution zone at lambda = {lambda} is too thin")));
            }
            for j in 0..nt {
                points.push((lo * (hi / lo).powf(j as f64 / (nt - 1) as f64), lambda));
            }
        }
        let ratios: Vec<Vec<f64>> = points
            .par_iter()
            .map(|&(t, lambda)| -> Result<Vec<f64>> {
                let scale = nu.eval(t)? / t;
                let mut out = Vec::with_capacity(pairs.len());
                for &(k, al) in &pairs {
                    let d = mixed_derivative(&a, t, lambda, k, al)?;
                    let weight = lambda.powf(class.m1 - al as f64) * scale.powf(class.m2 + k as f64);
                    out.push(d.norm() / weight);
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        for (idx, slot) in by_level.iter_mut().enumerate() {
            let sup = ratios.iter().map(|r| r[idx]).fold(0.0, f64::max);
            slot.push(sup);
        }
    }
    let mut constants = Vec::with_capacity(pairs.len());
    let mut passed = true;
    for (&(k, alpha), levels) in pairs.iter().zip(by_level) {
        let finite = levels.iter().all(|v| v.is_finite());
        let growing = levels.len() >= 4
            && levels.windows(2).rev().take(3).all(|w| w[1] > w[0] * 1.01 && w[1] > 1e-300);
        let stable = finite && !growing;
        passed &= stable;
        constants.push(SymbolConstant { k, alpha, constant: *levels.last().unwrap(), by_level: levels, stable });
    }
    Ok(SymbolEstimate { class, constants, passed })
}

// Tensor-product central differences, up to second order in each variable.
fn mixed_derivative<F>(a: &F, t: f64, lambda: f64, k: usize, alpha: usize) -> Result<C64>
where
    F: Fn(f64, f64) -> Result<C64>,
{
    let stencil = |order: usize, h: f64| -> Vec<(f64, f64)> {
        match order {
            0 => vec![(0.0, 1.0)],
            1 => vec![(-h, -0.5 / h), (h, 0.5 / h)],
            _ => vec![(-h, 1.0 / (h * h)), (0.0, -2.0 / (h * h)), (h, 1.0 / (h * h))],
        }
    };
    let h_t = H_T * t;
    let h_l = (H_L * lambda).max(1.0);
    let mut sum = C64::new(0.0, 0.0);
    for (dt, wt) in stencil(k, h_t) {
        for (dl, wl) in stencil(alpha, h_l) {
            sum += a(t + dt, lambda + dl)? * (wt * wl);
        }
    }
    Ok(sum)
}

#[derive(Debug, Clone, Serialize)]
pub struct IntegralBoundRow {
    pub lambda: f64,
    pub t_lambda: f64,
    /// `sup_t |∫_{t_λ}^t a(τ, λ) dτ|` over `t ∈ [t_λ, T]`.
    pub integral: f64,
    pub nu_t_lambda: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntegralBoundReport {
    pub rows: Vec<IntegralBoundRow>,
    /// Smallest `C` with `|∫ a| ≤ C ν(t_λ)` on the grid.
    pub constant: f64,
}

const INTEGRAL_PIECES: usize = 64;

/// Checks `|∫_{t_λ}^t a(τ, λ) dτ| ≲ ν(t_λ)` on a set of frequencies.
pub fn integral_bound_check<F>(
    a: F,
    lambdas: &[f64],
    nu: &NuFunction,
    params: &ZoneParams,
) -> Result<IntegralBoundReport>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let horizon = nu.horizon();
    let rows = lambdas
        .par_iter()
        .map(|&lambda| -> Result<IntegralBoundRow> {
            let t0 = separating_time(nu, lambda, params.p)?;
            let mut acc = 0.0f64;
            let mut sup = 0.0f64;
            let ratio = horizon / t0;
            let mut lo = t0;
            for i in 1..=INTEGRAL_PIECES {
                let hi = if i == INTEGRAL_PIECES { horizon } else { t0 * ratio.powf(i as f64 / INTEGRAL_PIECES as f64) };
                if hi > lo {
                    let q = gauss_kronrod(|tau| a(tau, lambda), lo, hi, 1e-14, 1e-12)?;
                    acc += q.value;
                    sup = sup.max(acc.abs());
                }
                lo = hi;
            }
            let nu_t = nu.eval(t0)?;
            Ok(IntegralBoundRow { lambda, t_lambda: t0, integral: sup, nu_t_lambda: nu_t, ratio: sup / nu_t })
        })
        .collect::<Result<Vec<_>>>()?;
    let constant = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(IntegralBoundReport { rows, constant })
}

#[cfg(test)]
mod tests {
    use super::*;

    const E_INV: f64 = 0.367_879_441_171_442_33;

    #[test]
    fn classify_examples() {
        let one = NuFunction::constant(1.0, 1.0).unwrap();
        let low = ZoneParams::new(10.0, 4).unwrap();
        assert_eq!(classify(0.3, 5.0, &low, &one).unwrap(), ZoneKind::Low);
        assert_eq!(classify(0.25, 32.0, &low, &one).unwrap(), ZoneKind::Pd);
        assert_eq!(classify(0.5, 32.0, &low, &one).unwrap(), ZoneKind::Pe);
        assert_eq!(classify(0.0, 32.0, &low, &one).unwrap(), ZoneKind::Pd);
    }

    #[test]
    fn micro_energy_examples() {
        let v = micro_energy(3.0, C64::new(1.0, 0.0), C64::new(0.0, 0.0), ZoneKind::Pe, 2.0);
        assert_eq!(v.v[0], C64::new(6.0, 0.0));
        assert_eq!(v.norm(), 6.0);
        let v = micro_energy(3.0, C64::new(0.0, 0.0), I, ZoneKind::Low, 2.0);
        assert_eq!(v.norm(), 1.0);
        let (u, ut) = (C64::new(0.3, -0.1), C64::new(2.0, 1.0));
        let pd = micro_energy(7.0, u, ut, ZoneKind::Pd, 1.5);
        let pe = micro_energy(7.0, u, ut, ZoneKind::Pe, 1.5);
        assert!((pe.v[0] - pd.v[0] * 1.5).norm() < 1e-15);
        assert_eq!(pe.v[1], pd.v[1]);
    }

    #[test]
    fn constant_symbol_in_lambda() {
        let one = NuFunction::constant(1.0, 1.0).unwrap();
        let params = ZoneParams::new(10.0, 2).unwrap();
        let class = SymbolClass { m1: 1.0, m2: 0.0, kmax: 2, alpha_max: 2 };
        let est =
            symbol_class_estimate(|_, l| Ok(C64::new(l, 0.0)), class, &one, &params, &SymbolGrid::default())
                .unwrap();
        assert!(est.passed);
        let c00 = est.constants.iter().find(|c| c.k == 0 && c.alpha == 0).unwrap();
        assert!((c00.constant - 1.0).abs() < 1e-12);
        let max = est.constants.iter().map(|c| c.constant).fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 1e-6, "{max}");
    }

    #[test]
    fn growing_symbol_fails() {
        let one = NuFunction::constant(1.0, 1.0).unwrap();
        let params = ZoneParams::new(10.0, 2).unwrap();
        let class = SymbolClass { m1: 0.0, m2: 0.0, kmax: 0, alpha_max: 0 };
        let est =
            symbol_class_estimate(|_, l| Ok(C64::new(l, 0.0)), class, &one, &params, &SymbolGrid::default())
                .unwrap();
        assert!(!est.passed);
    }

    #[test]
    fn integral_bound_constant_nu() {
        let one = NuFunction::constant(1.0, 1.0).unwrap();
        let params = ZoneParams::new(10.0, 4).unwrap();
        let lambdas = [64.0, 256.0, 1024.0];
        let r = integral_bound_check(|tau, l| 1.0 / (l * tau * tau), &lambdas, &one, &params).unwrap();
        for row in &r.rows {
            let exact = 1.0 / 16.0 - 1.0 / row.lambda;
            assert!((row.integral - exact).abs() < 1e-12, "{} vs {exact}", row.integral);
        }
        assert!(r.constant <= 1.0 / 16.0);
    }

    #[test]
    fn integral_bound_log_nu() {
        let log = NuFunction::log(E_INV).unwrap();
        let params = ZoneParams::new(10.0, 4).unwrap();
        let lambdas: Vec<f64> = (8..=16).map(|k| 2f64.powi(k)).collect();
        let r = integral_bound_check(
            |tau: f64, l| {
                let v = (1.0 / tau).ln();
                v * v / (l * tau * tau)
            },
            &lambdas,
            &log,
            &params,
        )
        .unwrap();
        assert!(r.constant <= 3.0, "{}", r.constant);
    }
}
