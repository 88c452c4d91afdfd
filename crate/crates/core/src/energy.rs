//! Homogeneous Sobolev energies and the weighted energy estimate.

use rayon::prelude::*;
use serde::Serialize;

use crate::coeffs::{CoefficientProfile, ExprCoefficient};
use crate::linalg::{vec_norm, C64};
use crate::modesolve::{integrate_mode, sample_states, zone_vector, ModeState, SolverOptions, START_FRACTION};
use crate::spectral::{ModeCoefficient, ModeCoefficients};
use crate::table::{Cell, Table};
use crate::zones::{classify, ZoneParams};
use crate::{Error, Result};

/// Allowed relative drift of the energy of a free mode.
pub const DRIFT_TOLERANCE: f64 = 1e-8;
/// Allowed relative change of the fitted `c₁` between a grid and its
/// refinement.
pub const STABILITY_TOLERANCE: f64 = 0.1;
const CONSERVATION_SAMPLES: usize = 100;

/// `λ^{2s}|û|² + λ^{2(s-1)}|∂_tû|²`.
pub fn mode_energy(lambda: f64, u: C64, ut: C64, s: f64) -> f64 {
    lambda.powf(2.0 * s) * u.norm_sqr() + lambda.powf(2.0 * (s - 1.0)) * ut.norm_sqr()
}

/// `Σ λ^{2s}|û|² + Σ λ^{2(s-1)}|∂_tû|²` over matching mode sets.
pub fn sobolev_energy(u: &ModeCoefficients, ut: &ModeCoefficients, s: f64) -> Result<f64> {
    if u.len() != ut.len() {
        return Err(Error::InvalidInput("energy needs matching mode sets".into()));
    }
    u.entries()
        .iter()
        .zip(ut.entries())
        .map(|(a, b)| {
            if a.index != b.index {
                return Err(Error::InvalidInput(format!("mode {} paired with mode {}", a.index, b.index)));
            }
            Ok(mode_energy(a.lambda, a.value, b.value, s))
        })
        .sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct ConservationReport {
    pub lambda: f64,
    pub s: f64,
    pub max_drift: f64,
    pub passed: bool,
}

/// Evolves the data `(0, 1)` with `b ≡ 1` and records the largest relative
/// change of the mode energy on an equispaced grid of `[t0, t1]`.
pub fn conservation_check(lambda: f64, t0: f64, t1: f64, s: f64, opts: &SolverOptions) -> Result<ConservationReport> {
    if !(t1 > t0) {
        return Err(Error::InvalidInput(format!("need t0 < t1, got [{t0}, {t1}]")));
    }
    let b = ExprCoefficient::constant(1.0);
    let init = ModeState::real(t0, 0.0, 1.0, lambda);
    let times: Vec<f64> =
        (1..=CONSERVATION_SAMPLES).map(|i| t0 + (t1 - t0) * i as f64 / CONSERVATION_SAMPLES as f64).collect();
    let states = sample_states(&b, 1.0, lambda, &init, &times, opts)?;
    let e0 = mode_energy(lambda, init.u, init.ut, s);
    let max_drift = states
        .iter()
        .map(|st| (mode_energy(lambda, st.u, st.ut, s) - e0).abs() / e0)
        .fold(0.0, f64::max);
    Ok(ConservationReport { lambda, s, max_drift, passed: max_drift <= DRIFT_TOLERANCE })
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyRow {
    pub index: i64,
    pub lambda: f64,
    /// `sup_t |V(t, λ)|` with the micro-energy of the current zone.
    pub sup_v: f64,
    /// `λ|û₀| + |û₁|`.
    pub rhs: f64,
    pub ratio: f64,
    pub t_lambda: f64,
    pub nu_t_lambda: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub rows: Vec<EnergyRow>,
    /// `sup log(ratio)/ν(t_λ)` over rows with `λ > M`.
    pub c1: f64,
    /// The same supremum over every other such row.
    pub c1_coarse: f64,
    pub stable: bool,
    pub passed: bool,
}

impl EnergyReport {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["lambda", "sup_v", "rhs", "ratio", "nu_t_lambda"]);
        for r in &self.rows {
            t.push(vec![r.lambda.into(), r.sup_v.into(), r.rhs.into(), r.ratio.into(), Cell::Real(r.nu_t_lambda)]);
        }
        t
    }
}

/// `(û₀, û₁) = (1/λ, 1)` for each frequency, indexed in order.
pub fn default_initial_data(lambdas: &[f64]) -> Result<(ModeCoefficients, ModeCoefficients)> {
    let make = |f: &dyn Fn(f64) -> f64| {
        ModeCoefficients::new(
            lambdas
                .iter()
                .enumerate()
                .map(|(i, &l)| ModeCoefficient { index: i as i64, lambda: l, value: C64::new(f(l), 0.0) })
                .collect(),
        )
    };
    Ok((make(&|l| 1.0 / l)?, make(&|_| 1.0)?))
}

/// Evolves every mode across the strip and fits the loss constant `c₁` of
/// `|V(t, λ)| ≲ exp(c₁ ν(t_λ)) (λ|û₀| + |û₁|)`.
///
/// Stability compares the fit on all modes above `M` with the fit on every
/// other one of them.
pub fn verify_estimate(
    profile: &CoefficientProfile,
    params: &ZoneParams,
    u0: &ModeCoefficients,
    u1: &ModeCoefficients,
    opts: &SolverOptions,
) -> Result<EnergyReport> {
    if u0.len() != u1.len() || u0.entries().iter().zip(u1.entries()).any(|(a, b)| a.index != b.index) {
        return Err(Error::InvalidInput("initial data need matching mode sets".into()));
    }
    let rows = u0
        .entries()
        .par_iter()
        .zip(u1.entries().par_iter())
        .map(|(a, b)| mode_row(profile, params, a, b.value, opts))
        .collect::<Result<Vec<_>>>()?;
    if rows.iter().any(|r| !r.ratio.is_finite()) {
        return Err(Error::Verification("non-finite energy ratio".into()));
    }
    let high: Vec<&EnergyRow> = rows.iter().filter(|r| r.lambda > params.m).collect();
    if high.is_empty() {
        return Err(Error::InvalidInput(format!("no mode above M = {}", params.m)));
    }
    let fit = |rows: &mut dyn Iterator<Item = &&EnergyRow>| {
        rows.map(|r| r.ratio.ln() / r.nu_t_lambda).fold(f64::NEG_INFINITY, f64::max)
    };
    let c1 = fit(&mut high.iter());
    let c1_coarse = fit(&mut high.iter().step_by(2));
    let stable = high.len() >= 2 && (c1 - c1_coarse).abs() <= STABILITY_TOLERANCE * c1.abs().max(c1_coarse.abs());
    Ok(EnergyReport { rows, c1, c1_coarse, stable, passed: stable })
}

fn mode_row(
    profile: &CoefficientProfile,
    params: &ZoneParams,
    u0: &ModeCoefficient,
    u1: C64,
    opts: &SolverOptions,
) -> Result<EnergyRow> {
    let lambda = u0.lambda;
    let horizon = profile.horizon();
    let b = profile.coefficient();
    let init = ModeState::new(horizon * START_FRACTION, u0.value, u1, lambda);
    let traj = integrate_mode(profile, lambda, horizon, &init, opts)?;
    let mut sup_v: f64 = 0.0;
    for st in &traj.states {
        let zone = classify(st.t, lambda, params, profile.nu())?;
        sup_v = sup_v.max(vec_norm(zone_vector(st, zone, b)?));
    }
    let rhs = lambda * u0.value.norm() + u1.norm();
    let t_lambda = profile.separating_time(lambda, params.p)?;
    Ok(EnergyRow {
        index: u0.index,
        lambda,
        sup_v,
        rhs,
        ratio: sup_v / rhs,
        t_lambda,
        nu_t_lambda: profile.nu_at(t_lambda)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::NuFunction;

    #[test]
    fn single_mode_energy() {
        assert_eq!(mode_energy(5.0, C64::new(0.0, 0.0), C64::new(0.0, 1.0), 1.0), 1.0);
    }

    #[test]
    fn modes_add() {
        let c = |i, l, v: f64| ModeCoefficient { index: i, lambda: l, value: C64::new(v, 0.0) };
        let u = ModeCoefficients::new(vec![c(1, 2.0, 0.5), c(2, 3.0, -1.0)]).unwrap();
        let ut = ModeCoefficients::new(vec![c(1, 2.0, 1.0), c(2, 3.0, 2.0)]).unwrap();
        let total = sobolev_energy(&u, &ut, 1.5).unwrap();
        let parts = mode_energy(2.0, C64::new(0.5, 0.0), C64::new(1.0, 0.0), 1.5)
            + mode_energy(3.0, C64::new(-1.0, 0.0), C64::new(2.0, 0.0), 1.5);
        assert!((total - parts).abs() < 1e-14 * total);
    }

    #[test]
    fn harmonic_energy_is_conserved() {
        for (lambda, s) in [(1.0, 1.0), (64.0, 1.0), (64.0, 0.5)] {
            let r = conservation_check(lambda, 0.0, 1.0, s, &SolverOptions::default()).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn constant_profile_has_no_loss() {
        let nu = NuFunction::constant(1.0, 1.0).unwrap();
        let profile = CoefficientProfile::from_expr("1", nu).unwrap();
        let params = ZoneParams::new(4.0, 4).unwrap();
        let lambdas: Vec<f64> = (3..=9).map(|e| 2f64.powi(e)).collect();
        let (u0, u1) = default_initial_data(&lambdas).unwrap();
        let r = verify_estimate(&profile, &params, &u0, &u1, &SolverOptions::default()).unwrap();
        assert!(r.c1 <= 1e-6 && r.passed, "{r:?}");
    }
}
