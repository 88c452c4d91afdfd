//! Single-mode solutions of `û'' + λ² b²(t) û = 0`.
//!
//! Three independent routes are provided: adaptive integration, the
//! matrizant series of the first-order system, and the diagonalized WKB
//! propagator of the evolution zone.

mod integrate;
mod matrizant;
mod wkb;

pub use integrate::{integrate_coefficient, integrate_mode, propagate, sample_states};
pub use matrizant::{
    matrizant, tail_bound, volterra_series, Mat2Repr, MatrizantOptions, MatrizantResult, NodeGrid,
};
pub use wkb::{
    diagonalize, diagonalize_coefficient, wkb_propagate, wkb_propagate_coefficient, DiagonalizationData,
    WkbResult, MAX_WKB_FREQUENCY,
};

use serde::Serialize;

use crate::coeffs::{Coefficient, CoefficientProfile};
use crate::linalg::{Mat2, C64, I};
use crate::quad::try_gauss_kronrod;
use crate::table::{Cell, Table};
use crate::zones::{micro_energy, ZoneKind, ZoneParams};
use crate::{Error, Result};

/// Gauss nodes per panel in the spectral Volterra integration.
pub const NODES_PER_PANEL: usize = 16;

/// Fraction of the horizon where integration from "t = 0" starts; `b` may be
/// singular at the origin itself.
pub const START_FRACTION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeState {
    pub t: f64,
    pub u: C64,
    /// `∂_t û`.
    pub ut: C64,
    pub lambda: f64,
}

impl ModeState {
    pub fn new(t: f64, u: C64, ut: C64, lambda: f64) -> ModeState {
        ModeState { t, u, ut, lambda }
    }

    /// Real data `(û, ∂_tû)`.
    pub fn real(t: f64, u: f64, ut: f64, lambda: f64) -> ModeState {
        ModeState::new(t, C64::new(u, 0.0), C64::new(ut, 0.0), lambda)
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.u.is_finite() && self.ut.is_finite() && self.lambda.is_finite()
    }

    /// `Im(conj(û) ∂_tû)`, conserved for real `b`.
    pub fn wronskian(&self) -> f64 {
        (self.u.conj() * self.ut).im
    }

    /// `λ²|û|² + |∂_tû|²`.
    pub fn energy(&self) -> f64 {
        self.lambda * self.lambda * self.u.norm_sqr() + self.ut.norm_sqr()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub lambda: f64,
    pub states: Vec<ModeState>,
}

impl Trajectory {
    pub fn last(&self) -> &ModeState {
        self.states.last().expect("a trajectory holds its initial state")
    }

    pub fn to_table(&self) -> Table {
        let mut table = Table::new(["t", "re_u", "im_u", "re_ut", "im_ut"]);
        for s in &self.states {
            table.push(vec![s.t.into(), s.u.re.into(), s.u.im.into(), s.ut.re.into(), s.ut.im.into()]);
        }
        table
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { rel_tol: 1e-10, abs_tol: 1e-12 }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        for (what, v) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::OutOfRange { what, value: v, range: "(0, 1)".into() });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Matrizant,
    Wkb,
    Integrator,
}

/// `E(t, s, λ)` acting on micro-energy vectors.
#[derive(Debug, Clone, Serialize)]
pub struct FundamentalSolution {
    pub e: Mat2Repr,
    #[serde(skip)]
    pub matrix: Mat2,
    pub s: f64,
    pub t: f64,
    pub lambda: f64,
    pub method: Method,
}

impl FundamentalSolution {
    pub fn new(matrix: Mat2, s: f64, t: f64, lambda: f64, method: Method) -> Self {
        FundamentalSolution { e: matrizant::repr(&matrix), matrix, s, t, lambda, method }
    }

    pub fn norm(&self) -> f64 {
        self.matrix.norm()
    }

    /// `E(t₂, s) = E(t₂, t) E(t, s)`.
    pub fn compose(&self, later: &FundamentalSolution) -> Result<FundamentalSolution> {
        if (later.s - self.t).abs() > 1e-14 * self.t.abs().max(1.0) {
            return Err(Error::InvalidInput(format!("cannot compose at {} and {}", self.t, later.s)));
        }
        Ok(FundamentalSolution::new(later.matrix * self.matrix, self.s, later.t, self.lambda, later.method))
    }
}

impl From<MatrizantResult> for Mat2 {
    fn from(r: MatrizantResult) -> Mat2 {
        r.matrix
    }
}

/// `𝓐 = [[0, 1], [λ²b², 0]]` for `V = (û, D_tû)`.
pub fn low_zone_matrix(b: &dyn Coefficient, lambda: f64, t: f64) -> Result<Mat2> {
    Ok(Mat2::real(0.0, 1.0, lambda * lambda * b.b_squared(t)?, 0.0))
}

/// `𝓑 = [[0, λ], [λb², 0]]` for `V = (λû, D_tû)`.
pub fn pd_zone_matrix(b: &dyn Coefficient, lambda: f64, t: f64) -> Result<Mat2> {
    Ok(Mat2::real(0.0, lambda, lambda * b.b_squared(t)?, 0.0))
}

/// Micro-energy vector of a state in the given zone's coordinates.
pub fn zone_vector(state: &ModeState, zone: ZoneKind, b: &dyn Coefficient) -> Result<[C64; 2]> {
    let bv = if zone == ZoneKind::Pe { b.b(state.t)? } else { 1.0 };
    Ok(micro_energy(state.lambda, state.u, state.ut, zone, bv).v)
}

/// Inverse of [`zone_vector`].
pub fn state_from_vector(t: f64, v: [C64; 2], lambda: f64, zone: ZoneKind, b: &dyn Coefficient) -> Result<ModeState> {
    let scale = match zone {
        ZoneKind::Low => 1.0,
        ZoneKind::Pd => lambda,
        ZoneKind::Pe => lambda * b.b(t)?,
    };
    Ok(ModeState { t, u: v[0] / scale, ut: I * v[1], lambda })
}

/// `E(t, s, λ)` in zone coordinates from two integrated basis solutions.
pub fn integrator_fundamental(
    b: &dyn Coefficient,
    c2: f64,
    lambda: f64,
    s: f64,
    t: f64,
    zone: ZoneKind,
    opts: &SolverOptions,
) -> Result<FundamentalSolution> {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let mut cols = [[zero; 2]; 2];
    for (k, e) in [[one, zero], [zero, one]].into_iter().enumerate() {
        let init = state_from_vector(s, e, lambda, zone, b)?;
        let end = propagate(b, c2, lambda, &init, t, opts)?;
        cols[k] = zone_vector(&end, zone, b)?;
    }
    let m = Mat2::new(cols[0][0], cols[1][0], cols[0][1], cols[1][1]);
    Ok(FundamentalSolution::new(m, s, t, lambda, Method::Integrator))
}

#[derive(Debug, Clone, Serialize)]
pub struct NormSample {
    pub t: f64,
    pub zone: ZoneKind,
    pub norm: f64,
    /// Logarithm of the a-priori bound on `[start of zone, t]`.
    pub log_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZoneNorm {
    pub zone: ZoneKind,
    pub start: f64,
    pub end: f64,
    pub observed: f64,
    pub log_bound: f64,
    /// `log_bound - log(observed)`.
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FundamentalNormReport {
    pub lambda: f64,
    pub t_lambda: f64,
    pub nu_t_lambda: f64,
    pub pd: ZoneNorm,
    pub pe: Option<ZoneNorm>,
    /// Largest observed `log ‖E‖`.
    pub log_norm: f64,
    /// `log_norm / ν(t_λ)`, the smallest `c₁` consistent with the samples.
    pub c1_empirical: f64,
    pub samples: Vec<NormSample>,
}

impl FundamentalNormReport {
    pub fn to_table(&self) -> Table {
        let mut table = Table::new(["t", "zone", "norm", "bound", "log_bound"]);
        for s in &self.samples {
            table.push(vec![
                s.t.into(),
                Cell::from(s.zone.label()),
                s.norm.into(),
                s.log_bound.exp().into(),
                s.log_bound.into(),
            ]);
        }
        table
    }
}

const PD_SAMPLES: usize = 128;
const PE_SAMPLES: usize = 256;

/// Observed `‖E(t, s, λ)‖` for the pseudo-differential part of the strip
/// (from near zero to `t_λ`) and the evolution part (from `t_λ` to `T`),
/// next to the a-priori bounds `exp(∫‖𝓑‖)` and the WKB bound built from
/// `‖N₁‖`, `‖N₁⁻¹‖`, `√(b(t)/b(s))` and `exp(∫‖R₁‖)`.
pub fn estimate_fundamental_norm(
    profile: &CoefficientProfile,
    lambda: f64,
    params: &ZoneParams,
    opts: &SolverOptions,
) -> Result<FundamentalNormReport> {
    if !(lambda > params.m) {
        return Err(Error::OutOfRange { what: "lambda", value: lambda, range: format!("({}, inf)", params.m) });
    }
    let b = profile.coefficient();
    let c2 = profile.c2();
    let horizon = profile.horizon();
    let t_sep = profile.separating_time(lambda, params.p)?;
    let nu_sep = profile.nu_at(t_sep)?;
    let start = horizon * START_FRACTION;
    let mut samples = Vec::with_capacity(PD_SAMPLES + PE_SAMPLES);

    let pd_times: Vec<f64> =
        (1..=PD_SAMPLES).map(|i| start * (t_sep / start).powf(i as f64 / PD_SAMPLES as f64)).collect();
    let pd_norms = sampled_norms(b, c2, lambda, start, &pd_times, ZoneKind::Pd, opts)?;
    let b_norm = |r: f64| -> Result<f64> { Ok(pd_zone_matrix(b, lambda, r)?.norm()) };
    let mut acc = 0.0;
    let mut prev = start;
    for (&t, &norm) in pd_times.iter().zip(&pd_norms) {
        acc += try_gauss_kronrod(b_norm, prev, t, 1e-12, 1e-10)?.value;
        prev = t;
        samples.push(NormSample { t, zone: ZoneKind::Pd, norm, log_bound: acc });
    }
    let pd_observed = pd_norms.iter().copied().fold(0.0, f64::max);
    let pd = ZoneNorm {
        zone: ZoneKind::Pd,
        start,
        end: t_sep,
        observed: pd_observed,
        log_bound: acc,
        margin: acc - pd_observed.ln(),
    };

    let pe = if t_sep < horizon {
        let pe_times: Vec<f64> =
            (1..=PE_SAMPLES).map(|i| t_sep + (horizon - t_sep) * i as f64 / PE_SAMPLES as f64).collect();
        let pe_norms = sampled_norms(b, c2, lambda, t_sep, &pe_times, ZoneKind::Pe, opts)?;
        let d0 = diagonalize_coefficient(b, lambda, t_sep)?;
        let n0_inv = d0.n.inverse().ok_or_else(|| Error::Invariant("N1 singular at t_lambda".into()))?;
        let m_cond = d0.m.norm() * d0.m.inverse().expect("M is invertible").norm();
        let base = m_cond.ln() + n0_inv.norm().ln();
        let b0 = b.b(t_sep)?;
        let r1_norm = |r: f64| -> Result<f64> { Ok(diagonalize_coefficient(b, lambda, r)?.r1.norm()) };
        let (mut r1_int, mut prev) = (0.0, t_sep);
        let (mut sup_n, mut sup_b) = (d0.n.norm(), b0);
        let mut worst = f64::NEG_INFINITY;
        for (&t, &norm) in pe_times.iter().zip(&pe_norms) {
            r1_int += try_gauss_kronrod(r1_norm, prev, t, 1e-14, 1e-10)?.value;
            prev = t;
            sup_n = sup_n.max(diagonalize_coefficient(b, lambda, t)?.n.norm());
            sup_b = sup_b.max(b.b(t)?);
            let log_bound = base + sup_n.ln() + 0.5 * (sup_b / b0).ln() + r1_int;
            worst = worst.max(log_bound);
            samples.push(NormSample { t, zone: ZoneKind::Pe, norm, log_bound });
        }
        let observed = pe_norms.iter().copied().fold(0.0, f64::max);
        Some(ZoneNorm {
            zone: ZoneKind::Pe,
            start: t_sep,
            end: horizon,
            observed,
            log_bound: worst,
            margin: worst - observed.ln(),
        })
    } else {
        None
    };

    let log_norm = pe.as_ref().map_or(pd.observed, |z| z.observed.max(pd.observed)).ln();
    Ok(FundamentalNormReport {
        lambda,
        t_lambda: t_sep,
        nu_t_lambda: nu_sep,
        pd,
        pe,
        log_norm,
        c1_empirical: log_norm / nu_sep,
        samples,
    })
}

// ‖E(t, s)‖ at each sample time, from two basis solutions started at `s`.
fn sampled_norms(
    b: &dyn Coefficient,
    c2: f64,
    lambda: f64,
    s: f64,
    times: &[f64],
    zone: ZoneKind,
    opts: &SolverOptions,
) -> Result<Vec<f64>> {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let mut cols = Vec::with_capacity(2);
    for e in [[one, zero], [zero, one]] {
        let init = state_from_vector(s, e, lambda, zone, b)?;
        let states = sample_states(b, c2, lambda, &init, times, opts)?;
        cols.push(states.iter().map(|st| zone_vector(st, zone, b)).collect::<Result<Vec<_>>>()?);
    }
    Ok((0..times.len())
        .map(|i| Mat2::new(cols[0][i][0], cols[1][i][0], cols[0][i][1], cols[1][i][1]).norm())
        .collect())
}
