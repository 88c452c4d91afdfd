use serde::Serialize;

use super::matrizant::{repr, volterra_series, Mat2Repr, MatrizantOptions, NodeGrid};
use super::{FundamentalSolution, Method, ModeState, NODES_PER_PANEL};
use crate::coeffs::{Coefficient, CoefficientProfile};
use crate::linalg::{Mat2, C64, I};
use crate::quad::{try_gauss_kronrod, PanelIntegrator};
use crate::{Error, Result};

/// Frequencies above this lose phase accuracy in double precision.
pub const MAX_WKB_FREQUENCY: f64 = 1_048_576.0;

/// Both steps of the diagonalization at one point `(t, λ)` of the evolution
/// zone, for the system of `V = (λ b û, D_t û)`.
#[derive(Debug, Clone, Copy)]
pub struct DiagonalizationData {
    pub t: f64,
    pub lambda: f64,
    /// `𝓜 = [[1, -1], [1, 1]]`.
    pub m: Mat2,
    /// `𝓓 = diag(λb, -λb)`.
    pub d: Mat2,
    /// `B = -(β/2) [[1, -1], [-1, 1]]` with `β = D_t b / b`.
    pub b: Mat2,
    pub n1: Mat2,
    pub n: Mat2,
    pub f0: Mat2,
    pub b1: Mat2,
    pub r1: Mat2,
    /// `τ_k = (-1)^{k+1} λ b(t)`.
    pub tau: [f64; 2],
}

impl DiagonalizationData {
    /// `‖N₁ - I‖`.
    pub fn deviation(&self) -> f64 {
        self.n1.norm()
    }

    /// `B + [N⁽¹⁾, 𝓓] - F⁽⁰⁾`, which the construction makes vanish.
    pub fn cancellation_residual(&self) -> Mat2 {
        self.b + (self.n1 * self.d - self.d * self.n1) - self.f0
    }
}

pub fn diagonalize(profile: &CoefficientProfile, lambda: f64, t: f64) -> Result<DiagonalizationData> {
    diagonalize_coefficient(profile.coefficient(), lambda, t)
}

pub fn diagonalize_coefficient(b: &dyn Coefficient, lambda: f64, t: f64) -> Result<DiagonalizationData> {
    let (bv, db, d2b) = (b.b(t)?, b.db(t)?, b.d2b(t)?);
    if !(bv > 0.0) {
        return Err(Error::Invariant(format!("b({t:e}) = {bv} is not positive")));
    }
    let beta = -I * (db / bv);
    let half = beta * 0.5;
    let bmat = Mat2::new(-half, half, half, -half);
    let f0 = Mat2::diag(-half, -half);
    let tau = [lambda * bv, -lambda * bv];
    let zero = C64::new(0.0, 0.0);
    let n12 = bmat.get(0, 1) / (tau[0] - tau[1]);
    let n21 = bmat.get(1, 0) / (tau[1] - tau[0]);
    let n1 = Mat2::new(zero, n12, n21, zero);
    // N⁽¹⁾ = -i n J with n = b'/(4λb²); D_t N⁽¹⁾ = -n' J.
    let dn = (d2b * bv - 2.0 * db * db) / (4.0 * lambda * bv * bv * bv);
    let dt_n1 = Mat2::real(0.0, -dn, dn, 0.0);
    let b1 = dt_n1 + bmat * n1 - n1 * f0;
    let n = Mat2::IDENTITY + n1;
    let inv = n.inverse().ok_or_else(|| Error::Invariant(format!("N1 is singular at t = {t:e}, lambda = {lambda}")))?;
    Ok(DiagonalizationData {
        t,
        lambda,
        m: Mat2::real(1.0, -1.0, 1.0, 1.0),
        d: Mat2::real(tau[0], 0.0, 0.0, tau[1]),
        b: bmat,
        n1,
        n,
        f0,
        b1,
        r1: inv * b1,
        tau,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct WkbResult {
    pub fundamental: FundamentalSolution,
    pub state: ModeState,
    /// `∫_s^t λ b`.
    pub phase: f64,
    /// `½ ∫_s^t b'/b`, by quadrature.
    pub log_amplitude: f64,
    /// Difference from the closed form `½ log(b(t)/b(s))`.
    pub amplitude_check: f64,
    pub h: Mat2Repr,
    pub h_terms: usize,
    pub h_error_bound: f64,
    /// `∫_s^t ‖R₁‖`.
    pub r1_integral: f64,
}

/// Propagates the evolution-zone micro-energy `V = (λbû, D_tû)` from `s`
/// to `t` through `V = 𝓜 N₁ 𝓔₁ 𝓗 N₁(s)⁻¹ 𝓜⁻¹ V(s)`, with `𝓔₁` the
/// diagonal WKB factor and `𝓗` the matrizant of `-R̃₁`.
pub fn wkb_propagate(
    profile: &CoefficientProfile,
    lambda: f64,
    t_end: f64,
    init: &ModeState,
    opts: &MatrizantOptions,
) -> Result<WkbResult> {
    wkb_propagate_coefficient(profile.coefficient(), lambda, t_end, init, opts)
}

pub fn wkb_propagate_coefficient(
    coeff: &dyn Coefficient,
    lambda: f64,
    t_end: f64,
    init: &ModeState,
    opts: &MatrizantOptions,
) -> Result<WkbResult> {
    if !(lambda > 0.0 && lambda <= MAX_WKB_FREQUENCY) {
        return Err(Error::OutOfRange { what: "lambda", value: lambda, range: format!("(0, {MAX_WKB_FREQUENCY}]") });
    }
    let s = init.t;
    let (lo, hi) = if s <= t_end { (s, t_end) } else { (t_end, s) };
    let sign = if s <= t_end { 1.0 } else { -1.0 };
    let phase = sign
        * try_gauss_kronrod(|r| Ok(lambda * coeff.b(r)?), lo, hi, 1e-12 * lambda * (hi - lo), 1e-15)?.value;
    let log_amplitude =
        sign * 0.5 * try_gauss_kronrod(|r| Ok(coeff.db(r)? / coeff.b(r)?), lo, hi, 1e-14, 1e-13)?.value;
    let (b_s, b_t) = (coeff.b(s)?, coeff.b(t_end)?);
    let amplitude_check = log_amplitude - 0.5 * (b_t / b_s).ln();

    let r1_integral = if hi > lo {
        try_gauss_kronrod(|r| Ok(diagonalize_coefficient(coeff, lambda, r)?.r1.norm()), lo, hi, 1e-14, 1e-10)?.value
    } else {
        0.0
    };

    // R̃₁ oscillates like e^{±2iθ}; keep about one radian of 2θ per panel.
    let panels = opts.panels.unwrap_or_else(|| ((2.0 * phase.abs()).ceil() as usize).max(4));
    let integrator = PanelIntegrator::new(NODES_PER_PANEL);
    let grid = NodeGrid::new(s, t_end, panels, &integrator);
    let node_phase = cumulative(&grid, &integrator, |r| Ok(lambda * coeff.b(r)?))?;
    let values = grid
        .nodes
        .iter()
        .zip(&node_phase)
        .map(|(&r, &theta)| -> Result<Mat2> {
            let r1 = diagonalize_coefficient(coeff, lambda, r)?.r1;
            let rot = C64::from_polar(1.0, 2.0 * theta);
            // E₁(s,r) R₁ E₁(r,s): the real amplitude cancels.
            let tilde = Mat2::new(r1.get(0, 0), r1.get(0, 1) / rot, r1.get(1, 0) * rot, r1.get(1, 1));
            Ok(-tilde)
        })
        .collect::<Result<Vec<_>>>()?;
    let h = volterra_series(&grid, &values, &integrator, r1_integral, opts)?;

    let amp = log_amplitude.exp();
    let e1 = Mat2::diag(C64::from_polar(amp, phase), C64::from_polar(amp, -phase));
    let start = diagonalize_coefficient(coeff, lambda, s)?;
    let end = diagonalize_coefficient(coeff, lambda, t_end)?;
    let m = start.m;
    let m_inv = m.inverse().expect("M is invertible");
    let n_s_inv = start.n.inverse().expect("checked in diagonalize");
    let matrix = m * end.n * e1 * h.matrix * n_s_inv * m_inv;

    let v0 = [init.u * (lambda * b_s), -I * init.ut];
    let v = matrix.apply(v0);
    let state = ModeState { t: t_end, u: v[0] / (lambda * b_t), ut: I * v[1], lambda };
    Ok(WkbResult {
        fundamental: FundamentalSolution::new(matrix, s, t_end, lambda, Method::Wkb),
        state,
        phase,
        log_amplitude,
        amplitude_check,
        h: repr(&h.matrix),
        h_terms: h.terms,
        h_error_bound: h.error_bound(),
        r1_integral,
    })
}

// ∫_s^x f at every node of the grid.
fn cumulative(
    grid: &NodeGrid,
    integrator: &PanelIntegrator,
    f: impl Fn(f64) -> Result<f64>,
) -> Result<Vec<f64>> {
    let n = integrator.len();
    let h = grid.width();
    let weights = integrator.rule().weights();
    let samples = grid.nodes.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    let mut out = vec![0.0; samples.len()];
    let mut base = 0.0;
    for p in 0..grid.panels {
        let off = p * n;
        for i in 0..n {
            let mut acc = base;
            for j in 0..n {
                acc += integrator.weight(i, j, h) * samples[off + j];
            }
            out[off + i] = acc;
        }
        for j in 0..n {
            base += 0.5 * h * weights[j] * samples[off + j];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::ExprCoefficient;

    #[test]
    fn constant_coefficient_has_trivial_diagonalization() {
        let b = ExprCoefficient::constant(2.0);
        let d = diagonalize_coefficient(&b, 100.0, 0.3).unwrap();
        assert_eq!(d.b, Mat2::ZERO);
        assert_eq!(d.n, Mat2::IDENTITY);
        assert_eq!(d.r1, Mat2::ZERO);
    }

    #[test]
    fn first_three_terms_cancel() {
        let b = ExprCoefficient::parse("2 + sin(log(1/t))").unwrap();
        for (lambda, t) in [(1e3, 0.2), (5e4, 0.01), (2e5, 1e-3)] {
            let d = diagonalize_coefficient(&b, lambda, t).unwrap();
            let res = d.cancellation_residual();
            assert!(res.norm() <= 1e-15 * d.b.norm().max(1.0), "{res:?}");
        }
    }

    #[test]
    fn harmonic_case_reconstructs_sine() {
        let b = ExprCoefficient::constant(1.0);
        let lambda = 300.0;
        let init = ModeState { t: 0.1, u: C64::new(0.0, 0.0), ut: C64::new(1.0, 0.0), lambda };
        let r = wkb_propagate_coefficient(&b, lambda, 0.35, &init, &MatrizantOptions::default()).unwrap();
        let expect = (lambda * 0.25f64).sin() / lambda;
        assert!((r.state.u - C64::new(expect, 0.0)).norm() < 1e-13);
        assert!((r.state.ut - C64::new((lambda * 0.25f64).cos(), 0.0)).norm() < 1e-11);
        assert!(r.h_terms <= 1);
    }
}
