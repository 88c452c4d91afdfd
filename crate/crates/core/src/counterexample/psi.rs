use std::f64::consts::{PI, TAU};

use serde::Serialize;

use super::jet::Jet;
use crate::quad::{try_gauss_kronrod, GaussLegendre};
use crate::{Error, Result};

pub const DEFAULT_RADIUS: f64 = 2.0;
const TABLE_PANELS: usize = 256;
const TABLE_NODES: usize = 16;
// Beyond this the bump and all its tabulated derivatives are below 1e-280.
const FLAT_CUTOFF: f64 = 700.0;

/// `ψ(τ) = κ exp(-1/(1 - ((τ-π)/r)²))` on `|τ - π| < r`, zero elsewhere,
/// extended with period `2π`.
#[derive(Debug, Clone, Serialize)]
pub struct BumpPsi {
    pub r: f64,
    pub kappa: f64,
    /// `∫_0^{2π} ψ sin²` as tabulated.
    pub period_integral: f64,
    #[serde(skip)]
    table: Vec<f64>,
    #[serde(skip)]
    rule: GaussLegendre,
}

/// Chooses `κ` so that `∫_0^{2π} ψ sin² = π`.
pub fn calibrate_psi(r: f64) -> Result<BumpPsi> {
    if !(r > 0.0 && r < PI) {
        return Err(Error::OutOfRange { what: "psi_r", value: r, range: "(0, pi)".into() });
    }
    let raw = bump_sin2_integral(r)?;
    Ok(BumpPsi::with_amplitude(r, PI / raw))
}

/// `∫ exp(-1/(1-x²)) sin²τ dτ` over the support, `x = (τ-π)/r`.
pub fn bump_sin2_integral(r: f64) -> Result<f64> {
    let f = |t: f64| Ok(unit_bump((t - PI) / r) * t.sin().powi(2));
    Ok(try_gauss_kronrod(f, PI - r, PI + r, 1e-15, 1e-15)?.value)
}

fn unit_bump(x: f64) -> f64 {
    let q = 1.0 - x * x;
    if q <= 0.0 || 1.0 / q > FLAT_CUTOFF {
        0.0
    } else {
        (-1.0 / q).exp()
    }
}

impl BumpPsi {
    /// `ψ ≡ 0`.
    pub fn zero() -> BumpPsi {
        BumpPsi::with_amplitude(DEFAULT_RADIUS, 0.0)
    }

    fn with_amplitude(r: f64, kappa: f64) -> BumpPsi {
        let rule = GaussLegendre::new(TABLE_NODES);
        let mut psi = BumpPsi { r, kappa, period_integral: 0.0, table: Vec::new(), rule };
        let h = TAU / TABLE_PANELS as f64;
        let mut acc = 0.0;
        let mut table = Vec::with_capacity(TABLE_PANELS + 1);
        table.push(0.0);
        for p in 0..TABLE_PANELS {
            let lo = h * p as f64;
            acc += psi.rule.integrate(lo, lo + h, |t| psi.eval(t) * t.sin().powi(2));
            table.push(acc);
        }
        psi.period_integral = acc;
        psi.table = table;
        psi
    }

    pub fn eval(&self, tau: f64) -> f64 {
        self.kappa * unit_bump((tau.rem_euclid(TAU) - PI) / self.r)
    }

    pub(crate) fn jet(&self, tau: f64) -> Jet {
        let x0 = (tau.rem_euclid(TAU) - PI) / self.r;
        let q0 = 1.0 - x0 * x0;
        if self.kappa == 0.0 || q0 <= 0.0 || 1.0 / q0 > FLAT_CUTOFF {
            return Jet::constant(0.0);
        }
        let x = Jet::variable(x0 * self.r).scale(1.0 / self.r);
        let q = Jet::constant(1.0) - x * x;
        (-q.recip()).exp().scale(self.kappa)
    }

    /// `ψ^{(k)}(τ)` for `k ≤ 4`.
    pub fn derivative(&self, tau: f64, k: usize) -> f64 {
        self.jet(tau).derivative(k)
    }

    /// `S(τ) = ∫_0^τ ψ sin²`, from the per-period table.
    pub fn cumulative(&self, tau: f64) -> f64 {
        let periods = (tau / TAU).floor();
        let rem = tau - periods * TAU;
        let h = TAU / TABLE_PANELS as f64;
        let panel = ((rem / h) as usize).min(TABLE_PANELS - 1);
        let lo = h * panel as f64;
        let part = if rem > lo { self.rule.integrate(lo, rem, |t| self.eval(t) * t.sin().powi(2)) } else { 0.0 };
        periods * self.period_integral + self.table[panel] + part
    }

    /// `w_ε(τ) = sin τ exp(2ε S(τ))`.
    pub fn w_eps(&self, tau: f64, eps: f64) -> f64 {
        tau.sin() * (2.0 * eps * self.cumulative(tau)).exp()
    }

    /// `[w, w', w'']`.
    pub fn w_eps_derivatives(&self, tau: f64, eps: f64) -> [f64; 3] {
        let t = Jet::variable(tau);
        let (s, _) = t.sin_cos();
        let integrand = self.jet(tau) * s * s;
        let e = integrand.integrate(self.cumulative(tau)).scale(2.0 * eps).exp();
        let w = s * e;
        [w.value(), w.derivative(1), w.derivative(2)]
    }

    /// `a_ε = 1 - 4εψ sin 2τ - 2εψ' sin²τ - 4ε²ψ² sin⁴τ`.
    pub fn a_eps(&self, tau: f64, eps: f64) -> f64 {
        self.a_eps_derivatives(tau, eps)[0]
    }

    /// `[a, a', a'']`.
    pub fn a_eps_derivatives(&self, tau: f64, eps: f64) -> [f64; 3] {
        let psi = self.jet(tau);
        if psi == Jet::constant(0.0) {
            return [1.0, 0.0, 0.0];
        }
        let (s, c) = Jet::variable(tau).sin_cos();
        let s2 = s * s;
        let a = Jet::constant(1.0)
            - (psi * s * c).scale(8.0 * eps)
            - (psi.differentiate() * s2).scale(2.0 * eps)
            - (psi * psi * s2 * s2).scale(4.0 * eps * eps);
        [a.value(), a.derivative(1), a.derivative(2)]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OdeCheck {
    pub max_residual: f64,
    pub max_w: f64,
    /// `max_residual / max_w`.
    pub relative: f64,
    pub passed: bool,
}

/// `max |w'' + a w|` over the grid, both terms from closed forms.
pub fn verify_ode(eps: f64, psi: &BumpPsi, grid: &[f64]) -> Result<OdeCheck> {
    if grid.iter().any(|&t| !(0.0..=2.0 * TAU).contains(&t)) {
        return Err(Error::InvalidInput("ODE check grid must lie in [0, 4 pi]".into()));
    }
    let (mut res, mut max_w) = (0.0f64, 0.0f64);
    for &t in grid {
        let [w, _, w2] = psi.w_eps_derivatives(t, eps);
        res = res.max((w2 + psi.a_eps(t, eps) * w).abs());
        max_w = max_w.max(w.abs());
    }
    let relative = if max_w > 0.0 { res / max_w } else { res };
    Ok(OdeCheck { max_residual: res, max_w, relative, passed: relative <= 1e-8 })
}

/// `(min, max)` of `a_ε` over `samples` equispaced points of one period.
pub fn a_eps_range(eps: f64, psi: &BumpPsi, samples: usize) -> (f64, f64) {
    (0..samples).map(|i| psi.a_eps(TAU * i as f64 / samples as f64, eps)).fold(
        (f64::INFINITY, f64::NEG_INFINITY),
        |(lo, hi), a| (lo.min(a), hi.max(a)),
    )
}
