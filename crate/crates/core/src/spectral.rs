//! Eigenbasis of the one-dimensional magnetic operator `(i d/dx + a(x))^2`
//! on `(0, L)` and the generalized Fourier transform it induces.
//!
//! In one dimension the vector potential is a pure gauge: with
//! `A(x) = ∫_0^x a`, `(i d/dx + a)(f e^{iA}) = e^{iA} i f'`, so the operator
//! is unitarily equivalent to `-d²/dx²` and its eigenfunctions are the
//! trigonometric modes multiplied by `e^{iA(x)}`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::exprlang::Expr;
use crate::linalg::C64;
use crate::quad::GaussLegendre;
use crate::table::{Cell, Table};
use crate::{Error, Result};

/// Gauss nodes per panel for the x-quadrature.
pub const NODES_PER_PANEL: usize = 16;
/// Minimum quadrature nodes per shortest wavelength.
pub const MIN_POINTS_PER_WAVELENGTH: usize = 16;

const PHASE_PANELS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Dirichlet,
    Periodic,
}

/// `A(x) = ∫_0^x a(s) ds`, tabulated at panel ends and completed inside a
/// panel by a 16-point Gauss rule.
#[derive(Debug, Clone)]
pub struct GaugePhase {
    potential: Expr,
    constant: Option<f64>,
    length: f64,
    cumulative: Vec<f64>,
    rule: GaussLegendre,
}

impl GaugePhase {
    pub fn new(potential: Expr, length: f64) -> Result<Self> {
        potential.check_only_var("x")?;
        let constant = if potential.free_vars().is_empty() {
            Some(potential.eval1("x", 0.0)?)
        } else {
            None
        };
        let rule = GaussLegendre::new(NODES_PER_PANEL);
        let h = length / PHASE_PANELS as f64;
        let mut cumulative = Vec::with_capacity(PHASE_PANELS + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for k in 0..PHASE_PANELS {
            let lo = h * k as f64;
            let mut sum = 0.0;
            for (x, w) in rule.mapped(lo, lo + h) {
                sum += w * potential.eval1("x", x)?;
            }
            acc += sum;
            cumulative.push(acc);
        }
        Ok(GaugePhase { potential, constant, length, cumulative, rule })
    }

    pub fn potential(&self) -> &Expr {
        &self.potential
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if let Some(a) = self.constant {
            return Ok(a * x);
        }
        let h = self.length / PHASE_PANELS as f64;
        let k = ((x / h).floor().max(0.0) as usize).min(PHASE_PANELS - 1);
        let lo = h * k as f64;
        let mut sum = self.cumulative[k];
        for (s, w) in self.rule.mapped(lo, x) {
            sum += w * self.potential.eval1("x", s)?;
        }
        Ok(sum)
    }
}

/// The operator `(i d/dx + a(x))^2` on `(0, L)`.
#[derive(Debug, Clone)]
pub struct MagneticOperator1D {
    length: f64,
    boundary: Boundary,
    phase: GaugePhase,
    flux: f64,
    flux_quanta: i64,
}

impl MagneticOperator1D {
    /// Periodic operators require `A(L) ∈ 2πℤ` so that the gauge factor is
    /// itself periodic.
    pub fn new(length: f64, potential: Expr, boundary: Boundary) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::OutOfRange {
                what: "length",
                value: length,
                range: "(0, inf)".into(),
            });
        }
        let phase = GaugePhase::new(potential, length)?;
        let flux = phase.eval(length)?;
        let quanta = flux / (2.0 * PI);
        let flux_quanta = quanta.round();
        if boundary == Boundary::Periodic && (quanta - flux_quanta).abs() > 1e-9 * quanta.abs().max(1.0) {
            return Err(Error::InvalidInput(format!(
                "periodic boundary needs integer flux: A(L)/2π = {quanta}"
            )));
        }
        Ok(MagneticOperator1D { length, boundary, phase, flux, flux_quanta: flux_quanta as i64 })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn potential(&self) -> &Expr {
        self.phase.potential()
    }

    /// `Φ = A(L)`.
    pub fn flux(&self) -> f64 {
        self.flux
    }

    /// `Φ / 2π`, rounded.
    pub fn flux_quanta(&self) -> i64 {
        self.flux_quanta
    }

    pub fn gauge_phase(&self, x: f64) -> Result<f64> {
        self.phase.eval(x)
    }

    /// Frequency of the mode with the given index.
    pub fn frequency(&self, index: i64) -> f64 {
        match self.boundary {
            Boundary::Dirichlet => index as f64 * PI / self.length,
            Boundary::Periodic => 2.0 * PI * index.unsigned_abs() as f64 / self.length,
        }
    }

    /// The first `count` modes in ascending frequency. Dirichlet indices are
    /// `1, 2, 3, ...`; periodic indices are the nonzero lattice offsets
    /// `1, -1, 2, -2, ...`, each frequency carrying two modes.
    pub fn eigen_modes(&self, count: usize) -> Result<Vec<EigenMode>> {
        if count == 0 {
            return Err(Error::InvalidInput("mode count must be at least 1".into()));
        }
        let indices: Vec<i64> = match self.boundary {
            Boundary::Dirichlet => (1..=count as i64).collect(),
            Boundary::Periodic => (1..)
                .flat_map(|n: i64| [n, -n])
                .take(count)
                .collect(),
        };
        Ok(indices
            .into_iter()
            .map(|index| {
                let lambda = self.frequency(index);
                EigenMode { index, lambda, eigenvalue: lambda * lambda }
            })
            .collect())
    }

    /// `φ(x)` for the given mode, L²-normalized.
    pub fn eigenfunction(&self, mode: &EigenMode, x: f64) -> Result<C64> {
        let gauge = C64::from_polar(1.0, self.phase.eval(x)?);
        let base = match self.boundary {
            Boundary::Dirichlet => {
                C64::new((2.0 / self.length).sqrt() * (mode.lambda * x).sin(), 0.0)
            }
            Boundary::Periodic => {
                let k = 2.0 * PI * mode.index as f64 / self.length;
                C64::from_polar(1.0 / self.length.sqrt(), k * x)
            }
        };
        Ok(base * gauge)
    }

    pub fn sample(&self, mode: &EigenMode, xs: &[f64]) -> Result<Vec<C64>> {
        xs.iter().map(|&x| self.eigenfunction(mode, x)).collect()
    }

    /// Best constant in `‖ω‖ ≤ C ‖(i d/dx + a) ω‖`, i.e. `1/λ₁`.
    pub fn poincare_constant(&self) -> f64 {
        1.0 / self.frequency(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenMode {
    pub index: i64,
    /// Frequency λ (square root of the eigenvalue).
    pub lambda: f64,
    pub eigenvalue: f64,
}

/// Composite Gauss–Legendre grid on `[0, L]`.
#[derive(Debug, Clone)]
pub struct XGrid {
    length: f64,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl XGrid {
    pub fn new(length: f64, panels: usize) -> XGrid {
        let rule = GaussLegendre::new(NODES_PER_PANEL);
        let h = length / panels as f64;
        let (mut points, mut weights) = (Vec::new(), Vec::new());
        for k in 0..panels {
            let lo = h * k as f64;
            for (x, w) in rule.mapped(lo, lo + h) {
                points.push(x);
                weights.push(w);
            }
        }
        XGrid { length, points, weights }
    }

    /// Smallest grid that resolves frequencies up to `max_lambda`.
    pub fn resolving(length: f64, max_lambda: f64) -> XGrid {
        let needed = required_points(length, max_lambda);
        XGrid::new(length, needed.div_ceil(NODES_PER_PANEL).max(1))
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn l2_norm(&self, f: &[C64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, f: &[C64], g: &[C64]) -> C64 {
        self.weights.iter().zip(f.iter().zip(g)).map(|(w, (a, b))| a * b.conj() * *w).sum()
    }
}

fn required_points(length: f64, max_lambda: f64) -> usize {
    (MIN_POINTS_PER_WAVELENGTH as f64 * length * max_lambda / (2.0 * PI)).ceil() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeCoefficient {
    pub index: i64,
    pub lambda: f64,
    pub value: C64,
}

/// Spectral content `f̂(λ)` of a function, ordered by ascending frequency.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ModeCoefficients {
    entries: Vec<ModeCoefficient>,
}

impl ModeCoefficients {
    /// Sorts by frequency; rejects repeated mode indices and non-finite data.
    pub fn new(mut entries: Vec<ModeCoefficient>) -> Result<Self> {
        if entries.iter().any(|e| !(e.lambda > 0.0 && e.lambda.is_finite() && e.value.is_finite())) {
            return Err(Error::InvalidInput("coefficients need finite λ > 0 and finite values".into()));
        }
        entries.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(b.index.cmp(&a.index)));
        let mut seen: Vec<i64> = entries.iter().map(|e| e.index).collect();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("duplicate mode in coefficient table".into()));
        }
        Ok(ModeCoefficients { entries })
    }

    /// One coefficient per mode, in the modes' order.
    pub fn from_modes(modes: &[EigenMode], values: &[C64]) -> Result<Self> {
        if modes.len() != values.len() {
            return Err(Error::InvalidInput("mode/value length mismatch".into()));
        }
        ModeCoefficients::new(
            modes
                .iter()
                .zip(values)
                .map(|(m, v)| ModeCoefficient { index: m.index, lambda: m.lambda, value: *v })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[ModeCoefficient] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn values(&self) -> Vec<C64> {
        self.entries.iter().map(|e| e.value).collect()
    }

    /// Keeps the `k` lowest modes.
    pub fn truncated(&self, k: usize) -> ModeCoefficients {
        ModeCoefficients { entries: self.entries.iter().take(k).copied().collect() }
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["lambda", "re", "im"]);
        for e in &self.entries {
            t.push(vec![Cell::Real(e.lambda), Cell::Real(e.value.re), Cell::Real(e.value.im)]);
        }
        t
    }
}

/// `f̂(λ) = ∫_0^L f(x) conj(φ_λ(x)) dx` for samples of `f` on `grid`.
pub fn forward_transform(
    op: &MagneticOperator1D,
    f: &[C64],
    grid: &XGrid,
    modes: &[EigenMode],
) -> Result<ModeCoefficients> {
    if f.len() != grid.len() {
        return Err(Error::InvalidInput("sample count does not match grid".into()));
    }
    if (grid.length() - op.length()).abs() > 1e-12 * op.length() {
        return Err(Error::InvalidInput("grid length differs from operator length".into()));
    }
    let max_lambda = modes.iter().map(|m| m.lambda).fold(0.0, f64::max);
    let required = required_points(op.length(), max_lambda);
    if grid.len() < required {
        return Err(Error::UnderResolved { points: grid.len(), required });
    }
    let mut values = Vec::with_capacity(modes.len());
    for mode in modes {
        let phi = op.sample(mode, grid.points())?;
        values.push(grid.inner(f, &phi));
    }
    ModeCoefficients::from_modes(modes, &values)
}

/// Pointwise `Σ f̂(λ) φ_λ(x)`.
pub fn inverse_transform(
    op: &MagneticOperator1D,
    coeffs: &ModeCoefficients,
    modes: &[EigenMode],
    xs: &[f64],
) -> Result<Vec<C64>> {
    let mut out = vec![C64::new(0.0, 0.0); xs.len()];
    for c in coeffs.entries() {
        let mode = modes
            .iter()
            .find(|m| m.index == c.index && (m.lambda - c.lambda).abs() <= 1e-12 * m.lambda)
            .ok_or(Error::UnknownMode(c.lambda))?;
        for (o, &x) in out.iter_mut().zip(xs) {
            *o += c.value * op.eigenfunction(mode, x)?;
        }
    }
    Ok(out)
}

/// `(Σ λ^{2s} |f̂(λ)|²)^{1/2}`.
pub fn sobolev_norm(coeffs: &ModeCoefficients, s: f64) -> f64 {
    coeffs
        .entries()
        .iter()
        .map(|e| e.lambda.powf(2.0 * s) * e.value.norm_sqr())
        .sum::<f64>()
        .sqrt()
}
