use serde::Serialize;

use crate::linalg::{Mat2, I};
use crate::quad::{try_gauss_kronrod, PanelIntegrator};
use crate::{Error, Result};

use super::NODES_PER_PANEL;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatrizantOptions {
    /// Maximum number of series terms.
    pub max_terms: usize,
    /// Requested bound on the truncated tail.
    pub tol: f64,
    /// Panel count for the node grid; chosen from `∫‖𝓐‖` when absent.
    pub panels: Option<usize>,
}

impl Default for MatrizantOptions {
    fn default() -> Self {
        MatrizantOptions { max_terms: 200, tol: 1e-10, panels: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MatrizantResult {
    pub e: Mat2Repr,
    pub terms: usize,
    /// `J = ∫_s^t ‖𝓐‖`.
    pub j: f64,
    /// Tail bound `J^{K+1}/(K+1)! e^J` after `K` terms. The series also
    /// stops once a term falls below the tolerance, so this may exceed it.
    pub remainder_bound: f64,
    /// Allowance for rounding in the summed terms, `64 ε e^J`.
    pub rounding_bound: f64,
    pub term_norms: Vec<f64>,
    #[serde(skip)]
    pub matrix: Mat2,
}

impl MatrizantResult {
    pub fn error_bound(&self) -> f64 {
        self.remainder_bound + self.rounding_bound
    }
}

/// Row-major `[re, im]` pairs, for serialization.
pub type Mat2Repr = [[[f64; 2]; 2]; 2];

pub(crate) fn repr(m: &Mat2) -> Mat2Repr {
    let c = |r: usize, k: usize| [m.get(r, k).re, m.get(r, k).im];
    [[c(0, 0), c(0, 1)], [c(1, 0), c(1, 1)]]
}

/// Equal panels on `[s, t]` with Gauss nodes; values of the system matrix
/// are sampled at the nodes.
#[derive(Debug, Clone)]
pub struct NodeGrid {
    pub s: f64,
    pub t: f64,
    pub panels: usize,
    pub nodes: Vec<f64>,
}

impl NodeGrid {
    pub fn new(s: f64, t: f64, panels: usize, integrator: &PanelIntegrator) -> NodeGrid {
        let panels = panels.max(1);
        let h = (t - s) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * integrator.len());
        for p in 0..panels {
            let lo = s + h * p as f64;
            let hi = if p + 1 == panels { t } else { lo + h };
            nodes.extend(integrator.rule().mapped(lo, hi).map(|(x, _)| x));
        }
        NodeGrid { s, t, panels, nodes }
    }

    pub fn width(&self) -> f64 {
        (self.t - self.s) / self.panels as f64
    }
}

/// Fundamental solution of `∂_t E = i 𝓐(t) E`, `E(s, s) = I`, as the
/// matrizant series `I + Σ i^k ∫𝓐∫𝓐⋯`.
///
/// Terms are generated by the equivalent Volterra recursion
/// `E_k(t) = i ∫_s^t 𝓐 E_{k-1}`, evaluated by spectral integration on every
/// Gauss panel.
pub fn matrizant<F>(a: F, s: f64, t: f64, opts: &MatrizantOptions) -> Result<MatrizantResult>
where
    F: Fn(f64) -> Result<Mat2>,
{
    if !(s.is_finite() && t.is_finite()) {
        return Err(Error::InvalidInput("matrizant interval must be finite".into()));
    }
    let j = if s == t {
        0.0
    } else {
        let (lo, hi) = if s < t { (s, t) } else { (t, s) };
        try_gauss_kronrod(|r| Ok(a(r)?.norm()), lo, hi, 1e-13, 1e-11)?.value
    };
    // About half a radian of accumulated ‖𝓐‖ per panel.
    let panels = opts.panels.unwrap_or_else(|| ((2.0 * j).ceil() as usize).max(4));
    let integrator = PanelIntegrator::new(NODES_PER_PANEL);
    let grid = NodeGrid::new(s, t, panels, &integrator);
    let values = grid.nodes.iter().map(|&x| a(x)).collect::<Result<Vec<_>>>()?;
    volterra_series(&grid, &values, &integrator, j, opts)
}

/// Series summation on a prepared grid, `values[i] = 𝓐(grid.nodes[i])`.
pub fn volterra_series(
    grid: &NodeGrid,
    values: &[Mat2],
    integrator: &PanelIntegrator,
    j: f64,
    opts: &MatrizantOptions,
) -> Result<MatrizantResult> {
    let n = integrator.len();
    let h = grid.width();
    let weights = integrator.rule().weights();
    let mut term = vec![Mat2::IDENTITY; values.len()];
    let mut total = Mat2::IDENTITY;
    let mut term_norms = Vec::new();
    let mut remainder_bound = f64::INFINITY;
    let mut terms = 0;
    let mut converged = j == 0.0;
    let mut next = vec![Mat2::ZERO; values.len()];
    for k in 1..=opts.max_terms {
        let integrand: Vec<Mat2> = values.iter().zip(&term).map(|(a, e)| (*a * *e).scale(I)).collect();
        let mut base = Mat2::ZERO;
        for p in 0..grid.panels {
            let off = p * n;
            for i in 0..n {
                let mut acc = base;
                for jj in 0..n {
                    acc = acc + integrand[off + jj].scale(integrator.weight(i, jj, h).into());
                }
                next[off + i] = acc;
            }
            for jj in 0..n {
                base = base + integrand[off + jj].scale((0.5 * h * weights[jj]).into());
            }
        }
        std::mem::swap(&mut term, &mut next);
        total = total + base;
        let norm = term.iter().map(|m| m.norm()).fold(base.norm(), f64::max);
        term_norms.push(norm);
        terms = k;
        remainder_bound = tail_bound(j, k);
        if remainder_bound <= opts.tol || norm < opts.tol {
            converged = true;
            break;
        }
    }
    let rounding_bound = 64.0 * f64::EPSILON * j.exp();
    if !converged {
        return Err(Error::SeriesNotConverged { terms, remainder: remainder_bound, tol: opts.tol });
    }
    if !total.is_finite() {
        return Err(Error::Invariant("matrizant sum is not finite".into()));
    }
    Ok(MatrizantResult {
        e: repr(&total),
        terms,
        j,
        remainder_bound,
        rounding_bound,
        term_norms,
        matrix: total,
    })
}

/// `J^{K+1}/(K+1)! e^J`, computed in log space.
pub fn tail_bound(j: f64, k: usize) -> f64 {
    if j == 0.0 {
        return 0.0;
    }
    let kp = (k + 1) as f64;
    let log = kp * j.ln() - ln_factorial(k + 1) + j;
    log.exp()
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}
