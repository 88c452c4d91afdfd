//! Quadrature rules: Gauss–Legendre (fixed and composite), adaptive
//! Gauss–Kronrod 7/15, and per-panel spectral integration matrices used for
//! cumulative integrals.

use std::collections::BinaryHeap;

use crate::{Error, Result};

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes are Newton-refined roots of `P_n`, ascending.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[n - 1 - i] = x;
            nodes[i] = -x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (half, mid) = (0.5 * (b - a), 0.5 * (a + b));
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Composite rule over `panels` equal sub-intervals.
    pub fn composite(&self, a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + h * k as f64;
                self.integrate(lo, lo + h, &mut f)
            })
            .sum()
    }
}

// Returns (P_n(x), P_n'(x)).
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Spectral integration on one panel: for samples `f_j` at the Gauss nodes,
/// `(S f)_i` approximates the integral from the panel's left end to node `i`.
#[derive(Debug, Clone)]
pub struct PanelIntegrator {
    rule: GaussLegendre,
    // Row-major n x n on the reference interval [-1, 1].
    matrix: Vec<f64>,
}

impl PanelIntegrator {
    pub fn new(n: usize) -> Self {
        let rule = GaussLegendre::new(n);
        let x = rule.nodes().to_vec();
        let mut matrix = vec![0.0; n * n];
        for i in 0..n {
            for (y, w) in rule.mapped(-1.0, x[i]) {
                for j in 0..n {
                    let mut l = 1.0;
                    for k in 0..n {
                        if k != j {
                            l *= (y - x[k]) / (x[j] - x[k]);
                        }
                    }
                    matrix[i * n + j] += w * l;
                }
            }
        }
        PanelIntegrator { rule, matrix }
    }

    pub fn rule(&self) -> &GaussLegendre {
        &self.rule
    }

    pub fn len(&self) -> usize {
        self.rule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rule.is_empty()
    }

    /// Weight of sample `j` in the partial integral up to node `i`, for a
    /// panel of width `h`.
    #[inline]
    pub fn weight(&self, i: usize, j: usize, h: f64) -> f64 {
        0.5 * h * self.matrix[i * self.len() + j]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(a: f64, b: f64, f: &mut dyn FnMut(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let (f1, f2) = (f(c - dx)?, f(c + dx)?);
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Ok((kronrod * h, ((kronrod - gauss) * h).abs()))
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

const MAX_SEGMENTS: usize = 20_000;

/// Globally adaptive Gauss–Kronrod 7/15: bisects the segment with the largest
/// error estimate until the total error is below `max(abs_tol, rel_tol·|I|)`.
pub fn try_gauss_kronrod(
    mut f: impl FnMut(f64) -> Result<f64>,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let (value, error) = gk15(a, b, &mut f)?;
    let mut evaluations = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let (mut total, mut total_err) = (value, error);
    while total_err > abs_tol.max(rel_tol * total.abs()) {
        if heap.len() >= MAX_SEGMENTS {
            return Err(Error::Quadrature(total_err));
        }
        let seg = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a.min(seg.b) || mid >= seg.a.max(seg.b) {
            // Interval exhausted at machine resolution.
            heap.push(seg);
            break;
        }
        let (v1, e1) = gk15(seg.a, mid, &mut f)?;
        let (v2, e2) = gk15(mid, seg.b, &mut f)?;
        evaluations += 30;
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        heap.push(Segment { a: seg.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, error: e2 });
    }
    // Re-sum to shed drift from the running updates.
    let value = heap.iter().map(|s| s.value).sum();
    let error = heap.iter().map(|s| s.error).sum::<f64>();
    if error > 10.0 * abs_tol.max(rel_tol * f64::abs(value)) {
        return Err(Error::Quadrature(error));
    }
    Ok(QuadResult { value, error, evaluations })
}

pub fn gauss_kronrod(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<QuadResult> {
    try_gauss_kronrod(|x| Ok(f(x)), a, b, abs_tol, rel_tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        for n in [1, 2, 5, 16, 33] {
            let rule = GaussLegendre::new(n);
            let wsum: f64 = rule.weights().iter().sum();
            assert!((wsum - 2.0).abs() < 1e-13, "n={n} weight sum {wsum}");
            for deg in 0..(2 * n) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let got = rule.integrate(-1.0, 1.0, |x| x.powi(deg as i32));
                assert!((got - exact).abs() < 1e-13, "n={n} deg={deg}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn nodes_ascend() {
        let rule = GaussLegendre::new(16);
        assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn kronrod_rule_degree() {
        // A single GK15 panel integrates degree-22 polynomials exactly.
        for deg in 0..=22 {
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            let (v, _) = gk15(-1.0, 1.0, &mut |x| Ok(x.powi(deg))).unwrap();
            assert!((v - exact).abs() < 1e-14, "deg {deg}: {v}");
        }
        let (_, err) = gk15(-1.0, 1.0, &mut |x| Ok(x.powi(12))).unwrap();
        assert!(err < 1e-14);
    }

    #[test]
    fn adaptive_handles_oscillation_and_endpoint_singularity() {
        let r = gauss_kronrod(|x| (50.0 * x).sin(), 0.0, 3.0, 1e-13, 1e-13).unwrap();
        let exact = (1.0 - (150.0f64).cos()) / 50.0;
        assert!((r.value - exact).abs() < 1e-12);
        let r = gauss_kronrod(|x| x.sqrt().recip(), 1e-300, 1.0, 1e-10, 1e-10).unwrap();
        assert!((r.value - 2.0).abs() < 1e-8);
        let r = gauss_kronrod(|x| x * x, 2.0, 0.0, 1e-14, 0.0).unwrap();
        assert!((r.value + 8.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn panel_integrator_cumulative_integrals() {
        let p = PanelIntegrator::new(16);
        let (a, b) = (0.3, 1.1);
        let h = b - a;
        let xs: Vec<f64> = p.rule().mapped(a, b).map(|(x, _)| x).collect();
        let fs: Vec<f64> = xs.iter().map(|x| x.cos()).collect();
        for i in 0..16 {
            let partial: f64 = (0..16).map(|j| p.weight(i, j, h) * fs[j]).sum();
            assert!((partial - (xs[i].sin() - a.sin())).abs() < 1e-14);
        }
    }
}
