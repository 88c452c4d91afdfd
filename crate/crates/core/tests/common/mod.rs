#![allow(dead_code)]

use nuloss_core::linalg::{Mat2, C64};

/// Classical fourth-order Runge–Kutta with a fixed step for `u'' = -λ²b²u`.
pub fn rk4_mode(b2: impl Fn(f64) -> f64, lambda: f64, t0: f64, t1: f64, u0: f64, v0: f64, steps: usize) -> (f64, f64) {
    let h = (t1 - t0) / steps as f64;
    let l2 = lambda * lambda;
    let f = |t: f64, u: f64, v: f64| (v, -l2 * b2(t) * u);
    let (mut u, mut v) = (u0, v0);
    for i in 0..steps {
        let t = t0 + h * i as f64;
        let k1 = f(t, u, v);
        let k2 = f(t + 0.5 * h, u + 0.5 * h * k1.0, v + 0.5 * h * k1.1);
        let k3 = f(t + 0.5 * h, u + 0.5 * h * k2.0, v + 0.5 * h * k2.1);
        let k4 = f(t + h, u + h * k3.0, v + h * k3.1);
        u += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        v += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    (u, v)
}

/// `exp(X)` by scaling and squaring with a Taylor core.
pub fn expm(x: Mat2) -> Mat2 {
    let norm = x.norm();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let y = x.scale(C64::new(0.5f64.powi(squarings), 0.0));
    let mut term = Mat2::IDENTITY;
    let mut sum = Mat2::IDENTITY;
    for k in 1..30 {
        term = (term * y).scale(C64::new(1.0 / k as f64, 0.0));
        sum = sum + term;
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

/// Composite Simpson rule.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Dirichlet eigenvalues of `-(d/dx)²` on `[0, L]` by second-order finite
/// differences: `(4/h²) sin²(kπ/(2(n+1)))`.
pub fn fd_dirichlet_eigenvalues(length: f64, interior: usize, count: usize) -> Vec<f64> {
    let h = length / (interior + 1) as f64;
    (1..=count)
        .map(|k| {
            let s = (k as f64 * std::f64::consts::PI / (2.0 * (interior + 1) as f64)).sin();
            4.0 / (h * h) * s * s
        })
        .collect()
}

/// Lowest `count` eigenvalues of a Hermitian tridiagonal matrix, given its
/// diagonal and the squared moduli of its off-diagonal, by Sturm bisection.
pub fn sturm_eigenvalues(diag: &[f64], off_sq: &[f64], count: usize) -> Vec<f64> {
    let below = |x: f64| {
        let mut n = 0;
        let mut q = diag[0] - x;
        if q < 0.0 {
            n += 1;
        }
        for i in 1..diag.len() {
            let prev = if q == 0.0 { 1e-300 } else { q };
            q = diag[i] - x - off_sq[i - 1] / prev;
            if q < 0.0 {
                n += 1;
            }
        }
        n
    };
    let radius = diag.iter().map(|d| d.abs()).fold(0.0, f64::max) + 2.0 * off_sq.iter().map(|e| e.sqrt()).fold(0.0, f64::max);
    (0..count)
        .map(|k| {
            let (mut lo, mut hi) = (-radius, radius);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if below(mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// `(i d/dx + a(x))²` on `(0, L)` with Dirichlet rows, second-order gauge
/// covariant stencil: off-diagonals `-e^{∓i a(x_{j+1/2}) h}/h²`.
pub fn magnetic_fd_eigenvalues(a: impl Fn(f64) -> f64, length: f64, interior: usize, count: usize) -> Vec<f64> {
    let h = length / (interior + 1) as f64;
    let diag = vec![2.0 / (h * h); interior];
    let off: Vec<f64> = (0..interior - 1)
        .map(|j| {
            let phase = C64::from_polar(1.0, a((j as f64 + 1.5) * h) * h);
            (phase / (h * h)).norm_sqr()
        })
        .collect();
    sturm_eigenvalues(&diag, &off, count)
}
