// Truncated Taylor series in one variable, used for the closed-form
// derivatives of the bump and of the functions built from it.

use std::ops::{Add, Mul, Neg, Sub};

pub(crate) const ORDER: usize = 5;

/// Taylor coefficients `c_k = f^{(k)}(x₀)/k!`, `k < ORDER`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Jet(pub [f64; ORDER]);

impl Jet {
    pub fn constant(c: f64) -> Jet {
        let mut v = [0.0; ORDER];
        v[0] = c;
        Jet(v)
    }

    /// The identity `x₀ + δ`.
    pub fn variable(x: f64) -> Jet {
        let mut v = [0.0; ORDER];
        v[0] = x;
        v[1] = 1.0;
        Jet(v)
    }

    pub fn value(&self) -> f64 {
        self.0[0]
    }

    /// `k`-th derivative.
    pub fn derivative(&self, k: usize) -> f64 {
        self.0[k] * (1..=k).map(|i| i as f64).product::<f64>()
    }

    pub fn scale(self, s: f64) -> Jet {
        Jet(self.0.map(|c| c * s))
    }

    pub fn recip(self) -> Jet {
        let a = self.0;
        let mut r = [0.0; ORDER];
        r[0] = 1.0 / a[0];
        for k in 1..ORDER {
            let s: f64 = (1..=k).map(|j| a[j] * r[k - j]).sum();
            r[k] = -s / a[0];
        }
        Jet(r)
    }

    pub fn exp(self) -> Jet {
        // f' = a' f, coefficientwise.
        let a = self.0;
        let mut r = [0.0; ORDER];
        r[0] = a[0].exp();
        for k in 1..ORDER {
            let s: f64 = (1..=k).map(|j| j as f64 * a[j] * r[k - j]).sum();
            r[k] = s / k as f64;
        }
        Jet(r)
    }

    pub fn sin_cos(self) -> (Jet, Jet) {
        let a = self.0;
        let mut s = [0.0; ORDER];
        let mut c = [0.0; ORDER];
        s[0] = a[0].sin();
        c[0] = a[0].cos();
        for k in 1..ORDER {
            let (mut ss, mut cc) = (0.0, 0.0);
            for j in 1..=k {
                ss += j as f64 * a[j] * c[k - j];
                cc -= j as f64 * a[j] * s[k - j];
            }
            s[k] = ss / k as f64;
            c[k] = cc / k as f64;
        }
        (Jet(s), Jet(c))
    }

    /// Antiderivative with the given constant term, truncated.
    pub fn integrate(self, c0: f64) -> Jet {
        let mut r = [0.0; ORDER];
        r[0] = c0;
        for k in 1..ORDER {
            r[k] = self.0[k - 1] / k as f64;
        }
        Jet(r)
    }

    /// Derivative, truncated; the top coefficient becomes zero.
    pub fn differentiate(self) -> Jet {
        let mut r = [0.0; ORDER];
        for k in 0..ORDER - 1 {
            r[k] = (k + 1) as f64 * self.0[k + 1];
        }
        Jet(r)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut r = self.0;
        for (x, y) in r.iter_mut().zip(o.0) {
            *x += y;
        }
        Jet(r)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet(self.0.map(|c| -c))
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut r = [0.0; ORDER];
        for i in 0..ORDER {
            for j in 0..ORDER - i {
                r[i + j] += self.0[i] * o.0[j];
            }
        }
        Jet(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_of_composite() {
        // f = exp(sin x) / (1 + x²) at x = 0.3, against hand-derived values.
        let x = Jet::variable(0.3);
        let (s, _) = x.sin_cos();
        let f = s.exp() * (Jet::constant(1.0) + x * x).recip();
        let h = 1e-4;
        let g = |x: f64| x.sin().exp() / (1.0 + x * x);
        let d1 = (g(0.3 + h) - g(0.3 - h)) / (2.0 * h);
        let d2 = (g(0.3 + h) - 2.0 * g(0.3) + g(0.3 - h)) / (h * h);
        assert!((f.value() - g(0.3)).abs() < 1e-15);
        assert!((f.derivative(1) - d1).abs() < 1e-7);
        assert!((f.derivative(2) - d2).abs() < 1e-5);
    }
}
