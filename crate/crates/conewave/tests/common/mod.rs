//! Reference quadrature and oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [−1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite Gauss–Legendre on [a, b].
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, rule: &[(f64, f64)]) -> f64 {
    if b <= a {
        return 0.0;
    }
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let mid = a + h * (p as f64 + 0.5);
        for &(x, w) in rule {
            s += w * f(mid + 0.5 * h * x);
        }
    }
    0.5 * h * s
}

/// `exp(1 − 1/(1−x²))` on `|x| < 1`.
pub fn bump(y: f64, center: f64, half_width: f64) -> f64 {
    let x = (y - center) / half_width;
    if x.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

/// Free radial wave in three dimensions forced by `φ(t)ψ(r)` from rest:
/// `r u = ½∫₀ᵗ φ(s)[H(r+t−s) − H(r−t+s)] ds` with `H(y) = ∫₀^|y| zψ(z) dz`,
/// the d'Alembert formula for the odd extension of `r·f`.
pub struct Duhamel3 {
    pub t_support: (f64, f64),
    pub r_support: (f64, f64),
    rule: Vec<(f64, f64)>,
}

impl Duhamel3 {
    pub fn new(t_support: (f64, f64), r_support: (f64, f64)) -> Self {
        Self { t_support, r_support, rule: gauss_legendre(20) }
    }

    pub fn phi(&self, s: f64) -> f64 {
        let (a, b) = self.t_support;
        bump(s, 0.5 * (a + b), 0.5 * (b - a))
    }

    pub fn psi(&self, r: f64) -> f64 {
        let (a, b) = self.r_support;
        bump(r, 0.5 * (a + b), 0.5 * (b - a))
    }

    fn big_h(&self, y: f64) -> f64 {
        let y = y.abs();
        let (a, b) = self.r_support;
        if y <= a {
            return 0.0;
        }
        integrate(|z| z * self.psi(z), a, y.min(b), 8, &self.rule)
    }

    pub fn u(&self, t: f64, r: f64) -> f64 {
        let (a, b) = self.t_support;
        let hi = t.min(b);
        if hi <= a {
            return 0.0;
        }
        let v = 0.5 * integrate(|s| self.phi(s) * (self.big_h(r + t - s) - self.big_h(r - t + s)), a, hi, 24, &self.rule);
        v / r
    }
}

/// Cubic Hermite interpolation in time of a stored field at node `k`,
/// written independently of the solver's monitor.
pub fn hermite_in_time(times: &[f64], u: &[num_complex::Complex64], ut: &[num_complex::Complex64], nr: usize, k: usize, t: f64) -> (num_complex::Complex64, num_complex::Complex64) {
    let nl = times.len();
    let i = match times.iter().position(|&x| x > t) {
        Some(0) => 0,
        Some(p) => p - 1,
        None => nl - 2,
    }
    .min(nl - 2);
    let h = times[i + 1] - times[i];
    let s = ((t - times[i]) / h).clamp(0.0, 1.0);
    let (a, b) = (u[i * nr + k], u[(i + 1) * nr + k]);
    let (da, db) = (ut[i * nr + k] * h, ut[(i + 1) * nr + k] * h);
    let h00 = 2.0 * s.powi(3) - 3.0 * s * s + 1.0;
    let h10 = s.powi(3) - 2.0 * s * s + s;
    let h01 = -2.0 * s.powi(3) + 3.0 * s * s;
    let h11 = s.powi(3) - s * s;
    let val = a * h00 + da * h10 + b * h01 + db * h11;
    let d00 = 6.0 * s * s - 6.0 * s;
    let d10 = 3.0 * s * s - 4.0 * s + 1.0;
    let d01 = -6.0 * s * s + 6.0 * s;
    let d11 = 3.0 * s * s - 2.0 * s;
    let der = (a * d00 + da * d10 + b * d01 + db * d11) / h;
    (val, der)
}

/// Quintic smoothstep from 0 at `a` to 1 at `b`: value, first and second
/// derivative.
pub fn smooth_step(t: f64, a: f64, b: f64) -> (f64, f64, f64) {
    let h = b - a;
    let x = ((t - a) / h).clamp(0.0, 1.0);
    let v = x.powi(3) * (10.0 - 15.0 * x + 6.0 * x * x);
    let d = 30.0 * x * x * (1.0 - x).powi(2) / h;
    let dd = 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x) / (h * h);
    (v, d, dd)
}

/// `t ↦ −t` applied to polynomial coefficients.
pub fn reflect_poly(poly: &[f64]) -> Vec<f64> {
    poly.iter().enumerate().map(|(k, c)| if k % 2 == 1 { -c } else { *c }).collect()
}
