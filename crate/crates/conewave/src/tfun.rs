//! Scalar functions of time used for operator coefficients and metric scales.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimeFnError {
    #[error("polynomial needs at least one coefficient")]
    EmptyPolynomial,
    #[error("table needs matching t and value arrays with at least two samples")]
    BadTable,
    #[error("table times must be strictly increasing")]
    UnsortedTable,
}

/// A real function of `t`: constant, polynomial `Σ c_k t^k`, or a table with
/// natural cubic-spline interpolation (constant extrapolation outside).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RealFn {
    Const(f64),
    Poly { poly: Vec<f64> },
    Table { t: Vec<f64>, v: Vec<f64> },
}

impl Default for RealFn {
    fn default() -> Self {
        RealFn::Const(0.0)
    }
}

impl From<f64> for RealFn {
    fn from(v: f64) -> Self {
        RealFn::Const(v)
    }
}

impl RealFn {
    pub fn validate(&self) -> Result<(), TimeFnError> {
        match self {
            RealFn::Const(_) => Ok(()),
            RealFn::Poly { poly } if poly.is_empty() => Err(TimeFnError::EmptyPolynomial),
            RealFn::Poly { .. } => Ok(()),
            RealFn::Table { t, v } => {
                if t.len() != v.len() || t.len() < 2 {
                    return Err(TimeFnError::BadTable);
                }
                if t.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(TimeFnError::UnsortedTable);
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_with_deriv(t).0
    }

    /// Value and first derivative.
    pub fn eval_with_deriv(&self, x: f64) -> (f64, f64) {
        match self {
            RealFn::Const(c) => (*c, 0.0),
            RealFn::Poly { poly } => {
                let mut v = 0.0;
                let mut d = 0.0;
                for &c in poly.iter().rev() {
                    d = d * x + v;
                    v = v * x + c;
                }
                (v, d)
            }
            RealFn::Table { t, v } => spline_eval(t, v, x),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            RealFn::Const(_) => true,
            RealFn::Poly { poly } => poly.iter().skip(1).all(|&c| c == 0.0),
            RealFn::Table { v, .. } => v.windows(2).all(|w| w[0] == w[1]),
        }
    }
}

/// A complex function of `t` given by real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ComplexFn {
    #[serde(default)]
    pub re: RealFn,
    #[serde(default)]
    pub im: RealFn,
}

impl ComplexFn {
    pub fn constant(z: Complex64) -> Self {
        Self { re: RealFn::Const(z.re), im: RealFn::Const(z.im) }
    }

    pub fn real(v: f64) -> Self {
        Self::constant(Complex64::new(v, 0.0))
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        Complex64::new(self.re.eval(t), self.im.eval(t))
    }

    pub fn validate(&self) -> Result<(), TimeFnError> {
        self.re.validate()?;
        self.im.validate()
    }

    pub fn is_constant(&self) -> bool {
        self.re.is_constant() && self.im.is_constant()
    }
}

fn spline_eval(t: &[f64], v: &[f64], x: f64) -> (f64, f64) {
    let n = t.len();
    if x <= t[0] {
        return (v[0], 0.0);
    }
    if x >= t[n - 1] {
        return (v[n - 1], 0.0);
    }
    let m = spline_second_derivs(t, v);
    let k = match t.partition_point(|&ti| ti <= x) {
        0 => 0,
        p => (p - 1).min(n - 2),
    };
    let h = t[k + 1] - t[k];
    let a = (t[k + 1] - x) / h;
    let b = (x - t[k]) / h;
    let val = a * v[k] + b * v[k + 1] + ((a.powi(3) - a) * m[k] + (b.powi(3) - b) * m[k + 1]) * h * h / 6.0;
    let der = (v[k + 1] - v[k]) / h
        + ((1.0 - 3.0 * a * a) * m[k] + (3.0 * b * b - 1.0) * m[k + 1]) * h / 6.0;
    (val, der)
}

/// Second derivatives of the natural cubic spline (tridiagonal solve).
fn spline_second_derivs(t: &[f64], v: &[f64]) -> Vec<f64> {
    let n = t.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = t[i] - t[i - 1];
        let h1 = t[i + 1] - t[i];
        let diag = 2.0 * (h0 + h1);
        let rhs = 6.0 * ((v[i + 1] - v[i]) / h1 - (v[i] - v[i - 1]) / h0);
        let denom = diag - h0 * c[i - 1];
        c[i] = h1 / denom;
        d[i] = (rhs - h0 * d[i - 1]) / denom;
    }
    for i in (1..n - 1).rev() {
        m[i] = d[i] - c[i] * m[i + 1];
    }
    m
}
