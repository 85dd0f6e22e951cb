use super::{ModeIndex, NormalOpsError, OperatorSpec, Variant};
use crate::phase_flow::OrderFunction;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Default tolerance for deciding that a root lies on the tested line.
pub const DEFAULT_INDICIAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicialRoots {
    /// Root with the larger real part.
    pub plus: Complex64,
    pub minus: Complex64,
    pub double: bool,
}

/// Roots per mode together with the weight window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicialData {
    pub t0: f64,
    pub roots: Vec<(u32, IndicialRoots)>,
    pub window: Option<WeightWindow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightWindow {
    pub lower: f64,
    pub upper: f64,
}

impl WeightWindow {
    pub fn contains(&self, ell: f64) -> bool {
        self.lower < ell && ell < self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub t0: f64,
    pub theta_in: f64,
    pub theta_out: f64,
    pub ell: f64,
    /// Orders must exceed this at the incoming radial set.
    pub s_in_min: f64,
    /// Orders must stay below this at the outgoing radial set.
    pub s_out_max: f64,
}

/// Roots of `ξ² + (n−2+b)ξ − λ_j² − V₀(t₀) = 0`.
pub fn indicial_roots(op: &OperatorSpec, t0: f64, j: u32) -> IndicialRoots {
    let mode = ModeIndex::new(op.n, j, op.c_at(t0));
    let half_sum = 0.5 * (op.n.as_f64() - 2.0 + op.b);
    let disc = half_sum * half_sum + mode.eigenvalue + op.v0_at(t0);
    let nu = disc.sqrt();
    let r1 = -half_sum + nu;
    let r2 = -half_sum - nu;
    let (plus, minus) = if r1.re >= r2.re { (r1, r2) } else { (r2, r1) };
    IndicialRoots { plus, minus, double: nu.norm() <= 1e-14 * (1.0 + half_sum.norm()) }
}

/// Interval of weights `ℓ` around the unperturbed centre for the scalar
/// variant, or the charge-dependent window for the Dirac–Coulomb variant.
pub fn weight_window(op: &OperatorSpec, t0: f64) -> Result<WeightWindow, NormalOpsError> {
    match &op.variant {
        Variant::Scalar => {
            let half_sum = 0.5 * (op.n.as_f64() - 2.0 + op.b);
            let disc = half_sum * half_sum + op.v0_at(t0);
            if disc.im == 0.0 && disc.re < 0.0 {
                let bound = if op.b == Complex64::new(0.0, 0.0) {
                    -(half_sum.re * half_sum.re)
                } else {
                    f64::NAN
                };
                return Err(NormalOpsError::ForbiddenCoupling { v0: op.v0_at(t0), bound });
            }
            let mu = disc.sqrt().re;
            if mu == 0.0 {
                return Err(NormalOpsError::DegenerateWindow);
            }
            let centre = 1.0 - 0.5 * op.b.re;
            Ok(WeightWindow { lower: centre - mu, upper: centre + mu })
        }
        Variant::DiracCoulomb { z } => {
            let delta = dirac_coulomb_gap(z.eval(t0));
            if delta == 0.0 {
                return Err(NormalOpsError::DegenerateWindow);
            }
            Ok(WeightWindow { lower: 1.0 - delta, upper: 1.0 + delta })
        }
    }
}

/// `min over κ ∈ ℤ∖{0}` of `|½ − √(κ² − Z²)|` with the principal square root.
pub fn dirac_coulomb_gap(z: f64) -> f64 {
    let z2 = z * z;
    // Beyond κ = |Z| + 2 the terms are real and increasing in κ.
    let k_max = z.abs().ceil() as i64 + 2;
    (1..=k_max)
        .map(|k| {
            let s = Complex64::new((k * k) as f64 - z2, 0.0).sqrt();
            (Complex64::new(0.5, 0.0) - s).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn is_non_indicial(op: &OperatorSpec, t0: f64, ell: f64) -> bool {
    is_non_indicial_with(op, t0, ell, DEFAULT_INDICIAL_TOL)
}

/// True iff no mode has `Re ξ_±(j) = ℓ − n/2` within `tol`.
pub fn is_non_indicial_with(op: &OperatorSpec, t0: f64, ell: f64, tol: f64) -> bool {
    match &op.variant {
        Variant::Scalar => {
            let line = ell - 0.5 * op.n.as_f64();
            let mut prev_plus = f64::NEG_INFINITY;
            for j in 0..100_000u32 {
                let r = indicial_roots(op, t0, j);
                if (r.plus.re - line).abs() <= tol || (r.minus.re - line).abs() <= tol {
                    return false;
                }
                let monotone = r.plus.re >= prev_plus;
                prev_plus = r.plus.re;
                if monotone && r.plus.re - line > 1.0 && line - r.minus.re > 1.0 {
                    return true;
                }
            }
            true
        }
        Variant::DiracCoulomb { z } => {
            let z2 = z.eval(t0).powi(2);
            let dist = (ell - 1.0).abs();
            for k in 1..100_000i64 {
                let gap = (Complex64::new(0.5, 0.0) - Complex64::new((k * k) as f64 - z2, 0.0).sqrt()).norm();
                if (gap - dist).abs() <= tol {
                    return false;
                }
                if (k * k) as f64 > z2 && gap > dist + 1.0 {
                    return true;
                }
            }
            true
        }
    }
}

/// Thresholds `ϑ_out = ½Re(b + a₀)`, `ϑ_in = ½Re(b − a₀)` and the order
/// bounds they induce for weight `ℓ`.
pub fn thresholds(op: &OperatorSpec, t0: f64, ell: f64) -> Thresholds {
    let a = op.a0_at(t0);
    let theta_out = 0.5 * (op.b + a).re;
    let theta_in = 0.5 * (op.b - a).re;
    Thresholds {
        t0,
        theta_in,
        theta_out,
        ell,
        s_in_min: -0.5 + ell + theta_in,
        s_out_max: -0.5 + ell + theta_out,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub admissible: bool,
    /// `ℓ − ℓ₋` and `ℓ₊ − ℓ`; both positive iff `ℓ` is inside the window.
    pub window_margins: (f64, f64),
    /// `f(−1) − s_in_min`.
    pub incoming_margin: f64,
    /// `s_out_max − f(1)`.
    pub outgoing_margin: f64,
}

/// Checks an order function and weight against thresholds and window.
pub fn admissible_orders_ok(
    orders: &OrderFunction,
    ell: f64,
    th: &Thresholds,
    window: &WeightWindow,
) -> AdmissibilityReport {
    let window_margins = (ell - window.lower, window.upper - ell);
    let incoming_margin = orders.at_incoming() - th.s_in_min;
    let outgoing_margin = th.s_out_max - orders.at_outgoing();
    let admissible =
        window_margins.0 > 0.0 && window_margins.1 > 0.0 && incoming_margin > 0.0 && outgoing_margin > 0.0;
    AdmissibilityReport { admissible, window_margins, incoming_margin, outgoing_margin }
}
