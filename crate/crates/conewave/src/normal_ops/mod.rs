//! Stationary model-operator data at a cone point.
//!
//! The operator acting on scalar modes is
//! `∂_t² − ∂_r² − (n−1+b)/r ∂_r + r⁻²(Δ_h + V₀(t)) + a₀(t) r⁻¹ ∂_t`
//! with `h(t) = c(t)²·(round metric)`.

mod indicial;
mod scan;
mod scattering;

pub use indicial::{
    admissible_orders_ok, dirac_coulomb_gap, indicial_roots, is_non_indicial, is_non_indicial_with,
    thresholds, weight_window, AdmissibilityReport, IndicialData, IndicialRoots, Thresholds,
    WeightWindow, DEFAULT_INDICIAL_TOL,
};
pub use scan::{
    spectral_admissibility_scan, upper_half_circle, ScanEntry, ScanSettings, ScanVerdict,
    SpectralScan,
};
pub use scattering::{
    mode_scattering, mode_scattering_with, recessive_profile, MatchPolicy, ModeScattering, ScaledComplex,
    ScatteringSettings,
};

use crate::tfun::{ComplexFn, RealFn, TimeFnError};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormalOpsError {
    #[error("coupling {v0} lies on the forbidden half-line (−∞, {bound}]")]
    ForbiddenCoupling { v0: Complex64, bound: f64 },
    #[error("weight window degenerates to a point")]
    DegenerateWindow,
    #[error("asymptotic remainder {remainder:e} at r̂ = {r_match} exceeds tolerance {tol:e}")]
    MatchRadiusTooSmall { r_match: f64, remainder: f64, tol: f64 },
    #[error("frequency must satisfy |σ̂| = 1 and Im σ̂ ≥ 0, got {sigma}")]
    InvalidFrequency { sigma: Complex64 },
    #[error("mode {j} has Re ν = {re_nu} ≤ 0")]
    NonPositiveOrder { j: u32, re_nu: f64 },
    #[error("operation needs the scalar variant")]
    NotScalar,
    #[error("invalid operator: {0}")]
    Invalid(String),
    #[error(transparent)]
    TimeFn(#[from] TimeFnError),
}

/// Spatial dimension `n ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Dimension(u32);

impl Dimension {
    pub fn new(n: u32) -> Result<Self, NormalOpsError> {
        if n == 0 {
            return Err(NormalOpsError::Invalid("dimension must be at least 1".into()));
        }
        Ok(Self(n))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Variant {
    Scalar,
    /// Only the charge `Z(t)` is used by admissibility computations.
    DiracCoulomb { z: RealFn },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub n: Dimension,
    /// Constant first-order radial coefficient.
    pub b: Complex64,
    /// Inverse-square coupling.
    pub v0: ComplexFn,
    /// Damping coefficient of `r⁻¹∂_t`.
    pub a0: ComplexFn,
    /// Cross-section scale.
    pub c: RealFn,
    pub variant: Variant,
}

impl OperatorSpec {
    /// Scalar operator with constant coefficients and `c ≡ 1`.
    pub fn scalar(n: u32, v0: Complex64, a0: Complex64) -> Result<Self, NormalOpsError> {
        Ok(Self {
            n: Dimension::new(n)?,
            b: Complex64::new(0.0, 0.0),
            v0: ComplexFn::constant(v0),
            a0: ComplexFn::constant(a0),
            c: RealFn::Const(1.0),
            variant: Variant::Scalar,
        })
    }

    /// Free wave operator in `n` dimensions.
    pub fn free(n: u32) -> Result<Self, NormalOpsError> {
        Self::scalar(n, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
    }

    pub fn dirac_coulomb(z: f64) -> Self {
        Self {
            n: Dimension(3),
            b: Complex64::new(0.0, 0.0),
            v0: ComplexFn::default(),
            a0: ComplexFn::default(),
            c: RealFn::Const(1.0),
            variant: Variant::DiracCoulomb { z: RealFn::Const(z) },
        }
    }

    pub fn validate(&self) -> Result<(), NormalOpsError> {
        self.v0.validate()?;
        self.a0.validate()?;
        self.c.validate()?;
        if let Variant::DiracCoulomb { z } = &self.variant {
            z.validate()?;
        }
        Ok(())
    }

    pub fn v0_at(&self, t0: f64) -> Complex64 {
        self.v0.eval(t0)
    }

    pub fn a0_at(&self, t0: f64) -> Complex64 {
        self.a0.eval(t0)
    }

    pub fn c_at(&self, t0: f64) -> f64 {
        self.c.eval(t0)
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self.variant, Variant::Scalar)
    }

    /// Formal adjoint with respect to `r^{n−1} dr dt dh`, in the same
    /// coefficient form: `b ↦ −b̄`, `V₀ ↦ V̄₀ + (n−2)b̄`, `a₀ ↦ −ā₀`.
    pub fn formal_adjoint(&self) -> OperatorSpec {
        let nm2 = self.n.as_f64() - 2.0;
        let b_bar = self.b.conj();
        let v_re_shift = nm2 * b_bar.re;
        let v_im_shift = nm2 * b_bar.im;
        OperatorSpec {
            n: self.n,
            b: -b_bar,
            v0: ComplexFn {
                re: shift_fn(&self.v0.re, 1.0, v_re_shift),
                im: shift_fn(&self.v0.im, -1.0, v_im_shift),
            },
            a0: ComplexFn {
                re: shift_fn(&self.a0.re, -1.0, 0.0),
                im: shift_fn(&self.a0.im, 1.0, 0.0),
            },
            c: self.c.clone(),
            variant: self.variant.clone(),
        }
    }
}

/// `scale·f + offset` for the supported function shapes.
fn shift_fn(f: &RealFn, scale: f64, offset: f64) -> RealFn {
    match f {
        RealFn::Const(v) => RealFn::Const(scale * v + offset),
        RealFn::Poly { poly } => {
            let mut p: Vec<f64> = poly.iter().map(|c| scale * c).collect();
            p[0] += offset;
            RealFn::Poly { poly: p }
        }
        RealFn::Table { t, v } => {
            RealFn::Table { t: t.clone(), v: v.iter().map(|x| scale * x + offset).collect() }
        }
    }
}

/// A spherical-harmonic mode on `S^{n−1}` with eigenvalue scaled by `c(t₀)⁻²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeIndex {
    pub j: u32,
    pub eigenvalue: f64,
    pub multiplicity: u64,
}

impl ModeIndex {
    pub fn new(n: Dimension, j: u32, c_t0: f64) -> Self {
        let nf = n.as_f64();
        let jf = j as f64;
        Self { j, eigenvalue: jf * (jf + nf - 2.0) / (c_t0 * c_t0), multiplicity: multiplicity(n.get(), j) }
    }
}

/// Dimension of the degree-`j` spherical harmonics on `S^{n−1}`.
pub fn multiplicity(n: u32, j: u32) -> u64 {
    match n {
        1 => u64::from(j <= 1),
        _ => {
            let j = j as u64;
            let d = (n - 1) as u64;
            let top = binom(j + d, d);
            let low = if j >= 2 { binom(j - 2 + d, d) } else { 0 };
            top - low
        }
    }
}

fn binom(n: u64, k: u64) -> u64 {
    let k = k.min(n - k.min(n));
    (1..=k).fold(1u64, |acc, i| acc * (n + 1 - i) / i)
}
