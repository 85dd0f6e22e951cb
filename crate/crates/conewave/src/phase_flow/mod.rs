//! Null bicharacteristic flow in the edge phase space near the cone curve.
//!
//! Covectors are written `−σ dt/r + ξ dr/r + η` with `η` tangent to the unit
//! sphere (stored as a vector in `Rⁿ` orthogonal to `ω`). On the model cone
//! `−dt² + dr² + r² c(t)² g_round` the edge dual metric is
//! `G_e = −σ² + ξ² + |η|²/c²` and the flow is computed in the projective
//! coordinates `ρ∞ = 1/|σ|`, `ξ̂ = ξ/σ`, `η̂ = η/σ`.
//!
//! The Schwarzschild kind is a smooth spacetime; there the ordinary cotangent
//! Hamiltonian is used with `σ = −p_t`, `ξ = p_r` and `η` the angular momentum
//! covector (so `ξ̂, η̂` are momenta divided by the conserved energy).

mod ode;
mod order;
mod refocus;
mod trajectory;

pub use ode::StepControl;
pub use order::{build_order_function, OrderFunction, OrderProfile, DEFAULT_FLAT};
pub use refocus::{
    check_nonrefocusing, photon_orbit, scaled_domain_scan, FanSettings, FlowVerdict,
    NonRefocusingReport, OrbitCheck, ScaledScan, WitnessInfo,
};
pub use trajectory::{
    integrate_bicharacteristic, EndpointClass, FlowControl, Sign, Trajectory, TrajectorySample,
};

use crate::tfun::{RealFn, TimeFnError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("radius {r} outside the coordinate chart (limit {limit})")]
    OutsideChart { r: f64, limit: f64 },
    #[error("point is off the characteristic set (residual {residual:e})")]
    NotCharacteristic { residual: f64 },
    #[error("invalid phase-space point: {0}")]
    InvalidPoint(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error(transparent)]
    TimeFn(#[from] TimeFnError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricKind {
    ModelCone {
        /// Collar radius `r̄`; the flow is only defined for `r < r̄`.
        #[serde(default = "infinite")]
        collar: f64,
    },
    Schwarzschild {
        m: f64,
    },
}

fn infinite() -> f64 {
    f64::INFINITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricModel {
    pub kind: MetricKind,
    pub n: u32,
    /// Cross-section scale; ignored for the Schwarzschild kind.
    pub c: RealFn,
}

impl MetricModel {
    pub fn model_cone(n: u32, c: RealFn) -> Self {
        Self { kind: MetricKind::ModelCone { collar: f64::INFINITY }, n, c }
    }

    pub fn schwarzschild(m: f64) -> Self {
        Self { kind: MetricKind::Schwarzschild { m }, n: 3, c: RealFn::Const(1.0) }
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        self.c.validate()?;
        match self.kind {
            MetricKind::ModelCone { collar } => {
                if self.n == 0 {
                    return Err(FlowError::InvalidMetric("dimension must be at least 1".into()));
                }
                if !(collar > 0.0) {
                    return Err(FlowError::InvalidMetric("collar radius must be positive".into()));
                }
                let positive = match &self.c {
                    RealFn::Const(v) => *v > 0.0,
                    RealFn::Table { v, .. } => v.iter().all(|&x| x > 0.0),
                    RealFn::Poly { .. } => true,
                };
                if !positive {
                    return Err(FlowError::InvalidMetric("c(t) must be positive".into()));
                }
            }
            MetricKind::Schwarzschild { m } => {
                if !(m > 0.0) || self.n != 3 {
                    return Err(FlowError::InvalidMetric("Schwarzschild needs m > 0 and n = 3".into()));
                }
            }
        }
        Ok(())
    }

    /// Structural checks plus `c > 0` sampled on `[t₋, t₊]` of `dom`.
    pub fn validate_over(&self, dom: &DomainSpec) -> Result<(), FlowError> {
        self.validate()?;
        if let (MetricKind::ModelCone { .. }, RealFn::Poly { .. }) = (&self.kind, &self.c) {
            let (lo, hi) = (dom.t_minus, dom.t_plus);
            if !(0..=4000).all(|k| self.c.eval(lo + (hi - lo) * k as f64 / 4000.0) > 0.0) {
                return Err(FlowError::InvalidMetric(format!("c(t) must be positive on [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Invariant metrics have `c` independent of `t`.
    pub fn is_invariant(&self) -> bool {
        matches!(self.kind, MetricKind::ModelCone { .. }) && self.c.is_constant()
    }

    /// The metric pulled back by `t ↦ −t`.
    pub fn time_reflected(&self) -> Self {
        let c = match &self.c {
            RealFn::Const(v) => RealFn::Const(*v),
            RealFn::Poly { poly } => RealFn::Poly {
                poly: poly.iter().enumerate().map(|(k, &a)| if k % 2 == 1 { -a } else { a }).collect(),
            },
            RealFn::Table { t, v } => RealFn::Table {
                t: t.iter().rev().map(|x| -x).collect(),
                v: v.iter().rev().copied().collect(),
            },
        };
        Self { kind: self.kind.clone(), n: self.n, c }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub t: f64,
    pub r: f64,
    pub omega: Vec<f64>,
    pub sigma: f64,
    pub xi: f64,
    pub eta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectivePoint {
    pub t: f64,
    pub r: f64,
    pub omega: Vec<f64>,
    pub rho_inf: f64,
    pub xi_hat: f64,
    pub eta_hat: Vec<f64>,
}

impl From<&PhasePoint> for ProjectivePoint {
    fn from(p: &PhasePoint) -> Self {
        Self {
            t: p.t,
            r: p.r,
            omega: p.omega.clone(),
            rho_inf: 1.0 / p.sigma.abs(),
            xi_hat: p.xi / p.sigma,
            eta_hat: p.eta.iter().map(|e| e / p.sigma).collect(),
        }
    }
}

impl ProjectivePoint {
    /// Image under `(t, ξ̂, η̂) ↦ (−t, −ξ̂, −η̂)`.
    pub fn time_reflected(&self) -> Self {
        Self {
            t: -self.t,
            r: self.r,
            omega: self.omega.clone(),
            rho_inf: self.rho_inf,
            xi_hat: -self.xi_hat,
            eta_hat: self.eta_hat.iter().map(|e| -e).collect(),
        }
    }

    pub(crate) fn to_state(&self) -> Vec<f64> {
        let mut y = vec![self.t, self.r, self.rho_inf, self.xi_hat];
        y.extend_from_slice(&self.omega);
        y.extend_from_slice(&self.eta_hat);
        y
    }

    pub(crate) fn from_state(y: &[f64]) -> Self {
        let n = (y.len() - 4) / 2;
        Self {
            t: y[0],
            r: y[1],
            rho_inf: y[2],
            xi_hat: y[3],
            omega: y[4..4 + n].to_vec(),
            eta_hat: y[4 + n..].to_vec(),
        }
    }
}

/// Components of a vector field in projective coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectiveTangent {
    pub dt: f64,
    pub dr: f64,
    pub domega: Vec<f64>,
    pub drho_inf: f64,
    pub dxi_hat: f64,
    pub deta_hat: Vec<f64>,
}

/// `σ⁻¹H_{G_e}` at `p` for the model cone, or the energy-rescaled geodesic
/// field for Schwarzschild.
pub fn hamiltonian_rhs(p: &ProjectivePoint, g: &MetricModel) -> Result<ProjectiveTangent, FlowError> {
    let n = g.n as usize;
    if p.omega.len() != n || p.eta_hat.len() != n {
        return Err(FlowError::InvalidPoint(format!("ω and η̂ must have {n} components")));
    }
    check_chart(g, p.r)?;
    let y = p.to_state();
    let mut dy = vec![0.0; y.len()];
    field(g, &y, &mut dy);
    Ok(ProjectiveTangent {
        dt: dy[0],
        dr: dy[1],
        drho_inf: dy[2],
        dxi_hat: dy[3],
        domega: dy[4..4 + n].to_vec(),
        deta_hat: dy[4 + n..].to_vec(),
    })
}

pub(crate) fn check_chart(g: &MetricModel, r: f64) -> Result<(), FlowError> {
    match g.kind {
        MetricKind::ModelCone { collar } if !(r >= 0.0 && r < collar) => {
            Err(FlowError::OutsideChart { r, limit: collar })
        }
        MetricKind::Schwarzschild { m } if !(r > 2.0 * m) => Err(FlowError::OutsideChart { r, limit: 2.0 * m }),
        _ => Ok(()),
    }
}

/// Full (unhalved) field on the flat state `[t, r, ρ∞, ξ̂, ω…, η̂…]`.
pub(crate) fn field(g: &MetricModel, y: &[f64], dy: &mut [f64]) {
    let n = (y.len() - 4) / 2;
    let (t, r, rho, xi) = (y[0], y[1], y[2], y[3]);
    let omega = &y[4..4 + n];
    let eta = &y[4 + n..];
    let eta2: f64 = eta.iter().map(|e| e * e).sum();
    match g.kind {
        MetricKind::ModelCone { .. } => {
            let (c, cdot) = g.c.eval_with_deriv(t);
            let c2 = c * c;
            // r ∂_t h^{ab} η̂η̂ with h^{ab} = c⁻² round
            let hdot = -2.0 * r * cdot * eta2 / (c2 * c);
            dy[0] = 2.0 * r;
            dy[1] = 2.0 * r * xi;
            dy[2] = -rho * (2.0 * xi + hdot);
            dy[3] = 2.0 * (1.0 - xi * xi) - xi * hdot;
            for i in 0..n {
                dy[4 + i] = 2.0 * eta[i] / c2;
                dy[4 + n + i] = -2.0 * eta2 * omega[i] / c2 - eta[i] * (2.0 * xi + hdot);
            }
        }
        MetricKind::Schwarzschild { m } => {
            let f = 1.0 - 2.0 * m / r;
            let fp = 2.0 * m / (r * r);
            let r2 = r * r;
            dy[0] = 1.0 / f;
            dy[1] = f * xi;
            dy[2] = 0.0;
            dy[3] = -0.5 * (fp / (f * f) + fp * xi * xi - 2.0 * eta2 / (r2 * r));
            for i in 0..n {
                dy[4 + i] = eta[i] / r2;
                dy[4 + n + i] = -eta2 * omega[i] / r2;
            }
        }
    }
}

/// `G/σ²` on the flat state; zero on the characteristic set.
pub(crate) fn null_residual(g: &MetricModel, y: &[f64]) -> f64 {
    let n = (y.len() - 4) / 2;
    let eta2: f64 = y[4 + n..].iter().map(|e| e * e).sum();
    match g.kind {
        MetricKind::ModelCone { .. } => {
            let c = g.c.eval(y[0]);
            -1.0 + y[3] * y[3] + eta2 / (c * c)
        }
        MetricKind::Schwarzschild { m } => {
            let r = y[1];
            let f = 1.0 - 2.0 * m / r;
            -1.0 / f + f * y[3] * y[3] + eta2 / (r * r)
        }
    }
}

pub fn null_residual_at(p: &ProjectivePoint, g: &MetricModel) -> f64 {
    null_residual(g, &p.to_state())
}

/// Restores `|ω| = 1`, `η̂ ⟂ ω` and the null constraint by a common rescaling
/// of `(ρ∞, ξ̂, η̂)`, which corresponds to rescaling `σ`.
pub(crate) fn project(g: &MetricModel, y: &mut [f64]) {
    let n = (y.len() - 4) / 2;
    let norm = y[4..4 + n].iter().map(|w| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        for w in &mut y[4..4 + n] {
            *w /= norm;
        }
    }
    let dot: f64 = (0..n).map(|i| y[4 + i] * y[4 + n + i]).sum();
    for i in 0..n {
        y[4 + n + i] -= dot * y[4 + i];
    }
    let eta2: f64 = y[4 + n..].iter().map(|e| e * e).sum();
    let (kinetic, target) = match g.kind {
        MetricKind::ModelCone { .. } => {
            let c = g.c.eval(y[0]);
            (y[3] * y[3] + eta2 / (c * c), 1.0)
        }
        MetricKind::Schwarzschild { m } => {
            let r = y[1];
            let f = 1.0 - 2.0 * m / r;
            (f * y[3] * y[3] + eta2 / (r * r), 1.0 / f)
        }
    };
    if kinetic > 0.0 {
        let lam = (target / kinetic).sqrt();
        if matches!(g.kind, MetricKind::ModelCone { .. }) {
            y[2] *= lam;
        }
        y[3] *= lam;
        for e in &mut y[4 + n..] {
            *e *= lam;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub t_minus: f64,
    pub t_plus: f64,
    pub r_plus: f64,
    pub kappa: f64,
    /// Optional wedge `τ = (t − t₀)/r ∈ (τ₀, τ₁)`.
    #[serde(default)]
    pub wedge: Option<(f64, f64)>,
}

impl DomainSpec {
    pub fn new(t_minus: f64, t_plus: f64, r_plus: f64, kappa: f64) -> Result<Self, FlowError> {
        let d = Self { t_minus, t_plus, r_plus, kappa, wedge: None };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        if !(self.t_minus < self.t_plus) {
            return Err(FlowError::InvalidDomain("need t_minus < t_plus".into()));
        }
        if !(self.r_plus >= 0.0) {
            return Err(FlowError::InvalidDomain("need r_plus ≥ 0".into()));
        }
        if !(self.kappa > 1.0) {
            return Err(FlowError::InvalidDomain("need kappa > 1".into()));
        }
        if let Some((a, b)) = self.wedge {
            if !(-1.0 < a && a < b && b < 1.0) {
                return Err(FlowError::InvalidDomain("wedge needs −1 < τ₀ < τ₁ < 1".into()));
            }
        }
        Ok(())
    }

    /// Radius of the lateral boundary at time `t`.
    pub fn lateral_radius(&self, t: f64) -> f64 {
        self.r_plus + self.kappa * (self.t_plus - t)
    }

    pub fn contains(&self, t: f64, r: f64) -> bool {
        t > self.t_minus && t < self.t_plus && r < self.lateral_radius(t)
    }

    /// Samples the lateral boundary with the metric's inverse applied to its
    /// conormal `dr + κ dt`; the boundary is spacelike iff that is timelike.
    pub fn lateral_is_spacelike(&self, g: &MetricModel) -> bool {
        let k2 = self.kappa * self.kappa;
        match g.kind {
            MetricKind::ModelCone { .. } => 1.0 - k2 < 0.0,
            MetricKind::Schwarzschild { m } => (0..=64).all(|i| {
                let t = self.t_minus + (self.t_plus - self.t_minus) * i as f64 / 64.0;
                let r = self.lateral_radius(t);
                let f = 1.0 - 2.0 * m / r;
                r <= 2.0 * m || -k2 / f + f < 0.0
            }),
        }
    }

    /// `t ↦ t₀ + λ(t − t₀)`, `r ↦ λr`.
    pub fn scaled(&self, t0: f64, lambda: f64) -> Self {
        Self {
            t_minus: t0 + lambda * (self.t_minus - t0),
            t_plus: t0 + lambda * (self.t_plus - t0),
            r_plus: lambda * self.r_plus,
            kappa: self.kappa,
            wedge: self.wedge,
        }
    }
}
