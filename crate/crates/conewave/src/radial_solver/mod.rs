//! Mode-by-mode time-domain solver for `P u = f` on lens domains.
//!
//! Each spherical-harmonic mode obeys
//! `u_tt = u_rr + (n−1+b)/r u_r − (λ_j²/c² + V₀)/r² u − a₀/r u_t + f_j`.
//! The evolved variable is `w = r^{−γ}u` with `γ = Re ξ₊(j)`, discretized by
//! finite volumes in the measure `r^{n−1+b+2γ}dr` on a graded mesh and
//! advanced by leapfrog with centred damping.

mod energy;
mod field;
mod fit;
mod grid;
mod solve;
mod source;
mod stepper;

pub use energy::{mode_energy, wedge_energy_monitor, EnergyTrace, WedgeSpec};
pub use field::{FieldDump, ModeField, FIELD_MAGIC, FIELD_VERSION};
pub use fit::{phg_exponent_fit, ExponentFit, FitWindow};
pub use grid::{RadialGrid, MAX_NODES};
pub use solve::{
    admissibility_gate, backward_solve, forward_solve, forward_solve_with, solve_ivp, ForcingFn,
};
pub use source::{IVPData, ModeData, ModeSource, Profile, RadialProfile, SourceSpec, SupportBox};
pub use stepper::{step_mode, ModeStepper};

use crate::normal_ops::NormalOpsError;
use crate::phase_flow::{DomainSpec, FlowError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadialError {
    #[error("mode {j}: step {dt:e} exceeds the stability limit {limit:e} (CFL number {cfl:.3})")]
    CFLViolation { j: u32, dt: f64, limit: f64, cfl: f64 },
    #[error("mode {j}: solution blew up at t = {t} (growth {growth:e})")]
    BlowUp { j: u32, t: f64, growth: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid initial data: {0}")]
    InvalidData(String),
    #[error("invalid source: {0}")]
    InvalidSource(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("operator not admissible: {0}")]
    NotAdmissible(String),
    #[error("invalid wedge: {0}")]
    InvalidWedge(String),
    #[error("fit degenerate: {0}")]
    FitDegenerate(String),
    #[error("fit precondition violated: {0}")]
    FitPrecondition(String),
    #[error("field format: {0}")]
    Format(String),
    #[error(transparent)]
    Operator(#[from] NormalOpsError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// Change of variable applied near `r = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Substitution {
    /// Evolve `w = r^{−Re ξ₊(j)} u`.
    #[default]
    Recessive,
    /// Evolve `u` itself.
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSettings {
    /// Innermost node as a fraction of `r₊`.
    pub r_min_factor: f64,
    /// Geometric grading ratio `ρ ∈ [1, 1.2]`.
    pub grading: f64,
    pub dr_outer: f64,
    /// Target `Δt / Δr_local`.
    pub cfl: f64,
    /// Fixed time step; checked against the stability limit.
    pub dt: Option<f64>,
    /// Spacing of stored time levels; defaults to `(t₊−t₋)/200`.
    pub output_dt: Option<f64>,
    /// Largest admitted growth of `max |w|` over one step.
    pub blowup_factor: f64,
    pub substitution: Substitution,
    /// Time at which `γ = Re ξ₊(j)` is frozen; defaults to the midpoint.
    pub ref_time: Option<f64>,
}

impl Default for GridSettings {
    fn default() -> Self {
        Self {
            r_min_factor: 1e-4,
            grading: 1.2,
            dr_outer: 0.02,
            cfl: 0.5,
            dt: None,
            output_dt: None,
            blowup_factor: 10.0,
            substitution: Substitution::Recessive,
            ref_time: None,
        }
    }
}

impl GridSettings {
    /// The `level`-th dyadic refinement: grading `ρ^{2^{−L}}`, `dr/2^L`,
    /// stored spacing halved as well.
    pub fn refined(&self, level: u32) -> Self {
        let f = 2f64.powi(level as i32);
        Self {
            grading: self.grading.powf(1.0 / f),
            dr_outer: self.dr_outer / f,
            dt: self.dt.map(|d| d / f),
            output_dt: self.output_dt.map(|d| d / f),
            ..*self
        }
    }

    pub fn validate(&self) -> Result<(), RadialError> {
        if !(self.r_min_factor > 0.0 && self.r_min_factor < 1.0) {
            return Err(RadialError::InvalidGrid("r_min_factor must lie in (0, 1)".into()));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(RadialError::InvalidGrid(format!("CFL target {} outside (0, 1]", self.cfl)));
        }
        if !(self.blowup_factor > 1.0) {
            return Err(RadialError::InvalidGrid("blowup_factor must exceed 1".into()));
        }
        if matches!(self.dt, Some(d) if !(d > 0.0)) || matches!(self.output_dt, Some(d) if !(d > 0.0)) {
            return Err(RadialError::InvalidGrid("time steps must be positive".into()));
        }
        Ok(())
    }

    /// Radial grid for `dom`: the lens at `t₋` plus a causal shield of
    /// width `t₊ − t₋`.
    pub fn build_grid(&self, dom: &DomainSpec) -> Result<RadialGrid, RadialError> {
        self.validate()?;
        if !(dom.r_plus > 0.0) {
            return Err(RadialError::InvalidGrid("lens radius r₊ must be positive".into()));
        }
        let span = dom.t_plus - dom.t_minus;
        let r_max = dom.lateral_radius(dom.t_minus) + span + 2.0 * self.dr_outer;
        RadialGrid::graded(self.r_min_factor * dom.r_plus, self.grading, self.dr_outer, r_max)
    }
}
