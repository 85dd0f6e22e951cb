use super::ode::{drive, DriveEnd, StepControl};
use super::{check_chart, field, null_residual, project, DomainSpec, FlowError, MetricKind, MetricModel, ProjectivePoint};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::ops::ControlFlow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Future,
    Past,
}

impl Sign {
    pub fn flipped(self) -> Self {
        match self {
            Sign::Future => Sign::Past,
            Sign::Past => Sign::Future,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EndpointClass {
    ToRadialIn,
    FromRadialOut,
    ExitInitial,
    ExitFinal,
    ExitLateral,
    Interior,
    StepLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowControl {
    pub step: StepControl,
    /// Largest affine parameter before the trajectory is reported as `Interior`.
    pub s_max: f64,
    /// Radius of the radial-set detector `r + |ξ̂ ∓ 1| + |η̂|_h`.
    pub eps_rad: f64,
    /// Admissible `|G/σ²|` at the initial point.
    pub null_tol: f64,
}

impl Default for FlowControl {
    fn default() -> Self {
        Self { step: StepControl::default(), s_max: 60.0, eps_rad: 1e-6, null_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub s: f64,
    pub point: ProjectivePoint,
    /// `G/σ²` before the constraint was re-projected.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub sign: Sign,
    pub endpoint_class: EndpointClass,
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn last(&self) -> &ProjectivePoint {
        &self.samples.last().expect("trajectories hold their initial point").point
    }

    pub fn max_residual(&self) -> f64 {
        self.samples.iter().map(|s| s.residual.abs()).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let n = self.samples.first().map_or(0, |s| s.point.omega.len());
        let mut out = String::from("s,t,r");
        for i in 0..n {
            let _ = write!(out, ",omega_{i}");
        }
        out.push_str(",rho_inf,xi_hat");
        for i in 0..n {
            let _ = write!(out, ",eta_hat_{i}");
        }
        out.push_str(",g_residual\n");
        for smp in &self.samples {
            let p = &smp.point;
            let _ = write!(out, "{:e},{:e},{:e}", smp.s, p.t, p.r);
            for w in &p.omega {
                let _ = write!(out, ",{w:e}");
            }
            let _ = write!(out, ",{:e},{:e}", p.rho_inf, p.xi_hat);
            for e in &p.eta_hat {
                let _ = write!(out, ",{e:e}");
            }
            let _ = writeln!(out, ",{:e}", smp.residual);
        }
        out
    }
}

enum Stop {
    Class(EndpointClass),
    Chart(f64),
}

/// Integrates the flow of `±½σ⁻¹H_{G_e}` from `p0` until it reaches a radial
/// set, leaves `dom`, exceeds `s_max`, or exhausts the step budget. With
/// this normalization `ξ̂(s) = tanh(s − s₀)` over `r = 0`.
pub fn integrate_bicharacteristic(
    p0: &ProjectivePoint,
    g: &MetricModel,
    dom: &DomainSpec,
    sign: Sign,
    ctrl: &FlowControl,
) -> Result<Trajectory, FlowError> {
    dom.validate()?;
    g.validate_over(dom)?;
    let n = g.n as usize;
    if p0.omega.len() != n || p0.eta_hat.len() != n {
        return Err(FlowError::InvalidPoint(format!("ω and η̂ must have {n} components")));
    }
    let wn = p0.omega.iter().map(|w| w * w).sum::<f64>().sqrt();
    let dot: f64 = p0.omega.iter().zip(&p0.eta_hat).map(|(a, b)| a * b).sum();
    if (wn - 1.0).abs() > 1e-10 || dot.abs() > 1e-10 * (1.0 + p0.eta_hat.iter().map(|e| e.abs()).sum::<f64>()) {
        return Err(FlowError::InvalidPoint("need |ω| = 1 and η ⟂ ω".into()));
    }
    if !(p0.t >= dom.t_minus && p0.t <= dom.t_plus) {
        return Err(FlowError::InvalidPoint(format!("t = {} outside [t₋, t₊]", p0.t)));
    }
    check_chart(g, p0.r)?;
    let y0 = p0.to_state();
    let residual = null_residual(g, &y0);
    if residual.abs() > ctrl.null_tol {
        return Err(FlowError::NotCharacteristic { residual });
    }
    let factor = match sign {
        Sign::Future => 0.5,
        Sign::Past => -0.5,
    };
    let mut samples = vec![TrajectorySample { s: 0.0, point: p0.clone(), residual }];
    let end = drive(
        &y0,
        ctrl.s_max,
        &ctrl.step,
        |_, y, dy| {
            field(g, y, dy);
            for d in dy.iter_mut() {
                *d *= factor;
            }
        },
        |s, y| {
            let residual = null_residual(g, y);
            project(g, y);
            samples.push(TrajectorySample { s, point: ProjectivePoint::from_state(y), residual });
            if check_chart(g, y[1]).is_err() {
                return ControlFlow::Break(Stop::Chart(y[1]));
            }
            match classify(g, dom, sign, y, ctrl.eps_rad) {
                Some(c) => ControlFlow::Break(Stop::Class(c)),
                None => ControlFlow::Continue(()),
            }
        },
    );
    let endpoint_class = match end {
        DriveEnd::Broke(Stop::Class(c)) => c,
        DriveEnd::Broke(Stop::Chart(r)) => {
            let limit = match g.kind {
                MetricKind::ModelCone { collar } => collar,
                MetricKind::Schwarzschild { m } => 2.0 * m,
            };
            return Err(FlowError::OutsideChart { r, limit });
        }
        DriveEnd::ReachedEnd => EndpointClass::Interior,
        DriveEnd::StepLimit => EndpointClass::StepLimit,
    };
    Ok(Trajectory { sign, endpoint_class, samples })
}

/// Horizon buffer for Schwarzschild trajectories, in units of `m`.
const HORIZON_BUFFER: f64 = 0.05;

fn classify(g: &MetricModel, dom: &DomainSpec, sign: Sign, y: &[f64], eps_rad: f64) -> Option<EndpointClass> {
    let n = (y.len() - 4) / 2;
    let (t, r, xi) = (y[0], y[1], y[3]);
    if let MetricKind::ModelCone { .. } = g.kind {
        let c = g.c.eval(t);
        let eta = y[4 + n..].iter().map(|e| e * e).sum::<f64>().sqrt() / c;
        match sign {
            Sign::Future if r + (xi + 1.0).abs() + eta < eps_rad => return Some(EndpointClass::ToRadialIn),
            Sign::Past if r + (xi - 1.0).abs() + eta < eps_rad => return Some(EndpointClass::FromRadialOut),
            _ => {}
        }
    }
    if t >= dom.t_plus {
        return Some(EndpointClass::ExitFinal);
    }
    if t <= dom.t_minus {
        return Some(EndpointClass::ExitInitial);
    }
    if r >= dom.lateral_radius(t) {
        return Some(EndpointClass::ExitLateral);
    }
    if let MetricKind::Schwarzschild { m } = g.kind {
        if r <= (2.0 + HORIZON_BUFFER) * m {
            return Some(EndpointClass::ExitLateral);
        }
    }
    None
}
