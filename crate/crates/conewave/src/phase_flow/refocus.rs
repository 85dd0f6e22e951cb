//! Sampled search for null geodesics that leave the cone curve and return.

use super::trajectory::{
    integrate_bicharacteristic, EndpointClass, FlowControl, Sign, Trajectory, TrajectorySample,
};
use super::{field, DomainSpec, FlowError, MetricKind, MetricModel, ProjectivePoint};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FanSettings {
    /// Launch times `t₋ + (t₊ − t₋)k/K`, `k < K`.
    pub launch_times: usize,
    /// Launch angles measured from the outgoing radial direction (model cone)
    /// or from the tangential direction in `[−θ_max, θ_max]` (Schwarzschild).
    pub directions: usize,
    /// Out-of-plane tilts of the angular momentum in `[0, π/2]`; Schwarzschild only.
    pub tilts: usize,
    pub theta_max: f64,
    /// Radial offset of the launch points from the cone curve (model cone).
    pub delta_launch: f64,
    /// Detector size around the incoming radial set, or around the curve in
    /// units of `m` for Schwarzschild.
    pub in_tube: f64,
    /// Radius of the Schwarzschild cone curve in units of `m`.
    pub curve_radius: f64,
    pub control: FlowControl,
}

impl Default for FanSettings {
    fn default() -> Self {
        Self {
            launch_times: 5,
            directions: 9,
            tilts: 3,
            theta_max: 1.2,
            delta_launch: 1e-4,
            in_tube: 1e-3,
            curve_radius: 3.0,
            control: FlowControl::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessInfo {
    /// `(launch time index, direction index, tilt index)`.
    pub launch: (usize, usize, usize),
    pub launch_point: ProjectivePoint,
    /// Detector distance at the closest return.
    pub distance: f64,
    pub return_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum FlowVerdict {
    NonRefocusing,
    RefocusingWitness { witness: WitnessInfo, trajectory: Trajectory },
    Inconclusive { step_limited: usize },
}

impl FlowVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            FlowVerdict::NonRefocusing => "non_refocusing",
            FlowVerdict::RefocusingWitness { .. } => "refocusing_witness",
            FlowVerdict::Inconclusive { .. } => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonRefocusingReport {
    pub verdict: FlowVerdict,
    pub settings: FanSettings,
    pub rays: usize,
    pub endpoint_counts: BTreeMap<String, usize>,
}

struct RayOutcome {
    index: (usize, usize, usize),
    launch: ProjectivePoint,
    trajectory: Trajectory,
    hit: Option<(f64, f64)>,
}

/// Shoots a fan of future null geodesics from the cone curve and looks for one
/// that comes back inside `dom`. A `NonRefocusing` verdict certifies only the
/// sampled fan.
pub fn check_nonrefocusing(
    g: &MetricModel,
    dom: &DomainSpec,
    fan: &FanSettings,
) -> Result<NonRefocusingReport, FlowError> {
    dom.validate()?;
    g.validate_over(dom)?;
    if !dom.lateral_is_spacelike(g) {
        return Err(FlowError::InvalidDomain("lateral boundary is not spacelike".into()));
    }
    if fan.launch_times == 0 || fan.directions == 0 {
        return Err(FlowError::InvalidDomain("fan needs at least one launch time and direction".into()));
    }
    let tilts = match g.kind {
        MetricKind::ModelCone { .. } => 1,
        MetricKind::Schwarzschild { .. } => fan.tilts.max(1),
    };
    let mut grid = Vec::new();
    for k in 0..fan.launch_times {
        for i in 0..fan.directions {
            for j in 0..tilts {
                grid.push((k, i, j));
            }
        }
    }
    let outcomes: Vec<RayOutcome> = grid
        .par_iter()
        .map(|&idx| shoot(g, dom, fan, idx, tilts))
        .collect::<Result<_, _>>()?;

    let mut endpoint_counts = BTreeMap::new();
    for o in &outcomes {
        *endpoint_counts.entry(format!("{:?}", o.trajectory.endpoint_class)).or_insert(0) += 1;
    }
    let rays = outcomes.len();
    let step_limited = outcomes.iter().filter(|o| o.trajectory.endpoint_class == EndpointClass::StepLimit).count();
    let verdict = match outcomes.into_iter().find(|o| o.hit.is_some()) {
        Some(o) => {
            let (distance, return_time) = o.hit.unwrap();
            FlowVerdict::RefocusingWitness {
                witness: WitnessInfo { launch: o.index, launch_point: o.launch, distance, return_time },
                trajectory: o.trajectory,
            }
        }
        None if step_limited > 0 => FlowVerdict::Inconclusive { step_limited },
        None => FlowVerdict::NonRefocusing,
    };
    Ok(NonRefocusingReport { verdict, settings: *fan, rays, endpoint_counts })
}

fn launch_time(dom: &DomainSpec, fan: &FanSettings, k: usize) -> f64 {
    dom.t_minus + (dom.t_plus - dom.t_minus) * k as f64 / fan.launch_times as f64
}

fn spread(i: usize, count: usize, lo: f64, hi: f64) -> f64 {
    if count == 1 {
        0.5 * (lo + hi)
    } else {
        lo + (hi - lo) * i as f64 / (count - 1) as f64
    }
}

fn unit(n: usize, axis: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    if axis < n {
        v[axis] = 1.0;
    }
    v
}

fn shoot(
    g: &MetricModel,
    dom: &DomainSpec,
    fan: &FanSettings,
    index: (usize, usize, usize),
    tilts: usize,
) -> Result<RayOutcome, FlowError> {
    let (k, i, j) = index;
    let t = launch_time(dom, fan, k);
    let n = g.n as usize;
    match g.kind {
        MetricKind::ModelCone { .. } => {
            let theta = if fan.directions == 1 { 0.0 } else { spread(i, fan.directions, 0.0, fan.theta_max) };
            let c = g.c.eval(t);
            let tangent = if n >= 2 { unit(n, 1) } else { vec![0.0; n] };
            let s = if n >= 2 { theta.sin() } else { 0.0 };
            let p = ProjectivePoint {
                t,
                r: fan.delta_launch,
                omega: unit(n, 0),
                rho_inf: 1.0,
                xi_hat: if n >= 2 { theta.cos() } else { 1.0 },
                eta_hat: tangent.iter().map(|e| e * c * s).collect(),
            };
            let tr = integrate_bicharacteristic(&p, g, dom, Sign::Future, &fan.control)?;
            let hit = tr
                .samples
                .iter()
                .map(|smp| {
                    let q = &smp.point;
                    let c = g.c.eval(q.t);
                    let eta = q.eta_hat.iter().map(|e| e * e).sum::<f64>().sqrt() / c;
                    (q.r + (q.xi_hat + 1.0).abs() + eta, q.t)
                })
                .filter(|(d, _)| *d < fan.in_tube)
                .min_by(|a, b| a.0.total_cmp(&b.0));
            Ok(RayOutcome { index, launch: p, trajectory: tr, hit })
        }
        MetricKind::Schwarzschild { m } => {
            let rc = fan.curve_radius * m;
            let f = 1.0 - 2.0 * m / rc;
            let psi = spread(i, fan.directions, -fan.theta_max, fan.theta_max);
            let chi = if tilts == 1 { 0.0 } else { spread(j, tilts, 0.0, std::f64::consts::FRAC_PI_2) };
            let amp = rc * psi.cos() / f.sqrt();
            let p = ProjectivePoint {
                t,
                r: rc,
                omega: vec![1.0, 0.0, 0.0],
                rho_inf: 0.0,
                xi_hat: psi.sin() / f,
                eta_hat: vec![0.0, amp * chi.cos(), amp * chi.sin()],
            };
            let tr = integrate_bicharacteristic(&p, g, dom, Sign::Future, &fan.control)?;
            let hit = curve_return(g, &tr, rc, fan.in_tube * m);
            Ok(RayOutcome { index, launch: p, trajectory: tr, hit })
        }
    }
}

/// Spatial position `r ω` and its derivative under the halved field.
fn position_and_velocity(g: &MetricModel, p: &ProjectivePoint) -> ([f64; 3], [f64; 3]) {
    let y = p.to_state();
    let mut dy = vec![0.0; y.len()];
    field(g, &y, &mut dy);
    let dr = 0.5 * dy[1];
    let x = [0, 1, 2].map(|c| p.r * p.omega[c]);
    let v = [0, 1, 2].map(|c| dr * p.omega[c] + p.r * 0.5 * dy[4 + c]);
    (x, v)
}

/// Cubic Hermite interpolation of the spatial position at `u ∈ [0, 1]`
/// between consecutive samples.
fn hermite_position(g: &MetricModel, a: &TrajectorySample, b: &TrajectorySample, u: f64) -> [f64; 3] {
    let h = b.s - a.s;
    let (x0, v0) = position_and_velocity(g, &a.point);
    let (x1, v1) = position_and_velocity(g, &b.point);
    let h00 = 2.0 * u * u * u - 3.0 * u * u + 1.0;
    let h10 = u * u * u - 2.0 * u * u + u;
    let h01 = -2.0 * u * u * u + 3.0 * u * u;
    let h11 = u * u * u - u * u;
    [0, 1, 2].map(|c| h00 * x0[c] + h10 * h * v0[c] + h01 * x1[c] + h11 * h * v1[c])
}

fn distance(x: [f64; 3], y: [f64; 3]) -> f64 {
    ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt()
}

/// Closest return of a Schwarzschild trajectory to the static curve
/// `r = r_c, ω = e₁` after it has left twice the tube radius.
fn curve_return(g: &MetricModel, tr: &Trajectory, rc: f64, tube: f64) -> Option<(f64, f64)> {
    let target = [rc, 0.0, 0.0];
    let mut left = false;
    let mut best: Option<(f64, f64)> = None;
    for w in tr.samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        for q in 0..=32 {
            let u = q as f64 / 32.0;
            let d = distance(hermite_position(g, a, b, u), target);
            if !left {
                left = d > 2.0 * tube;
                continue;
            }
            if d < tube && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, a.point.t + u * (b.point.t - a.point.t)));
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitCheck {
    pub m: f64,
    pub period: f64,
    pub max_radius_deviation: f64,
    pub max_residual: f64,
    /// Spatial distance between the start and the point reached after one period.
    pub return_distance: f64,
    pub trajectory: Trajectory,
}

/// Integrates the circular photon orbit at `r = 3m` for `periods` coordinate
/// periods `2π/α`, `α = √(m/r₀³)`.
pub fn photon_orbit(m: f64, periods: f64, control: &FlowControl) -> Result<OrbitCheck, FlowError> {
    let g = MetricModel::schwarzschild(m);
    let r0 = 3.0 * m;
    let alpha = (m / (r0 * r0 * r0)).sqrt();
    let period = 2.0 * std::f64::consts::PI / alpha;
    let f = 1.0 - 2.0 * m / r0;
    let p = ProjectivePoint {
        t: 0.0,
        r: r0,
        omega: vec![1.0, 0.0, 0.0],
        rho_inf: 0.0,
        xi_hat: 0.0,
        eta_hat: vec![0.0, r0 / f.sqrt(), 0.0],
    };
    let t_end = periods * period;
    let dom = DomainSpec { t_minus: -1.0, t_plus: t_end, r_plus: 10.0 * r0, kappa: 2.0, wedge: None };
    // t' = 1/(2f) under the halved field
    let ctrl = FlowControl { s_max: 4.0 * t_end * f, ..*control };
    let trajectory = integrate_bicharacteristic(&p, &g, &dom, Sign::Future, &ctrl)?;
    let max_radius_deviation =
        trajectory.samples.iter().map(|s| (s.point.r - r0).abs()).fold(0.0, f64::max);
    // t is affine in s on the circular orbit
    let return_distance = trajectory
        .samples
        .windows(2)
        .find(|w| w[0].point.t <= period && w[1].point.t >= period)
        .map(|w| {
            let u = (period - w[0].point.t) / (w[1].point.t - w[0].point.t);
            distance(hermite_position(&g, &w[0], &w[1], u), [r0, 0.0, 0.0])
        })
        .unwrap_or(f64::INFINITY);
    Ok(OrbitCheck {
        m,
        period,
        max_radius_deviation,
        max_residual: trajectory.max_residual(),
        return_distance,
        trajectory,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledScan {
    pub t0: f64,
    /// `(λ, verdict name)` in the order given.
    pub entries: Vec<(f64, String)>,
    /// Smallest scale at which the fan did not certify non-refocusing.
    pub smallest_failing: Option<f64>,
}

/// Runs the fan on the images of `dom` under `t ↦ t₀ + λ(t − t₀)`, `r ↦ λr`.
pub fn scaled_domain_scan(
    g: &MetricModel,
    dom: &DomainSpec,
    t0: f64,
    lambdas: &[f64],
    fan: &FanSettings,
) -> Result<ScaledScan, FlowError> {
    let mut entries = Vec::with_capacity(lambdas.len());
    let mut smallest_failing: Option<f64> = None;
    for &lambda in lambdas {
        if !(lambda > 0.0) {
            return Err(FlowError::InvalidDomain("scale factors must be positive".into()));
        }
        let scaled = dom.scaled(t0, lambda);
        let mut fan_l = *fan;
        fan_l.delta_launch = fan.delta_launch * lambda;
        let rep = check_nonrefocusing(g, &scaled, &fan_l)?;
        if rep.verdict != FlowVerdict::NonRefocusing {
            smallest_failing = Some(smallest_failing.map_or(lambda, |s: f64| s.min(lambda)));
        }
        entries.push((lambda, rep.verdict.name().to_string()));
    }
    Ok(ScaledScan { t0, entries, smallest_failing })
}
