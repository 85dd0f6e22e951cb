//! Scenario files: TOML documents describing one geometry, one operator and
//! the experiments to run on them.

use super::CliError;
use crate::normal_ops::{Dimension, MatchPolicy, OperatorSpec, ScanSettings, ScatteringSettings, Variant};
use crate::norms::NormOrders;
use crate::phase_flow::{DomainSpec, FanSettings, FlowControl, MetricKind, MetricModel, StepControl};
use crate::radial_solver::{FitWindow, GridSettings, IVPData, ModeSource, SourceSpec, WedgeSpec};
use crate::tfun::{ComplexFn, RealFn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Experiments a scenario may request, grouped by the subcommand that runs them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Indicial,
    Thresholds,
    Orders,
    Scan,
    Nonrefocusing,
    PhotonOrbit,
    ScaledDomains,
    Forward,
    Ivp,
    Norms,
    BRegularity,
    ExponentFit,
    WedgeEnergy,
    FieldDump,
}

impl Experiment {
    pub const ALL: [Experiment; 14] = [
        Experiment::Indicial,
        Experiment::Thresholds,
        Experiment::Orders,
        Experiment::Scan,
        Experiment::Nonrefocusing,
        Experiment::PhotonOrbit,
        Experiment::ScaledDomains,
        Experiment::Forward,
        Experiment::Ivp,
        Experiment::Norms,
        Experiment::BRegularity,
        Experiment::ExponentFit,
        Experiment::WedgeEnergy,
        Experiment::FieldDump,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricConfig {
    ModelCone {
        #[serde(default = "three")]
        n: u32,
        #[serde(default = "unit_scale")]
        c: RealFn,
        #[serde(default)]
        collar: Option<f64>,
    },
    Schwarzschild {
        m: f64,
    },
}

fn three() -> u32 {
    3
}

fn unit_scale() -> RealFn {
    RealFn::Const(1.0)
}

/// A number or an `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexInput {
    Real(f64),
    Pair([f64; 2]),
}

impl Default for ComplexInput {
    fn default() -> Self {
        ComplexInput::Real(0.0)
    }
}

impl ComplexInput {
    fn value(self) -> Complex64 {
        match self {
            ComplexInput::Real(x) => Complex64::new(x, 0.0),
            ComplexInput::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

/// A real function of `t`, or `{ re = …, im = … }` with real functions as parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Real(RealFn),
    Complex(ComplexFn),
}

impl Default for Coefficient {
    fn default() -> Self {
        Coefficient::Real(RealFn::Const(0.0))
    }
}

impl Coefficient {
    fn resolve(&self) -> ComplexFn {
        match self {
            Coefficient::Real(f) => ComplexFn { re: f.clone(), im: RealFn::Const(0.0) },
            Coefficient::Complex(f) => f.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantName {
    #[default]
    Scalar,
    DiracCoulomb,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    #[serde(default)]
    pub variant: VariantName,
    /// Defaults to the metric dimension.
    #[serde(default)]
    pub n: Option<u32>,
    #[serde(default)]
    pub b: ComplexInput,
    #[serde(default)]
    pub v0: Coefficient,
    #[serde(default)]
    pub a0: Coefficient,
    /// Coulomb charge; `dirac_coulomb` only.
    #[serde(default)]
    pub z: Option<RealFn>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub t_minus: f64,
    pub t_plus: f64,
    pub r_plus: f64,
    pub kappa: f64,
    #[serde(default)]
    pub wedge: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrdersConfig {
    /// Edge regularity order of the solution.
    pub s: u32,
    pub ell: f64,
    /// b-regularity order.
    pub k: u32,
    /// When set, the order function is built from the thresholds with this
    /// margin instead of being the constant `s`.
    pub eps: Option<f64>,
}

impl Default for OrdersConfig {
    fn default() -> Self {
        Self { s: 1, ell: 1.0, k: 0, eps: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Time on the cone curve; defaults to `t₋`.
    pub t0: Option<f64>,
    /// Highest mode listed in the root table.
    pub roots_j_max: u32,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { t0: None, roots_j_max: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub j_max: u32,
    pub samples: usize,
    /// Extra frequencies drawn uniformly on the half circle from `--seed`.
    pub random_samples: usize,
    pub zero_tol: f64,
    pub r_match: f64,
    pub max_match_radius: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        let s = ScanSettings::default();
        Self {
            j_max: s.j_max,
            samples: s.samples,
            random_samples: 0,
            zero_tol: s.zero_tol,
            r_match: s.scattering.r_match,
            max_match_radius: 1e5,
        }
    }
}

impl ScanConfig {
    pub fn settings(&self) -> ScanSettings {
        ScanSettings {
            j_max: self.j_max,
            samples: self.samples,
            zero_tol: self.zero_tol,
            scattering: ScatteringSettings {
                r_match: self.r_match,
                policy: MatchPolicy::Extend { max_radius: self.max_match_radius },
                ..ScatteringSettings::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub launch_times: usize,
    pub directions: usize,
    pub tilts: usize,
    pub theta_max: f64,
    pub delta_launch: f64,
    pub in_tube: f64,
    pub curve_radius: f64,
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
    pub s_max: f64,
    /// Coordinate periods of the circular photon orbit (Schwarzschild).
    pub orbit_periods: f64,
    /// Scale factors for the shrinking-domain scan.
    pub scales: Vec<f64>,
    /// Fixed time of the scaling; defaults to the analysis time.
    pub scale_t0: Option<f64>,
}

impl Default for FlowConfig {
    fn default() -> Self {
        let fan = FanSettings::default();
        let step = StepControl::default();
        Self {
            launch_times: fan.launch_times,
            directions: fan.directions,
            tilts: fan.tilts,
            theta_max: fan.theta_max,
            delta_launch: fan.delta_launch,
            in_tube: fan.in_tube,
            curve_radius: fan.curve_radius,
            rtol: step.rtol,
            atol: step.atol,
            h_max: step.h_max,
            max_steps: step.max_steps,
            s_max: fan.control.s_max,
            orbit_periods: 1.0,
            scales: Vec::new(),
            scale_t0: None,
        }
    }
}

impl FlowConfig {
    pub fn control(&self) -> FlowControl {
        let d = FlowControl::default();
        FlowControl {
            step: StepControl { rtol: self.rtol, atol: self.atol, h_max: self.h_max, max_steps: self.max_steps, ..d.step },
            s_max: self.s_max,
            ..d
        }
    }

    pub fn fan(&self) -> FanSettings {
        FanSettings {
            launch_times: self.launch_times,
            directions: self.directions,
            tilts: self.tilts,
            theta_max: self.theta_max,
            delta_launch: self.delta_launch,
            in_tube: self.in_tube,
            curve_radius: self.curve_radius,
            control: self.control(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub r_lo: f64,
    pub r_hi: f64,
    /// Sampling time; the nearest stored level is used.
    pub t: f64,
    /// Modes to fit; all nonzero modes when absent.
    #[serde(default)]
    pub modes: Option<Vec<u32>>,
}

impl FitConfig {
    pub fn window(&self) -> FitWindow {
        FitWindow { r_lo: self.r_lo, r_hi: self.r_hi }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    /// Highest mode solved; defaults to the largest forced mode.
    pub j_max: Option<u32>,
    /// Number of dyadic grid levels, finest last.
    pub refinements: u32,
    pub source: Vec<ModeSource>,
    pub ivp: Option<IVPData>,
    pub fit: Option<FitConfig>,
    pub wedge: Option<WedgeSpec>,
    /// Exponential weight of the wedge energy.
    pub digamma: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self { j_max: None, refinements: 1, source: Vec::new(), ivp: None, fit: None, wedge: None, digamma: 0.0 }
    }
}

/// The file as written by the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: String,
    pub metric: MetricConfig,
    #[serde(default)]
    pub operator: OperatorConfig,
    pub domain: DomainConfig,
    #[serde(default)]
    pub orders: OrdersConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub grid: GridSettings,
    #[serde(default)]
    pub solve: SolveConfig,
    #[serde(default)]
    pub experiments: Option<Vec<Experiment>>,
}

/// A validated scenario with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub metric: MetricModel,
    pub operator: OperatorSpec,
    pub domain: DomainSpec,
    pub orders: OrdersConfig,
    /// Time on the cone curve used by the analyzers.
    pub t0: f64,
    pub roots_j_max: u32,
    pub scan: ScanConfig,
    pub flow: FlowConfig,
    pub grid: GridSettings,
    pub solve: SolveConfig,
    pub experiments: Vec<Experiment>,
}

pub const MAX_DIMENSION: u32 = 16;
pub const MAX_MODES: u32 = 256;
pub const MAX_SAMPLES: usize = 4097;
pub const MAX_REFINEMENTS: u32 = 6;
pub const MAX_B_ORDER: u32 = 3;
pub const MAX_FAN: usize = 1000;

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| CliError::Validation(e.to_string()))?;
        Self::resolve(file)
    }

    pub fn resolve(file: ScenarioFile) -> Result<Self, CliError> {
        let mut errs = Vec::new();
        let (metric, metric_n) = match &file.metric {
            MetricConfig::ModelCone { n, c, collar } => (
                MetricModel { kind: MetricKind::ModelCone { collar: collar.unwrap_or(f64::INFINITY) }, n: *n, c: c.clone() },
                *n,
            ),
            MetricConfig::Schwarzschild { m } => (MetricModel::schwarzschild(*m), 3),
        };
        let n = file.operator.n.unwrap_or(metric_n);
        if !(1..=MAX_DIMENSION).contains(&n) {
            errs.push(format!("operator dimension {n} outside 1..={MAX_DIMENSION}"));
        }
        let variant = match (file.operator.variant, &file.operator.z) {
            (VariantName::Scalar, None) => Variant::Scalar,
            (VariantName::Scalar, Some(_)) => {
                errs.push("operator.z is only used by the dirac_coulomb variant".into());
                Variant::Scalar
            }
            (VariantName::DiracCoulomb, z) => {
                if n != 3 {
                    errs.push("dirac_coulomb needs n = 3".into());
                }
                Variant::DiracCoulomb { z: z.clone().unwrap_or_default() }
            }
        };
        let c = match &metric.kind {
            MetricKind::ModelCone { .. } => metric.c.clone(),
            MetricKind::Schwarzschild { .. } => RealFn::Const(1.0),
        };
        let operator = OperatorSpec {
            n: Dimension::new(n.max(1)).expect("n ≥ 1"),
            b: file.operator.b.value(),
            v0: file.operator.v0.resolve(),
            a0: file.operator.a0.resolve(),
            c,
            variant,
        };
        if let Err(e) = metric.validate() {
            errs.push(e.to_string());
        }
        if let Err(e) = operator.validate() {
            errs.push(e.to_string());
        }
        if !(operator.b.re.is_finite() && operator.b.im.is_finite()) {
            errs.push("operator.b must be finite".into());
        }
        let d = file.domain;
        let domain = DomainSpec { t_minus: d.t_minus, t_plus: d.t_plus, r_plus: d.r_plus, kappa: d.kappa, wedge: d.wedge };
        if let Err(e) = domain.validate() {
            errs.push(e.to_string());
        }
        if !(d.t_minus.is_finite() && d.t_plus.is_finite() && d.r_plus.is_finite() && d.kappa.is_finite()) {
            errs.push("domain values must be finite".into());
        }
        if errs.is_empty() {
            if let Err(e) = metric.validate_over(&domain) {
                errs.push(e.to_string());
            }
        }

        let orders = file.orders;
        if let Err(e) = (NormOrders { s: orders.s, ell: orders.ell, k: orders.k }).validate() {
            errs.push(e.to_string());
        }
        if orders.k > MAX_B_ORDER {
            errs.push(format!("orders.k = {} exceeds {MAX_B_ORDER}", orders.k));
        }
        if !orders.ell.is_finite() {
            errs.push("orders.ell must be finite".into());
        }
        if matches!(orders.eps, Some(e) if !(e > 0.0 && e.is_finite())) {
            errs.push("orders.eps must be positive".into());
        }

        let t0 = file.analysis.t0.unwrap_or(domain.t_minus);
        if !t0.is_finite() {
            errs.push("analysis.t0 must be finite".into());
        }
        if file.analysis.roots_j_max > MAX_MODES {
            errs.push(format!("analysis.roots_j_max exceeds {MAX_MODES}"));
        }

        let scan = file.scan;
        if scan.j_max > MAX_MODES {
            errs.push(format!("scan.j_max exceeds {MAX_MODES}"));
        }
        if !(1..=MAX_SAMPLES).contains(&scan.samples) || scan.random_samples > MAX_SAMPLES {
            errs.push(format!("scan sample counts must lie in 1..={MAX_SAMPLES}"));
        }
        if !(scan.zero_tol > 0.0 && scan.zero_tol < 0.5) {
            errs.push("scan.zero_tol must lie in (0, 0.5)".into());
        }
        if !(scan.r_match >= 1.0 && scan.max_match_radius >= scan.r_match && scan.max_match_radius <= 1e5) {
            errs.push("scan needs 1 ≤ r_match ≤ max_match_radius ≤ 1e5".into());
        }

        let flow = file.flow;
        for (name, v) in [("launch_times", flow.launch_times), ("directions", flow.directions), ("tilts", flow.tilts)] {
            if !(1..=MAX_FAN).contains(&v) {
                errs.push(format!("flow.{name} must lie in 1..={MAX_FAN}"));
            }
        }
        if !(flow.rtol > 0.0 && flow.rtol <= 1e-3 && flow.atol > 0.0 && flow.atol <= 1e-3) {
            errs.push("flow tolerances must lie in (0, 1e-3]".into());
        }
        if !(flow.theta_max > 0.0 && flow.theta_max < std::f64::consts::FRAC_PI_2) {
            errs.push("flow.theta_max must lie in (0, π/2)".into());
        }
        for (name, v) in [
            ("delta_launch", flow.delta_launch),
            ("in_tube", flow.in_tube),
            ("h_max", flow.h_max),
            ("s_max", flow.s_max),
            ("orbit_periods", flow.orbit_periods),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(format!("flow.{name} must be positive"));
            }
        }
        if !(flow.curve_radius > 2.0) {
            errs.push("flow.curve_radius must exceed the horizon radius 2".into());
        }
        if flow.max_steps == 0 {
            errs.push("flow.max_steps must be positive".into());
        }
        if flow.scales.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            errs.push("flow.scales must be positive".into());
        }

        let grid = file.grid;
        if let Err(e) = grid.validate() {
            errs.push(e.to_string());
        }
        if !(grid.grading >= 1.0 && grid.grading <= 1.2) {
            errs.push("grid.grading must lie in [1, 1.2]".into());
        }
        if !(grid.dr_outer > 0.0 && grid.dr_outer <= 1.0) {
            errs.push("grid.dr_outer must lie in (0, 1]".into());
        }

        let solve = file.solve;
        if !(1..=MAX_REFINEMENTS).contains(&solve.refinements) {
            errs.push(format!("solve.refinements must lie in 1..={MAX_REFINEMENTS}"));
        }
        if matches!(solve.j_max, Some(j) if j > MAX_MODES) {
            errs.push(format!("solve.j_max exceeds {MAX_MODES}"));
        }
        if errs.is_empty() {
            if let Err(e) = (SourceSpec { modes: solve.source.clone() }).validate(&domain) {
                errs.push(e.to_string());
            }
            if let Some(ivp) = &solve.ivp {
                if let Err(e) = ivp.validate(n) {
                    errs.push(e.to_string());
                }
            }
        }
        if let Some(fit) = &solve.fit {
            if !(fit.r_lo > 0.0 && fit.r_lo < fit.r_hi && fit.t.is_finite()) {
                errs.push("solve.fit needs 0 < r_lo < r_hi and a finite t".into());
            }
        }
        if let Some(w) = &solve.wedge {
            if !(w.tau0 > -1.0 && w.tau0 < w.tau1 && w.tau1 < 1.0 && w.slices >= 2 && w.slices <= MAX_SAMPLES) {
                errs.push("solve.wedge needs −1 < tau0 < tau1 < 1 and at least two slices".into());
            }
        }
        if !solve.digamma.is_finite() {
            errs.push("solve.digamma must be finite".into());
        }

        let experiments = match &file.experiments {
            Some(list) => {
                let mut v = list.clone();
                v.sort();
                v.dedup();
                for e in &v {
                    if let Some(msg) = missing_input(*e, &metric, &flow, &solve) {
                        errs.push(format!("experiment {e:?} requested but {msg}"));
                    }
                }
                v
            }
            None => Experiment::ALL
                .into_iter()
                .filter(|&e| e != Experiment::FieldDump && missing_input(e, &metric, &flow, &solve).is_none())
                .collect(),
        };

        if !errs.is_empty() {
            return Err(CliError::Validation(errs.join("; ")));
        }
        Ok(Self {
            name: file.name,
            metric,
            operator,
            domain,
            orders,
            t0,
            roots_j_max: file.analysis.roots_j_max,
            scan,
            flow,
            grid,
            solve,
            experiments,
        })
    }

    pub fn wants(&self, e: Experiment) -> bool {
        self.experiments.contains(&e)
    }

    pub fn norm_orders(&self) -> NormOrders {
        NormOrders { s: self.orders.s, ell: self.orders.ell, k: self.orders.k }
    }
}

/// Why `e` cannot run on this scenario, if it cannot.
fn missing_input(e: Experiment, metric: &MetricModel, flow: &FlowConfig, solve: &SolveConfig) -> Option<&'static str> {
    let schwarzschild = matches!(metric.kind, MetricKind::Schwarzschild { .. });
    match e {
        Experiment::PhotonOrbit if !schwarzschild => Some("the metric is not Schwarzschild"),
        Experiment::ScaledDomains if flow.scales.is_empty() => Some("flow.scales is empty"),
        Experiment::Forward if solve.source.is_empty() => Some("solve.source is empty"),
        Experiment::Ivp if solve.ivp.is_none() => Some("solve.ivp is absent"),
        Experiment::ExponentFit if solve.fit.is_none() => Some("solve.fit is absent"),
        Experiment::WedgeEnergy if solve.wedge.is_none() => Some("solve.wedge is absent"),
        _ => None,
    }
}
