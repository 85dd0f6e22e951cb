use super::report::{to_value, RunOutput, Status};
use super::scenario::{Experiment, Scenario};
use super::CliError;
use crate::normal_ops::{
    admissible_orders_ok, dirac_coulomb_gap, indicial_roots, is_non_indicial, spectral_admissibility_scan,
    thresholds, upper_half_circle, weight_window, ScanVerdict, SpectralScan, Variant,
};
use crate::norms::{b_regularity_norms, edge_norm, NormOrders};
use crate::phase_flow::{
    build_order_function, check_nonrefocusing, photon_orbit, scaled_domain_scan, FlowVerdict, MetricKind,
    OrderFunction,
};
use crate::radial_solver::{
    forward_solve, phg_exponent_fit, solve_ivp, wedge_energy_monitor, IVPData, ModeField, SourceSpec,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};
use std::fmt::Write;

fn new_output(command: &'static str, sc: &Scenario, seed: u64) -> RunOutput {
    RunOutput::new(command, seed, to_value(sc))
}

/// Uniform samples on the closed upper half circle plus `extra` seeded ones.
fn frequencies(samples: usize, extra: usize, seed: u64) -> Vec<Complex64> {
    let mut sigmas = upper_half_circle(samples);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut angles: Vec<f64> = (0..extra).map(|_| rng.gen_range(0.0..=std::f64::consts::PI)).collect();
    angles.sort_by(f64::total_cmp);
    sigmas.extend(angles.into_iter().map(|a| Complex64::from_polar(1.0, a)));
    sigmas
}

fn run_scan(sc: &Scenario, seed: u64) -> Result<SpectralScan, CliError> {
    let sigmas = frequencies(sc.scan.samples, sc.scan.random_samples, seed);
    Ok(spectral_admissibility_scan(&sc.operator, sc.t0, sc.orders.ell, &sigmas, &sc.scan.settings())?)
}

fn scan_summary(scan: &SpectralScan) -> Value {
    let min = |f: fn(&crate::normal_ops::ScanEntry) -> f64| {
        scan.entries.iter().map(f).fold(f64::INFINITY, f64::min)
    };
    json!({
        "verdict": scan.verdict,
        "t0": scan.t0,
        "ell": scan.ell,
        "j_max": scan.j_max,
        "zero_tol": scan.zero_tol,
        "evaluations": scan.entries.len(),
        "min_direct_measure": finite_or_null(min(|e| e.direct_measure)),
        "min_adjoint_measure": finite_or_null(min(|e| e.adjoint_measure)),
        "max_wronskian_drift": scan.max_wronskian_drift,
    })
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn scan_csv(scan: &SpectralScan) -> String {
    let mut s = String::from(
        "j,sample,sigma_re,sigma_im,c_out_re,c_out_im,c_out_log_scale,c_in_re,c_in_im,c_in_log_scale,\
         direct_measure,adjoint_measure,wronskian_drift,r_match\n",
    );
    for e in &scan.entries {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            e.j,
            e.sample,
            e.sigma.re,
            e.sigma.im,
            e.c_out.mantissa.re,
            e.c_out.mantissa.im,
            e.c_out.log_scale,
            e.c_in.mantissa.re,
            e.c_in.mantissa.im,
            e.c_in.log_scale,
            e.direct_measure,
            e.adjoint_measure,
            e.wronskian_drift,
            e.r_match
        );
    }
    s
}

fn inconclusive(scan: &SpectralScan) -> bool {
    matches!(scan.verdict, ScanVerdict::Inconclusive { .. })
}

pub fn analyze(sc: &Scenario, seed: u64) -> Result<RunOutput, CliError> {
    let mut out = new_output("analyze", sc, seed);
    let op = &sc.operator;
    let (t0, ell) = (sc.t0, sc.orders.ell);
    let window = weight_window(op, t0)?;
    let mut res = Map::new();
    res.insert("t0".into(), json!(t0));
    res.insert("ell".into(), json!(ell));
    res.insert("window".into(), to_value(&window));
    res.insert("ell_in_window".into(), json!(window.contains(ell)));
    if let Variant::DiracCoulomb { z } = &op.variant {
        res.insert("dirac_gap".into(), json!(dirac_coulomb_gap(z.eval(t0))));
    }
    if sc.wants(Experiment::Indicial) && op.is_scalar() {
        let mut csv = String::from("j,plus_re,plus_im,minus_re,minus_im,double\n");
        let roots: Vec<Value> = (0..=sc.roots_j_max)
            .map(|j| {
                let r = indicial_roots(op, t0, j);
                let _ = writeln!(csv, "{j},{},{},{},{},{}", r.plus.re, r.plus.im, r.minus.re, r.minus.im, r.double);
                json!({ "j": j, "plus": r.plus, "minus": r.minus, "double": r.double })
            })
            .collect();
        res.insert("roots".into(), Value::Array(roots));
        res.insert("non_indicial".into(), json!(is_non_indicial(op, t0, ell)));
        out.add_file("roots.csv", csv.into_bytes());
    }
    let th = thresholds(op, t0, ell);
    if sc.wants(Experiment::Thresholds) {
        res.insert("thresholds".into(), to_value(&th));
    }
    if sc.wants(Experiment::Orders) {
        let f = match sc.orders.eps {
            Some(eps) => build_order_function(th.s_in_min, th.s_out_max, eps),
            None => OrderFunction::constant(sc.orders.s as f64),
        };
        res.insert("order_function".into(), to_value(&f));
        res.insert("orders".into(), to_value(&admissible_orders_ok(&f, ell, &th, &window)));
    }
    if sc.wants(Experiment::Scan) && op.is_scalar() {
        let scan = run_scan(sc, seed)?;
        if inconclusive(&scan) {
            out.status = Status::Inconclusive;
        }
        res.insert("scan".into(), scan_summary(&scan));
    }
    out.results = Value::Object(res);
    Ok(out)
}

pub fn modes(sc: &Scenario, seed: u64) -> Result<RunOutput, CliError> {
    if !sc.operator.is_scalar() {
        return Err(CliError::Validation("the spectral scan needs the scalar variant".into()));
    }
    let mut out = new_output("modes", sc, seed);
    let scan = run_scan(sc, seed)?;
    if inconclusive(&scan) {
        out.status = Status::Inconclusive;
    }
    let per_mode: Vec<Value> = (0..=scan.j_max)
        .filter_map(|j| {
            let e: Vec<_> = scan.entries.iter().filter(|e| e.j == j).collect();
            (!e.is_empty()).then(|| {
                let m = |f: &dyn Fn(&&crate::normal_ops::ScanEntry) -> f64| e.iter().map(f).fold(f64::INFINITY, f64::min);
                json!({
                    "j": j,
                    "min_direct_measure": m(&|x| x.direct_measure),
                    "min_adjoint_measure": m(&|x| x.adjoint_measure),
                })
            })
        })
        .collect();
    out.results = json!({ "scan": scan_summary(&scan), "modes": per_mode });
    out.add_file("scan.csv", scan_csv(&scan).into_bytes());
    Ok(out)
}

pub fn flow(sc: &Scenario, seed: u64) -> Result<RunOutput, CliError> {
    let mut out = new_output("flow", sc, seed);
    let fan = sc.flow.fan();
    let mut res = Map::new();
    if sc.wants(Experiment::Nonrefocusing) {
        let rep = check_nonrefocusing(&sc.metric, &sc.domain, &fan)?;
        let mut v = json!({
            "verdict": rep.verdict.name(),
            "rays": rep.rays,
            "endpoint_counts": rep.endpoint_counts,
        });
        match &rep.verdict {
            FlowVerdict::RefocusingWitness { witness, trajectory } => {
                let (lo, hi) = trajectory
                    .samples
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.point.r), hi.max(s.point.r)));
                v["witness"] = to_value(witness);
                v["witness_radius_range"] = json!([lo, hi]);
                v["witness_samples"] = json!(trajectory.samples.len());
                out.add_file("witness_trajectory.csv", trajectory.to_csv().into_bytes());
            }
            FlowVerdict::Inconclusive { step_limited } => {
                v["step_limited"] = json!(step_limited);
                out.status = Status::Inconclusive;
            }
            FlowVerdict::NonRefocusing => {}
        }
        res.insert("nonrefocusing".into(), v);
    }
    if sc.wants(Experiment::PhotonOrbit) {
        let MetricKind::Schwarzschild { m } = sc.metric.kind else {
            unreachable!("validated: photon orbit needs Schwarzschild")
        };
        let o = photon_orbit(m, sc.flow.orbit_periods, &sc.flow.control())?;
        res.insert(
            "photon_orbit".into(),
            json!({
                "m": o.m,
                "radius": 3.0 * m,
                "period": o.period,
                "periods": sc.flow.orbit_periods,
                "max_radius_deviation": o.max_radius_deviation,
                "max_radius_deviation_over_m": o.max_radius_deviation / m,
                "return_distance": o.return_distance,
                "max_residual": o.max_residual,
            }),
        );
        out.add_file("orbit_trajectory.csv", o.trajectory.to_csv().into_bytes());
    }
    if sc.wants(Experiment::ScaledDomains) {
        let t0 = sc.flow.scale_t0.unwrap_or(sc.t0);
        let scan = scaled_domain_scan(&sc.metric, &sc.domain, t0, &sc.flow.scales, &fan)?;
        if scan.entries.iter().any(|(_, v)| v == "inconclusive") {
            out.status = Status::Inconclusive;
        }
        res.insert("scaled_domains".into(), to_value(&scan));
    }
    out.results = Value::Object(res);
    Ok(out)
}

enum Problem<'a> {
    Forward(SourceSpec, u32),
    Ivp(&'a IVPData),
}

impl Problem<'_> {
    fn name(&self) -> &'static str {
        match self {
            Problem::Forward(..) => "forward",
            Problem::Ivp(_) => "ivp",
        }
    }
}

pub fn solve(sc: &Scenario, seed: u64, force: bool) -> Result<RunOutput, CliError> {
    if !sc.operator.is_scalar() {
        return Err(CliError::Validation("the time-domain solver needs the scalar variant".into()));
    }
    let mut out = new_output("solve", sc, seed);
    let mut res = Map::new();
    if force {
        res.insert("gate".into(), json!("skipped"));
    } else {
        let scan = run_scan(sc, seed)?;
        match &scan.verdict {
            ScanVerdict::Admissible => {}
            ScanVerdict::NotAdmissible { reason } => return Err(CliError::NotAdmissible(reason.clone())),
            ScanVerdict::Inconclusive { .. } => {
                out.status = Status::Inconclusive;
                res.insert("gate".into(), scan_summary(&scan));
                out.results = Value::Object(res);
                return Ok(out);
            }
        }
        res.insert("gate".into(), scan_summary(&scan));
    }

    let mut problems = Vec::new();
    if sc.wants(Experiment::Forward) {
        let src = SourceSpec { modes: sc.solve.source.clone() };
        let top = src.modes.iter().map(|m| m.j).max().unwrap_or(0);
        problems.push(Problem::Forward(src, sc.solve.j_max.unwrap_or(top)));
    }
    if sc.wants(Experiment::Ivp) {
        problems.push(Problem::Ivp(sc.solve.ivp.as_ref().expect("validated: ivp present")));
    }
    for p in &problems {
        let v = run_problem(sc, p, &mut out)?;
        res.insert(p.name().into(), v);
    }
    out.results = Value::Object(res);
    Ok(out)
}

fn run_problem(sc: &Scenario, p: &Problem, out: &mut RunOutput) -> Result<Value, CliError> {
    let (op, dom) = (&sc.operator, &sc.domain);
    let mut runs: Vec<Vec<ModeField>> = Vec::new();
    let mut levels = Vec::new();
    let mut margin = None;
    for l in 0..sc.solve.refinements {
        let gs = sc.grid.refined(l);
        let fields = match p {
            Problem::Forward(src, j_max) => forward_solve(op, dom, src, *j_max, &gs)?,
            Problem::Ivp(data) => {
                let (f, m) = solve_ivp(op, dom, data, &gs)?;
                margin = Some(m);
                f
            }
        };
        let f0 = &fields[0];
        levels.push(json!({
            "level": l,
            "dr_outer": gs.dr_outer,
            "grading": gs.grading,
            "nodes": f0.n_nodes(),
            "stored_levels": f0.n_levels(),
            "dt": f0.dt,
            "steps": f0.steps,
            "cfl_number": fields.iter().map(|f| f.cfl_number).fold(0.0, f64::max),
            "peak": fields.iter().map(|f| f.peak_abs()).fold(0.0, f64::max),
        }));
        runs.push(fields);
    }
    let name = p.name();
    let mut res = Map::new();
    res.insert("levels".into(), Value::Array(levels));
    if let Some(m) = margin {
        res.insert("decay_margin".into(), finite_or_null(m));
    }
    let ord = sc.norm_orders();

    if sc.wants(Experiment::Norms) {
        let u_ord = NormOrders { k: 0, ..ord };
        let f_ord = NormOrders { s: ord.s.saturating_sub(1), ell: ord.ell - 2.0, k: 0 };
        let mut csv = String::from("level,u_norm,f_norm,ratio\n");
        let mut rows = Vec::new();
        let mut ratios = Vec::new();
        for (l, fields) in runs.iter().enumerate() {
            let u = edge_norm(fields, u_ord)?;
            let sources: Vec<ModeField> = fields.iter().map(|f| f.source_field()).collect();
            let f = edge_norm(&sources, f_ord)?;
            let ratio = (f > 0.0).then(|| u / f);
            ratios.push(ratio);
            let _ = writeln!(csv, "{l},{u},{f},{}", ratio.map_or(String::new(), |r| r.to_string()));
            rows.push(json!({ "level": l, "u_norm": u, "f_norm": f, "ratio": ratio }));
        }
        let change = match ratios.as_slice() {
            [.., Some(a), Some(b)] => Some((b - a).abs() / a.abs()),
            _ => None,
        };
        res.insert(
            "norms".into(),
            json!({
                "u_orders": u_ord,
                "f_orders": f_ord,
                "rows": rows,
                "ratio_change": change,
            }),
        );
        out.add_file(format!("{name}_norms.csv"), csv.into_bytes());
    }

    if sc.wants(Experiment::BRegularity) && ord.k > 0 {
        let table = b_regularity_norms(&runs, ord)?;
        out.add_file(format!("{name}_b_regularity.csv"), table.to_csv().into_bytes());
        res.insert("b_regularity".into(), to_value(&table));
    }

    let finest = runs.last().expect("at least one refinement");
    if sc.wants(Experiment::ExponentFit) {
        let fit = sc.solve.fit.as_ref().expect("validated: fit present");
        let modes: Vec<u32> = match &fit.modes {
            Some(m) => m.clone(),
            None => finest.iter().filter(|f| !f.is_identically_zero()).map(|f| f.j).collect(),
        };
        let mut rows = Vec::new();
        for j in modes {
            let Some(field) = finest.iter().find(|f| f.j == j) else {
                rows.push(json!({ "j": j, "error": "mode not solved" }));
                continue;
            };
            let expected = indicial_roots(op, fit.t, j).plus.re;
            rows.push(match phg_exponent_fit(field, fit.window(), fit.t) {
                Ok(e) => json!({
                    "j": j,
                    "slope": e.slope,
                    "stderr": e.stderr,
                    "t": e.t,
                    "points": e.points,
                    "expected": expected,
                    "abs_error": (e.slope - expected).abs(),
                    "rel_error": if expected != 0.0 { Some((e.slope - expected).abs() / expected.abs()) } else { None },
                }),
                Err(e) => json!({ "j": j, "expected": expected, "error": e.to_string() }),
            });
        }
        res.insert("exponent_fit".into(), Value::Array(rows));
    }

    if sc.wants(Experiment::WedgeEnergy) {
        let wedge = sc.solve.wedge.as_ref().expect("validated: wedge present");
        let mut csv = String::from("j,tau,energy\n");
        let mut rows = Vec::new();
        for f in finest.iter().filter(|f| !f.is_identically_zero()) {
            let tr = wedge_energy_monitor(f, op, ord.ell, sc.solve.digamma, wedge)?;
            for (t, e) in tr.taus.iter().zip(&tr.energies) {
                let _ = writeln!(csv, "{},{t},{e}", f.j);
            }
            rows.push(json!({ "j": f.j, "reach": tr.reach, "max_positive_jump": tr.max_positive_jump }));
        }
        out.add_file(format!("{name}_wedge_energy.csv"), csv.into_bytes());
        res.insert("wedge_energy".into(), Value::Array(rows));
    }

    if sc.wants(Experiment::FieldDump) {
        for f in finest {
            let mut bytes = Vec::new();
            f.write_binary(&mut bytes).map_err(|e| CliError::Io(e.to_string()))?;
            out.add_file(format!("{name}_mode{}.cwmf", f.j), bytes);
        }
    }
    Ok(Value::Object(res))
}
