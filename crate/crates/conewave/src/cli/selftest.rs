//! Fast invariant checks run by the `selftest` subcommands.

use super::report::{to_value, RunOutput, Status};
use crate::normal_ops::{
    indicial_roots, is_non_indicial, mode_scattering_with, recessive_profile, weight_window, MatchPolicy,
    NormalOpsError, OperatorSpec, ScatteringSettings,
};
use crate::norms::{edge_norm, NormOrders};
use crate::phase_flow::{
    check_nonrefocusing, integrate_bicharacteristic, photon_orbit, DomainSpec, FanSettings, FlowControl,
    FlowVerdict, MetricModel, ProjectivePoint, Sign, StepControl, Trajectory,
};
use crate::radial_solver::{
    backward_solve, forward_solve, GridSettings, ModeField, ModeSource, Profile, RadialGrid, RadialProfile,
    SourceSpec,
};
use crate::specfun::{invariant_grid, recurrence_residual, wronskian_residual, Family};
use crate::tfun::RealFn;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use std::f64::consts::PI;
use std::fmt::Write;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub module: &'static str,
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn check(module: &'static str, name: &'static str, value: f64, tolerance: f64) -> Check {
    Check { module, name, value, tolerance, passed: value <= tolerance }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    // NaN and errors (mapped to ∞) both count as a failure
    it.into_iter().fold(0.0, |a, x| if x.is_nan() { f64::INFINITY } else { a.max(x) })
}

fn specfun_checks(rng: &mut ChaCha8Rng) -> Vec<Check> {
    let grid = invariant_grid();
    let w = max_of(grid.iter().map(|&(nu, z)| wronskian_residual(nu, z).unwrap_or(f64::INFINITY)));
    let shifted: Vec<_> = grid.iter().filter(|(nu, _)| nu.re >= 1.0).collect();
    let rec = |fam| max_of(shifted.iter().map(|&&(nu, z)| recurrence_residual(fam, nu, z).unwrap_or(f64::INFINITY)));
    let random = max_of((0..64).map(|_| {
        let nu = c(rng.gen_range(0.0..6.0), rng.gen_range(-0.5..0.5));
        let z = C64::from_polar(rng.gen_range(0.2..80.0), rng.gen_range(0.0..1.2));
        wronskian_residual(nu, z).unwrap_or(f64::INFINITY)
    }));
    vec![
        check("specfun", "wronskian_grid", w, 1e-10),
        check("specfun", "recurrence_j", rec(Family::J), 1e-8),
        check("specfun", "recurrence_h1", rec(Family::H1), 1e-8),
        check("specfun", "wronskian_random", random, 1e-9),
    ]
}

fn normal_ops_checks(rng: &mut ChaCha8Rng) -> Vec<Check> {
    let vieta = max_of((0..200).map(|_| {
        let n = rng.gen_range(2..7u32);
        let j = rng.gen_range(0..40u32);
        let Ok(mut op) = OperatorSpec::scalar(n, c(rng.gen_range(-0.2..4.0), rng.gen_range(-2.0..2.0)), c(0.0, 0.0))
        else {
            return f64::INFINITY;
        };
        op.b = c(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
        let cs: f64 = rng.gen_range(0.5..2.0);
        op.c = RealFn::Const(cs);
        let r = indicial_roots(&op, 0.0, j);
        let lam2 = (j * (j + n - 2)) as f64 / (cs * cs);
        let sum = -(n as f64 - 2.0 + op.b);
        let prod = -(lam2 + op.v0_at(0.0));
        ((r.plus + r.minus - sum).norm() / (1.0 + sum.norm())).max((r.plus * r.minus - prod).norm() / (1.0 + prod.norm()))
    }));

    // interior of the window is non-indicial, its ends are not
    let mut violations = 0.0;
    for v0 in [c(0.1, 0.0), c(0.75, 0.0), c(2.0, 0.0), c(3.5, 0.0), c(1.0, 0.5)] {
        let op = OperatorSpec::scalar(3, v0, c(0.0, 0.0)).expect("n = 3");
        let Ok(w) = weight_window(&op, 0.0) else {
            violations += 1.0;
            continue;
        };
        violations += (1..200).filter(|&k| !is_non_indicial(&op, 0.0, w.lower + w.width() * k as f64 / 200.0)).count() as f64;
        violations += [w.lower, w.upper].iter().filter(|&&l| is_non_indicial(&op, 0.0, l)).count() as f64;
    }

    let dirac = max_of((0..=30).map(|k| {
        match weight_window(&OperatorSpec::dirac_coulomb(0.1 * k as f64), 0.0) {
            Ok(w) => (0.5 * (w.lower + w.upper) - 1.0).abs(),
            Err(NormalOpsError::DegenerateWindow) => 0.0,
            Err(_) => f64::INFINITY,
        }
    }));

    let op = OperatorSpec::scalar(3, c(0.3, 0.1), c(0.08, 0.0)).expect("n = 3");
    let xi = indicial_roots(&op, 0.0, 1).plus;
    let sigma_hat = C64::from_polar(1.0, rng.gen_range(0.0..PI));
    let scaling = max_of([0.5, 2.0].iter().flat_map(|&mag| {
        let radii = [0.3, 1.1, 2.5, 4.0];
        let scaled: Vec<f64> = radii.iter().map(|r| r * mag).collect();
        let u = recessive_profile(&op, 0.0, 1, sigma_hat * mag, &radii);
        let uh = recessive_profile(&op, 0.0, 1, sigma_hat, &scaled);
        let factor = c(mag, 0.0).powc(-xi);
        match (u, uh) {
            (Ok(u), Ok(uh)) => u.iter().zip(&uh).map(|(a, b)| (a - factor * b).norm() / a.norm()).collect::<Vec<_>>(),
            _ => vec![f64::INFINITY],
        }
    }));

    let settings = ScatteringSettings { policy: MatchPolicy::Extend { max_radius: 1e4 }, ..Default::default() };
    let drift = max_of((0..12).map(|_| {
        let Ok(op) = OperatorSpec::scalar(3, c(rng.gen_range(0.05..3.0), rng.gen_range(-1.0..1.0)), c(rng.gen_range(-0.3..0.3), 0.0))
        else {
            return f64::INFINITY;
        };
        let sigma = C64::from_polar(1.0, rng.gen_range(0.0..PI));
        mode_scattering_with(&op, 0.0, rng.gen_range(0..8), sigma, &settings).map_or(f64::INFINITY, |s| s.wronskian_drift)
    }));

    vec![
        check("normal_ops", "vieta", vieta, 1e-12),
        check("normal_ops", "window_matches_non_indicial_set", violations, 0.0),
        check("normal_ops", "dirac_window_symmetric", dirac, 1e-15),
        check("normal_ops", "scaling_relation", scaling, 1e-9),
        check("normal_ops", "wronskian_drift", drift, 1e-8),
    ]
}

fn fiber_length(tr: &Trajectory, c: f64) -> f64 {
    tr.samples
        .windows(2)
        .map(|w| {
            let d: f64 = w[0].point.omega.iter().zip(&w[1].point.omega).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            2.0 * (0.5 * d).asin() * c
        })
        .sum()
}

fn phase_flow_checks() -> Vec<Check> {
    let tight = FlowControl { step: StepControl { rtol: 1e-12, atol: 1e-14, ..Default::default() }, ..Default::default() };
    let cs = 1.5;
    let g = MetricModel::model_cone(3, RealFn::Const(cs));
    let s0: f64 = 12.0;
    let p = ProjectivePoint {
        t: 0.3,
        r: 0.0,
        omega: vec![1.0, 0.0, 0.0],
        rho_inf: 0.0,
        xi_hat: -s0.tanh(),
        eta_hat: vec![0.0, cs / s0.cosh(), 0.0],
    };
    let ctrl = FlowControl { s_max: 2.0 * s0, step: StepControl { h_max: 0.02, ..tight.step }, ..tight };
    let wide = DomainSpec { t_minus: -1e6, t_plus: 1e6, r_plus: 1e6, kappa: 2.0, wedge: None };
    let (len, tanh) = match integrate_bicharacteristic(&p, &g, &wide, Sign::Future, &ctrl) {
        Ok(tr) => (
            (fiber_length(&tr, cs) - PI).abs(),
            max_of(tr.samples.iter().map(|smp| (smp.point.xi_hat - (smp.s - s0).tanh()).abs())),
        ),
        Err(_) => (f64::INFINITY, f64::INFINITY),
    };

    let lens = DomainSpec { t_minus: -1.0, t_plus: 1.0, r_plus: 1.0, kappa: 2.0, wedge: None };
    let fan = FanSettings { launch_times: 2, directions: 3, ..Default::default() };
    let refocused = match check_nonrefocusing(&MetricModel::model_cone(3, RealFn::Const(1.0)), &lens, &fan) {
        Ok(rep) if rep.verdict == FlowVerdict::NonRefocusing => 0.0,
        _ => 1.0,
    };
    let orbit = photon_orbit(1.0, 1.0, &tight).map_or(f64::INFINITY, |o| o.max_radius_deviation);
    vec![
        check("phase_flow", "fiber_distance_pi", len, 1e-4),
        check("phase_flow", "fiber_tanh_profile", tanh, 1e-6),
        check("phase_flow", "invariant_lens_no_witness", refocused, 0.0),
        check("phase_flow", "photon_orbit_radius", orbit, 1e-6),
    ]
}

fn bump(center: f64, half_width: f64) -> Profile {
    Profile::Bump { center, half_width }
}

fn mode_source(j: u32, amp: C64, time: Profile, shape: Profile) -> ModeSource {
    ModeSource { j, time, radial: RadialProfile { amplitude: amp, power: 0.0, shape } }
}

fn max_diff(a: &[ModeField], b: &[ModeField], scale: f64) -> f64 {
    max_of(a.iter().zip(b).flat_map(|(x, y)| x.values.iter().zip(&y.values).map(|(p, q)| (p - q).norm() / scale)))
}

fn radial_checks() -> Vec<Check> {
    let op = OperatorSpec::scalar(3, c(0.75, 0.0), c(0.05, 0.0)).expect("n = 3");
    let dom = DomainSpec { t_minus: 0.0, t_plus: 1.0, r_plus: 1.0, kappa: 1.5, wedge: None };
    let gs = GridSettings { dr_outer: 0.04, ..Default::default() };
    let one = c(1.0, 0.0);
    let f1 = mode_source(0, one, bump(0.4, 0.3), bump(0.6, 0.3));
    let f2 = mode_source(0, c(0.7, 1.0), bump(0.5, 0.2), bump(0.9, 0.4));
    let solve = |modes: Vec<ModeSource>| forward_solve(&op, &dom, &SourceSpec { modes }, 0, &gs);
    let zero = solve(vec![mode_source(0, c(0.0, 0.0), bump(0.4, 0.3), bump(0.6, 0.3))])
        .map_or(f64::INFINITY, |f| f[0].peak_abs());
    let f2_doubled = ModeSource { radial: RadialProfile { amplitude: 2.0 * f2.radial.amplitude, ..f2.radial }, ..f2 };
    let (linear, determinism) = match (solve(vec![f1]), solve(vec![f2]), solve(vec![f1, f2_doubled]), solve(vec![f1])) {
        (Ok(a), Ok(b), Ok(sum), Ok(again)) => {
            let scale = sum[0].peak_abs().max(f64::MIN_POSITIVE);
            let combo: Vec<ModeField> = a
                .iter()
                .zip(&b)
                .map(|(x, y)| {
                    let mut z = x.clone();
                    z.values.iter_mut().zip(&y.values).for_each(|(p, q)| *p += 2.0 * q);
                    z
                })
                .collect();
            (max_diff(&combo, &sum, scale), max_diff(&a, &again, 1.0))
        }
        _ => (f64::INFINITY, f64::INFINITY),
    };

    // constant coefficients without damping are invariant under t ↦ −t
    let free = OperatorSpec::scalar(3, c(0.75, 0.0), c(0.0, 0.0)).expect("n = 3");
    let src = |t: f64| SourceSpec::single(mode_source(1, c(1.0, 0.5), bump(t, 0.4), bump(1.0, 0.5)));
    let back = backward_solve(&free, &DomainSpec { t_minus: 0.0, t_plus: 2.0, r_plus: 2.0, kappa: 1.5, wedge: None }, &src(1.2), 1, &gs);
    let fwd = forward_solve(&free, &DomainSpec { t_minus: -2.0, t_plus: 0.0, r_plus: 2.0, kappa: 1.5, wedge: None }, &src(-1.2), 1, &gs);
    let reversal = match (back, fwd) {
        (Ok(b), Ok(f)) if b[1].n_levels() == f[1].n_levels() && b[1].peak_abs() > 0.0 => {
            let (b, f) = (&b[1], &f[1]);
            let nl = b.n_levels();
            max_of((0..nl).flat_map(|i| {
                b.row(i).iter().zip(f.row(nl - 1 - i)).map(|(x, y)| (x - y).norm() / b.peak_abs()).collect::<Vec<_>>()
            }))
        }
        _ => f64::INFINITY,
    };
    vec![
        check("radial_solver", "zero_source_zero_solution", zero, 0.0),
        check("radial_solver", "linearity", linear, 1e-8),
        check("radial_solver", "determinism", determinism, 0.0),
        check("radial_solver", "time_reversal", reversal, 1e-6),
    ]
}

fn norms_checks(rng: &mut ChaCha8Rng) -> Vec<Check> {
    let dom = DomainSpec { t_minus: 0.0, t_plus: 1.0, r_plus: 1.0, kappa: 1.5, wedge: None };
    let grid = RadialGrid::graded(1e-4, 1.2, 0.02, 1.2).expect("valid grid");
    let times: Vec<f64> = (0..=50).map(|i| i as f64 / 50.0).collect();
    let b = |y: f64, c0: f64, h: f64| bump(c0, h).eval(y);
    let a: f64 = rng.gen_range(-1.0..1.0);
    let u = ModeField::from_fn(3, 1, grid, times, dom, |t, r| c((1.0 + a * t) * b(r, 0.4, 0.35) * b(t, 0.5, 0.4), 0.0), |_, _| c(0.0, 0.0));
    let (p, ell) = (rng.gen_range(-1.5..1.5), rng.gen_range(-1.0..2.0));
    let mut v = u.clone();
    let nr = v.n_nodes();
    for (i, x) in v.values.iter_mut().enumerate() {
        *x *= v.grid.nodes[i % nr].powf(p);
    }
    let shift = max_of((0..=2).map(|s| {
        match (edge_norm(&[v.clone()], NormOrders { s, ell, k: 0 }), edge_norm(std::slice::from_ref(&u), NormOrders { s, ell: ell - p, k: 0 })) {
            (Ok(x), Ok(y)) => (x - y).abs() / y,
            _ => f64::INFINITY,
        }
    }));
    // support in r ≤ 0.75
    let d = 0.5;
    let weaker = match (edge_norm(std::slice::from_ref(&u), NormOrders { s: 0, ell, k: 0 }), edge_norm(&[u], NormOrders { s: 0, ell: ell - d, k: 0 })) {
        (Ok(strong), Ok(weak)) => (weak / (0.75f64.powf(d) * strong) - 1.0).max(0.0),
        _ => f64::INFINITY,
    };
    vec![
        check("norms", "power_shifts_weight", shift, 1e-12),
        check("norms", "weaker_weight_controlled", weaker, 1e-12),
    ]
}

fn finish(command: &'static str, checks: Vec<Check>, mut out: RunOutput) -> RunOutput {
    let mut csv = String::from("module,name,value,tolerance,passed\n");
    for ch in &checks {
        let _ = writeln!(csv, "{},{},{:e},{:e},{}", ch.module, ch.name, ch.value, ch.tolerance, ch.passed);
        out.console.push(format!(
            "{} {}/{}: {:e} (tolerance {:e})",
            if ch.passed { "PASS" } else { "FAIL" },
            ch.module,
            ch.name,
            ch.value,
            ch.tolerance
        ));
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        out.status = Status::Failed;
    }
    out.results = json!({ "checks": to_value(&checks), "passed": checks.len() - failed, "failed": failed });
    out.add_file(format!("{}.csv", command.replace('-', "_")), csv.into_bytes());
    out
}

pub fn all(seed: u64) -> RunOutput {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = specfun_checks(&mut rng);
    checks.extend(normal_ops_checks(&mut rng));
    checks.extend(phase_flow_checks());
    checks.extend(radial_checks());
    checks.extend(norms_checks(&mut rng));
    let out = RunOutput::new("selftest", seed, json!({ "suites": ["specfun", "normal_ops", "phase_flow", "radial_solver", "norms"] }));
    finish("selftest", checks, out)
}

pub fn specfun_only(seed: u64) -> RunOutput {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let checks = specfun_checks(&mut rng);
    let mut out = RunOutput::new("specfun-selftest", seed, json!({ "grid": invariant_grid().len(), "random_points": 64 }));
    let mut grid = String::from("nu_re,nu_im,z_re,z_im,wronskian_residual,recurrence_j,recurrence_h1\n");
    for (nu, z) in invariant_grid() {
        let w = wronskian_residual(nu, z).unwrap_or(f64::INFINITY);
        let (rj, rh) = if nu.re >= 1.0 {
            (
                recurrence_residual(Family::J, nu, z).unwrap_or(f64::INFINITY).to_string(),
                recurrence_residual(Family::H1, nu, z).unwrap_or(f64::INFINITY).to_string(),
            )
        } else {
            (String::new(), String::new())
        };
        let _ = writeln!(grid, "{},{},{},{},{w:e},{rj},{rh}", nu.re, nu.im, z.re, z.im);
    }
    out.add_file("specfun_grid.csv", grid.into_bytes());
    finish("specfun-selftest", checks, out)
}
