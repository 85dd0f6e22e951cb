//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always printed; exits non-zero on any failure.

mod common;

use common::Duhamel3;
use conewave::cli::main_with_args;
use conewave::normal_ops::*;
use conewave::norms::{b_regularity_norms, edge_norm, NormOrders};
use conewave::phase_flow::*;
use conewave::radial_solver::*;
use conewave::specfun::hankel1;
use conewave::tfun::RealFn;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use std::time::Instant;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn bump(center: f64, half_width: f64) -> Profile {
    Profile::Bump { center, half_width }
}

fn tight() -> FlowControl {
    FlowControl { step: StepControl { rtol: 1e-12, atol: 1e-14, ..Default::default() }, ..Default::default() }
}

/// Nearest weight from `start` in direction `dir` at which an indicial line
/// sits, found on successively finer ℓ-grids using only `is_non_indicial_with`.
fn brute_force_edge(op: &OperatorSpec, start: f64, dir: f64) -> f64 {
    let mut x = start;
    let mut h = 1e-2;
    while h > 1e-11 {
        let mut k = 0;
        while is_non_indicial_with(op, 0.0, x, 0.5 * h) {
            x += dir * h;
            k += 1;
            assert!(k < 100_000, "no indicial line found");
        }
        // the line lies within h/2 of x; restart just before it on a finer grid
        x -= dir * 0.5 * h;
        h /= 10.0;
    }
    x
}

fn weight_windows() -> Outcome {
    let free = OperatorSpec::free(3).unwrap();
    let w = weight_window(&free, 0.0).unwrap();
    let mut worst = (w.lower - 0.5).abs().max((w.upper - 1.5).abs());
    let mut lines = vec![format!("free n=3 ({}, {})", w.lower, w.upper)];
    for v0 in [c(0.0, 0.0), c(0.1, 0.0), c(0.75, 0.0), c(2.0, 0.0), c(0.5, 0.4)] {
        let op = OperatorSpec::scalar(3, v0, c(0.0, 0.0)).unwrap();
        let w = weight_window(&op, 0.0).unwrap();
        // μ = Re √(1/4 + V₀) for n = 3, b = 0
        let mu = (c(0.25, 0.0) + v0).sqrt().re;
        let (lo, hi) = (brute_force_edge(&op, 1.0, -1.0), brute_force_edge(&op, 1.0, 1.0));
        let err = [(w.lower - lo).abs(), (w.upper - hi).abs(), (w.lower - (1.0 - mu)).abs(), (w.upper - (1.0 + mu)).abs()]
            .into_iter()
            .fold(0.0, f64::max);
        worst = worst.max(err);
        lines.push(format!("V0={v0}: err {err:.1e}"));
    }
    outcome(worst <= 1e-8, format!("max deviation {worst:.2e} (tol 1e-8); {}", lines.join(", ")))
}

fn dirac_gap() -> Outcome {
    let d0 = dirac_coulomb_gap(0.0);
    let d5 = dirac_coulomb_gap(0.5);
    let e5 = (d5 - (0.5 - 0.75f64.sqrt()).abs()).abs();
    let zc = 0.75f64.sqrt();
    let slope = 2.0 * 3f64.sqrt();
    let mut widths = Vec::new();
    let mut ok = d0 == 0.5 && e5 <= 1e-12;
    for eps in [1e-2, 1e-3] {
        let z = zc - eps;
        let w = weight_window(&OperatorSpec::dirac_coulomb(z), 0.0).unwrap().width();
        // κ = 1 branch: width 2|½ − √(1 − Z²)| ≈ 2√3·ε
        let exact = 2.0 * (0.5 - (1.0 - z * z).sqrt()).abs();
        ok &= (w - exact).abs() <= 1e-12;
        ok &= (w / eps - slope).abs() <= 3.0 * eps * slope;
        widths.push(w);
    }
    let ratio = widths[0] / widths[1];
    ok &= (ratio - 10.0).abs() <= 0.5;
    outcome(
        ok,
        format!(
            "δ(0)={d0}, |δ(0.5)−|½−√¾||={e5:.1e}, width/ε = {:.4}, {:.4} (2√3 = {slope:.4}), ratio {ratio:.3}",
            widths[0] / 1e-2,
            widths[1] / 1e-3
        ),
    )
}

fn fiber_geodesic() -> Outcome {
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
    let ctrl = FlowControl { s_max: 2.0 * s0, step: StepControl { h_max: 0.02, ..tight().step }, ..tight() };
    let dom = DomainSpec::new(-1e6, 1e6, 1e6, 2.0).unwrap();
    let tr = integrate_bicharacteristic(&p, &g, &dom, Sign::Future, &ctrl).unwrap();
    let len: f64 = tr
        .samples
        .windows(2)
        .map(|w| {
            let d: f64 = w[0].point.omega.iter().zip(&w[1].point.omega).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            2.0 * (0.5 * d).asin() * cs
        })
        .sum();
    let e_len = (len - PI).abs();
    let e_tanh = tr.samples.iter().map(|s| (s.point.xi_hat - (s.s - s0).tanh()).abs()).fold(0.0, f64::max);
    outcome(e_len <= 1e-4 && e_tanh <= 1e-6, format!("|length − π| = {e_len:.2e} (tol 1e-4), tanh error {e_tanh:.2e} (tol 1e-6)"))
}

fn non_refocusing() -> Outcome {
    let g = MetricModel::model_cone(3, RealFn::Const(1.0));
    let dom = DomainSpec::new(-1.0, 1.0, 1.0, 2.0).unwrap();
    let mut lens_ok = true;
    for (k, d) in [(2, 3), (4, 7), (8, 13)] {
        let fan = FanSettings { launch_times: k, directions: d, ..Default::default() };
        lens_ok &= check_nonrefocusing(&g, &dom, &fan).unwrap().verdict == FlowVerdict::NonRefocusing;
    }
    let m = 1.0;
    let orbit = photon_orbit(m, 1.0, &tight()).unwrap();
    let period = 2.0 * PI * 27f64.sqrt() * m;
    let period_ok = (orbit.period - period).abs() <= 1e-12 * period;
    let dev = orbit.max_radius_deviation;
    let dom = DomainSpec::new(0.0, 1.1 * period, 10.0 * m, 2.0).unwrap();
    let fan = FanSettings { launch_times: 1, directions: 5, tilts: 2, theta_max: 0.3, control: tight(), ..Default::default() };
    let witness = match check_nonrefocusing(&MetricModel::schwarzschild(m), &dom, &fan).unwrap().verdict {
        FlowVerdict::RefocusingWitness { witness, trajectory } => {
            Some((witness.return_time, trajectory.samples.iter().map(|s| (s.point.r - 3.0 * m).abs()).fold(0.0, f64::max)))
        }
        _ => None,
    };
    let ok = lens_ok && period_ok && dev <= 1e-6 * m && witness.is_some_and(|(_, d)| d <= 1e-6 * m);
    outcome(
        ok,
        format!(
            "lens witness-free at 3 densities: {lens_ok}; orbit deviation {dev:.2e}·m (tol 1e-6); witness {}",
            match witness {
                Some((t, d)) => format!("returns at t={t:.4} (period {period:.4}), |r−3m| ≤ {d:.1e}"),
                None => "missing".into(),
            }
        ),
    )
}

fn mode_scattering_oracle() -> Outcome {
    // recessive solution v = 2^ν Γ(ν+1) √r J_ν(r) ~ A e^{∓i(νπ/2+π/4)} e^{±ir},
    // A = 2^ν Γ(ν+1)/√(2π): A = 1/2 for ν = 1/2, A = 3/2 for ν = 3/2
    let cases = [(0.0, 0.5, 0.5, 2f64.sqrt() * 0.5 * PI.sqrt()), (2.0, 1.5, 1.5, 2f64.powf(1.5) * 0.75 * PI.sqrt())];
    let mut worst = 0.0f64;
    let mut drift = 0.0f64;
    for (v0, nu, amp, norm) in cases {
        let op = OperatorSpec::scalar(3, c(v0, 0.0), c(0.0, 0.0)).unwrap();
        let s = mode_scattering(&op, 0.0, 0, c(1.0, 0.0)).unwrap();
        let phase = nu * PI / 2.0 + PI / 4.0;
        let out = c(amp, 0.0) * (-C64::i() * phase).exp();
        let inc = out.conj();
        worst = worst.max((s.c_out.value() - out).norm() / out.norm()).max((s.c_in.value() - inc).norm() / inc.norm());
        drift = drift.max(s.wronskian_drift);
        // for real order and argument J = Re H¹
        let r = 20.0;
        let u = recessive_profile(&op, 0.0, 0, c(1.0, 0.0), &[r]).unwrap()[0];
        let expect = norm * r.sqrt() * hankel1(c(nu, 0.0), c(r, 0.0)).unwrap().value.re;
        worst = worst.max((u * r - expect).norm() / expect.abs());
    }
    let flagship = OperatorSpec::scalar(3, c(0.75, 0.0), c(0.05, 0.0)).unwrap();
    let scan = spectral_admissibility_scan(&flagship, 0.0, 1.5, &upper_half_circle(65), &ScanSettings::default()).unwrap();
    drift = drift.max(scan.max_wronskian_drift);
    outcome(
        worst <= 1e-6 && drift <= 1e-8,
        format!("max relative error {worst:.2e} (tol 1e-6), max Wronskian drift {drift:.2e} over {} integrations (tol 1e-8)", 4 + 2 * scan.entries.len()),
    )
}

fn solver_convergence() -> Outcome {
    let op = OperatorSpec::free(3).unwrap();
    let dom = DomainSpec::new(-0.1, 2.5, 4.0, 2.0).unwrap();
    let src = SourceSpec::single(ModeSource {
        j: 0,
        time: bump(0.5, 0.5),
        radial: RadialProfile { amplitude: c(1.0, 0.0), power: 0.0, shape: bump(2.5, 0.5) },
    });
    let oracle = Duhamel3::new((0.0, 1.0), (2.0, 3.0));
    let errors: Vec<f64> = (0..3)
        .map(|level| {
            let gs = GridSettings { dr_outer: 0.04, output_dt: Some(0.1), ..Default::default() }.refined(level);
            let f = &forward_solve(&op, &dom, &src, 0, &gs).unwrap()[0];
            let i = f.n_levels() - 1;
            let t = f.times[i];
            let (mut err, mut peak) = (0.0f64, 0.0f64);
            for (k, &r) in f.grid.nodes.iter().enumerate().take_while(|(_, &r)| r < dom.lateral_radius(t)) {
                let exact = oracle.u(t, r);
                err = err.max((f.row(i)[k].re - exact).abs());
                peak = peak.max(exact.abs());
            }
            err / peak
        })
        .collect();
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();

    let gs = GridSettings { dr_outer: 0.01, output_dt: Some(0.005), ..Default::default() };
    let f = &forward_solve(&op, &dom, &src, 0, &gs).unwrap()[0];
    let delta = 4.0 * gs.dr_outer;
    let mut leak = 0.0f64;
    for i in 0..f.n_levels() {
        let t = f.times[i];
        for (k, &r) in f.grid.nodes.iter().enumerate() {
            if t <= 0.0 || r > 3.0 + t + delta || r < 2.0 - t - delta {
                leak = leak.max(f.row(i)[k].norm());
            }
        }
    }
    let leak = leak / f.peak_abs();
    outcome(
        orders.iter().all(|&p| p >= 1.8) && leak <= 1e-8,
        format!("errors [{}], observed orders {orders:.3?} (min 1.8), leakage {leak:.1e} (tol 1e-8)", errors.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(", ")),
    )
}

fn flagship_stability() -> Outcome {
    let op = OperatorSpec::scalar(3, c(0.75, 0.0), c(0.05, 0.0)).unwrap();
    let dom = DomainSpec::new(0.0, 1.5, 1.0, 1.5).unwrap();
    let src = SourceSpec {
        modes: [(0, 1.0), (1, 0.5)]
            .into_iter()
            .map(|(j, a)| ModeSource {
                j,
                time: bump(0.6, 0.3),
                radial: RadialProfile { amplitude: c(a, 0.0), power: 0.0, shape: bump(0.6, 0.3) },
            })
            .collect(),
    };
    let runs: Vec<Vec<ModeField>> =
        (0..3).map(|l| forward_solve(&op, &dom, &src, 1, &GridSettings::default().refined(l)).unwrap()).collect();
    let ratios: Vec<f64> = runs
        .iter()
        .map(|fields| {
            let u = edge_norm(fields, NormOrders { s: 1, ell: 1.5, k: 0 }).unwrap();
            let sources: Vec<ModeField> = fields.iter().map(|f| f.source_field()).collect();
            u / edge_norm(&sources, NormOrders { s: 0, ell: -0.5, k: 0 }).unwrap()
        })
        .collect();
    let change = (ratios[2] - ratios[1]).abs() / ratios[1];
    let table = b_regularity_norms(&runs, NormOrders { s: 1, ell: 1.5, k: 1 }).unwrap();
    let table_change = table.rows.iter().filter_map(|r| r.change).fold(0.0, f64::max);
    let stable = table.rows.len() == 4 && table.rows.iter().all(|r| r.stable == Some(true));
    outcome(
        change < 0.2 && stable,
        format!("ratios {ratios:.4?}, change {:.3}% (tol 20%); k=1 b-table max change {:.3}%, all stable: {stable}", 100.0 * change, 100.0 * table_change),
    )
}

fn phg_exponents() -> Outcome {
    let free = OperatorSpec::free(3).unwrap();
    let potential = OperatorSpec::scalar(3, c(2.0, 0.0), c(0.0, 0.0)).unwrap();
    let dom = DomainSpec::new(-0.1, 2.0, 1.5, 1.5).unwrap();
    let gs = GridSettings { dr_outer: 0.01, ..Default::default() };
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, op, j) in [("free j=0", &free, 0u32), ("V0=2 j=0", &potential, 0), ("free j=1", &free, 1)] {
        let src = SourceSpec::single(ModeSource {
            j,
            time: bump(0.25, 0.25),
            radial: RadialProfile { amplitude: c(1.0, 0.0), power: 0.0, shape: bump(0.75, 0.25) },
        });
        let f = &forward_solve(op, &dom, &src, j, &gs).unwrap()[j as usize];
        let slope = phg_exponent_fit(f, FitWindow { r_lo: 1e-3, r_hi: 1e-2 }, 1.0).unwrap().slope;
        let root = indicial_roots(op, 1.0, j).plus.re;
        // 2% of the root, or 0.02 absolute when the root is 0
        let err = (slope - root).abs() / root.abs().max(1.0);
        ok &= err <= 0.02;
        parts.push(format!("{label}: slope {slope:.4} vs Re ξ₊ = {root:.4}"));
    }
    outcome(ok, parts.join("; "))
}

fn property_suites() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("selftest");
    let code = main_with_args(["conewave", "selftest", "--seed", "2026", "--out", out.to_str().unwrap()]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap_or_default()).unwrap_or_default();
    let checks = report["results"]["checks"].as_array().cloned().unwrap_or_default();
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| c["passed"] != true)
        .map(|c| format!("{}/{}", c["module"].as_str().unwrap_or("?"), c["name"].as_str().unwrap_or("?")))
        .collect();
    outcome(
        code == 0 && !checks.is_empty() && failed.is_empty(),
        format!("{} invariant checks, failed: {failed:?}", checks.len()),
    )
}

fn main() {
    // `cargo test -- --list` and filters are passed through; the suite has no
    // named sub-tests, so listing prints nothing.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria: [Criterion; 9] = [
        ("weight windows", weight_windows),
        ("Dirac-Coulomb gap", dirac_gap),
        ("fiber geodesic length", fiber_geodesic),
        ("non-refocusing", non_refocusing),
        ("mode scattering oracle", mode_scattering_oracle),
        ("solver convergence", solver_convergence),
        ("flagship estimate stability", flagship_stability),
        ("polyhomogeneous exponents", phg_exponents),
        ("property suites", property_suites),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        if !o.passed {
            failures += 1;
        }
        println!(
            "{} criterion {}: {name}: {} [{:.1}s]",
            if o.passed { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
