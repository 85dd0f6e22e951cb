mod common;

use common::{hermite_in_time, reflect_poly, smooth_step, Duhamel3};
use conewave::normal_ops::{indicial_roots, OperatorSpec, ScanSettings};
use conewave::phase_flow::DomainSpec;
use conewave::radial_solver::*;
use conewave::tfun::{ComplexFn, RealFn};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn bump(center: f64, half_width: f64) -> Profile {
    Profile::Bump { center, half_width }
}

fn bump_source(j: u32, t: (f64, f64), r: (f64, f64)) -> SourceSpec {
    SourceSpec::single(ModeSource {
        j,
        time: bump(0.5 * (t.0 + t.1), 0.5 * (t.1 - t.0)),
        radial: RadialProfile { amplitude: c(1.0), power: 0.0, shape: bump(0.5 * (r.0 + r.1), 0.5 * (r.1 - r.0)) },
    })
}

fn centred_data(j: u32, power: f64, ell: f64) -> IVPData {
    IVPData {
        modes: vec![ModeData { j, u0: Some(RadialProfile { amplitude: c(1.0), power, shape: bump(0.0, 1.0) }), u1: None }],
        ell,
        k: 0,
    }
}

/// Relative max error against the d'Alembert oracle at the final level,
/// inside the lens.
fn dalembert_error(level: u32) -> f64 {
    let op = OperatorSpec::free(3).unwrap();
    let dom = DomainSpec::new(-0.1, 2.5, 4.0, 2.0).unwrap();
    let src = bump_source(0, (0.0, 1.0), (2.0, 3.0));
    let oracle = Duhamel3::new((0.0, 1.0), (2.0, 3.0));
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
}

#[test]
fn free_wave_converges_at_second_order() {
    let e: Vec<f64> = (0..3).map(dalembert_error).collect();
    for w in e.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.8, "errors {e:?}, order {order}");
    }
    assert!(e[2] < 1e-3);
}

#[test]
fn no_leakage_outside_causal_future() {
    let op = OperatorSpec::free(3).unwrap();
    let dom = DomainSpec::new(-0.1, 2.5, 4.0, 2.0).unwrap();
    let gs = GridSettings { dr_outer: 0.01, output_dt: Some(0.005), ..Default::default() };
    let f = &forward_solve(&op, &dom, &bump_source(0, (0.0, 1.0), (2.0, 3.0)), 0, &gs).unwrap()[0];
    // stencil width plus two cells
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
    assert!(f.times[0] < 0.0 && f.row(0).iter().all(|x| x.norm() == 0.0));
    assert!(leak <= 1e-8 * f.peak_abs(), "leak {:e}", leak / f.peak_abs());
}

#[test]
fn single_mode_source_leaves_other_modes_zero() {
    let op = OperatorSpec::scalar(3, c(0.75), c(0.05)).unwrap();
    let dom = DomainSpec::new(0.0, 1.0, 1.5, 1.5).unwrap();
    let gs = GridSettings { dr_outer: 0.04, ..Default::default() };
    let fields = forward_solve(&op, &dom, &bump_source(2, (0.1, 0.6), (0.5, 1.0)), 3, &gs).unwrap();
    assert_eq!(fields.len(), 4);
    for f in &fields {
        assert_eq!(f.is_identically_zero(), f.j != 2, "mode {}", f.j);
        assert!(f.steps == 0 || f.j == 2);
    }
}

#[test]
fn zero_source_and_zero_data_give_zero() {
    let op = OperatorSpec::free(3).unwrap();
    let dom = DomainSpec::new(0.0, 1.0, 1.5, 1.5).unwrap();
    let gs = GridSettings { dr_outer: 0.04, ..Default::default() };
    let fields = forward_solve(&op, &dom, &SourceSpec::default(), 2, &gs).unwrap();
    assert!(fields.iter().all(ModeField::is_identically_zero));
    let data = IVPData { modes: vec![ModeData { j: 0, u0: None, u1: None }], ell: 1.0, k: 0 };
    let (fields, _) = solve_ivp(&op, &dom, &data, &gs).unwrap();
    assert!(fields.iter().all(ModeField::is_identically_zero));
    let zero_amp = IVPData {
        modes: vec![ModeData { j: 1, u0: Some(RadialProfile { amplitude: c(0.0), power: 0.0, shape: bump(0.5, 0.3) }), u1: None }],
        ell: 1.0,
        k: 0,
    };
    let (fields, _) = solve_ivp(&op, &dom, &zero_amp, &gs).unwrap();
    assert!(fields.iter().all(ModeField::is_identically_zero));
}

#[test]
fn data_violating_decay_tag_rejected() {
    let op = OperatorSpec::free(3).unwrap();
    let dom = DomainSpec::new(0.0, 1.0, 1.5, 1.5).unwrap();
    let gs = GridSettings::default();
    // u0 ~ r^1 needs ℓ + k − n/2 < 1
    let err = solve_ivp(&op, &dom, &IVPData { k: 1, ..centred_data(0, 1.0, 1.5) }, &gs).unwrap_err();
    assert!(matches!(err, RadialError::InvalidData(_)), "{err}");
    let (_, margin) = solve_ivp(&op, &dom, &centred_data(0, 1.0, 1.0), &GridSettings { dr_outer: 0.05, ..gs }).unwrap();
    assert!((margin - 1.5).abs() < 1e-12);
}

#[test]
fn ivp_energy_conserved_on_fine_grid() {
    let op = OperatorSpec::free(3).unwrap();
    let dom = DomainSpec::new(0.0, 2.0, 3.0, 1.5).unwrap();
    let gs = GridSettings { dr_outer: 0.005, ..Default::default() };
    let (fields, _) = solve_ivp(&op, &dom, &centred_data(0, 2.0, 0.0), &gs).unwrap();
    let e = mode_energy(&fields[0], &op);
    let dev = e.iter().map(|x| (x - e[0]).abs()).fold(0.0, f64::max) / e[0];
    assert!(dev < 1e-3, "relative energy drift {dev:e}");
}

#[test]
fn ivp_matches_cutoff_forcing_reformulation() {
    let a0 = 0.05;
    let op = OperatorSpec::scalar(3, c(0.75), c(a0)).unwrap();
    let dom = DomainSpec::new(0.0, 2.0, 2.0, 1.5).unwrap();
    let gs = GridSettings { dr_outer: 0.02, output_dt: Some(0.005), ..Default::default() };
    let (fields, _) = solve_ivp(&op, &dom, &centred_data(0, 2.0, 1.5), &gs).unwrap();
    let ivp = &fields[0];
    let nr = ivp.n_nodes();
    // P(χu) = [P, χ]u = χ''u + 2χ'u_t + a₀χ'u/r
    let forcing = |_: u32, t: f64, r: &[f64], out: &mut [C64]| {
        let (_, d, dd) = smooth_step(t, 0.2, 0.6);
        for k in 0..r.len() {
            out[k] = if d == 0.0 && dd == 0.0 {
                C64::new(0.0, 0.0)
            } else {
                let (u, ut) = hermite_in_time(&ivp.times, &ivp.values, &ivp.velocity, nr, k, t);
                u * (dd + a0 / r[k] * d) + ut * (2.0 * d)
            };
        }
    };
    let cut = &forward_solve_with(&op, &dom, &[0], &gs, &forcing).unwrap()[0];
    let mut diff = 0.0f64;
    for i in 0..cut.n_levels() {
        let chi = smooth_step(cut.times[i], 0.2, 0.6).0;
        for k in 0..nr {
            diff = diff.max((cut.row(i)[k] - ivp.row(i)[k] * chi).norm());
        }
    }
    assert!(diff < 1e-6 * ivp.peak_abs(), "relative mismatch {:e}", diff / ivp.peak_abs());
}

fn wedge_trace(a0: f64) -> EnergyTrace {
    let op = OperatorSpec::scalar(3, c(0.0), c(a0)).unwrap();
    let dom = DomainSpec::new(0.0, 3.0, 2.0, 1.5).unwrap();
    let data = IVPData {
        modes: vec![ModeData { j: 0, u0: Some(RadialProfile { amplitude: c(1.0), power: 0.0, shape: bump(1.0, 0.5) }), u1: None }],
        ell: 0.0,
        k: 0,
    };
    let gs = GridSettings { dr_outer: 0.01, ..Default::default() };
    let (fields, _) = solve_ivp(&op, &dom, &data, &gs).unwrap();
    let wedge = WedgeSpec { t0: 1.0, tau0: -0.5, tau1: 0.5, slices: 21, reach: None };
    wedge_energy_monitor(&fields[0], &op, 0.0, 0.0, &wedge).unwrap()
}

#[test]
fn wedge_energy_nonincreasing_and_damping_helps() {
    let free = wedge_trace(0.0);
    let damped = wedge_trace(0.1);
    assert_eq!(free.taus.len(), 21);
    assert!(free.max_positive_jump <= 1e-3, "jump {:e}", free.max_positive_jump);
    assert!(free.energies[0] > 0.0);
    for i in 1..free.taus.len() {
        let rf = free.energies[i] / free.energies[0];
        let rd = damped.energies[i] / damped.energies[0];
        assert!(rd < rf, "slice τ = {}: damped {rd} vs free {rf}", free.taus[i]);
    }
}

fn fitted_exponent(op: &OperatorSpec, j: u32) -> (f64, f64) {
    let dom = DomainSpec::new(-0.1, 2.0, 1.5, 1.5).unwrap();
    let gs = GridSettings { dr_outer: 0.01, ..Default::default() };
    let f = &forward_solve(op, &dom, &bump_source(j, (0.0, 0.5), (0.5, 1.0)), j, &gs).unwrap()[j as usize];
    let fit = phg_exponent_fit(f, FitWindow { r_lo: 1e-3, r_hi: 1e-2 }, 1.0).unwrap();
    (fit.slope, indicial_roots(op, 1.0, j).plus.re)
}

#[test]
fn leading_exponents_match_indicial_roots() {
    let free = OperatorSpec::free(3).unwrap();
    let (slope, root) = fitted_exponent(&free, 0);
    assert_eq!(root, 0.0);
    assert!(slope.abs() < 0.02, "slope {slope}");
    let potential = OperatorSpec::scalar(3, c(2.0), c(0.0)).unwrap();
    for (op, j) in [(&potential, 0), (&free, 1)] {
        let (slope, root) = fitted_exponent(op, j);
        assert!((root - 1.0).abs() < 1e-12);
        assert!((slope - root).abs() < 0.02 * root, "j = {j}: slope {slope} vs {root}");
    }
}

#[test]
fn backward_solve_is_reflected_forward_solve() {
    let mut op = OperatorSpec::free(3).unwrap();
    op.v0 = ComplexFn { re: RealFn::Poly { poly: vec![0.75, 0.1] }, im: RealFn::Const(0.0) };
    op.c = RealFn::Poly { poly: vec![1.0, 0.05, 0.01] };
    op.a0 = ComplexFn { re: RealFn::Poly { poly: vec![-0.05, 0.01] }, im: RealFn::Const(0.0) };
    let mut reflected = op.clone();
    reflected.v0.re = RealFn::Poly { poly: reflect_poly(&[0.75, 0.1]) };
    reflected.c = RealFn::Poly { poly: reflect_poly(&[1.0, 0.05, 0.01]) };
    // a₀ ↦ −a₀(−t)
    reflected.a0.re = RealFn::Poly { poly: reflect_poly(&[-0.05, 0.01]).iter().map(|x| -x).collect() };
    let src = |t: f64| {
        SourceSpec::single(ModeSource {
            j: 1,
            time: bump(t, 0.4),
            radial: RadialProfile { amplitude: C64::new(1.0, 0.5), power: 0.0, shape: bump(1.0, 0.5) },
        })
    };
    let gs = GridSettings { dr_outer: 0.02, ..Default::default() };
    let back = &backward_solve(&op, &DomainSpec::new(0.0, 2.0, 2.0, 1.5).unwrap(), &src(1.2), 1, &gs).unwrap()[1];
    let fwd = &forward_solve(&reflected, &DomainSpec::new(-2.0, 0.0, 2.0, 1.5).unwrap(), &src(-1.2), 1, &gs).unwrap()[1];
    assert_eq!(back.grid, fwd.grid);
    let nl = back.n_levels();
    let mut diff = 0.0f64;
    for i in 0..nl {
        assert!((back.times[i] + fwd.times[nl - 1 - i]).abs() < 1e-12);
        for (x, y) in back.row(i).iter().zip(fwd.row(nl - 1 - i)) {
            diff = diff.max((x - y).norm());
        }
    }
    assert!(back.peak_abs() > 0.0);
    assert!(diff <= 1e-6 * back.peak_abs(), "diff {diff:e}");
    // vanishes after the support in the backward direction
    assert!(back.row(nl - 1).iter().all(|x| x.norm() == 0.0));
}

#[test]
fn backward_source_must_end_before_final_time() {
    let op = OperatorSpec::free(3).unwrap();
    let dom = DomainSpec::new(0.0, 1.0, 1.5, 1.5).unwrap();
    let err = backward_solve(&op, &dom, &bump_source(0, (0.5, 1.5), (0.2, 0.6)), 0, &GridSettings::default()).unwrap_err();
    assert!(matches!(err, RadialError::InvalidSource(_)));
}

#[test]
fn flagship_coefficients_run_without_blowup() {
    let op = OperatorSpec::scalar(3, c(0.75), c(0.05)).unwrap();
    let scan = admissibility_gate(&op, 0.0, 1.5, &ScanSettings { j_max: 4, samples: 9, ..Default::default() }).unwrap();
    assert!(scan.max_wronskian_drift <= 1e-8);
    let dom = DomainSpec::new(0.0, 2.0, 1.5, 1.5).unwrap();
    let src = SourceSpec {
        modes: (0..3)
            .map(|j| ModeSource {
                j,
                time: bump(0.6, 0.4),
                radial: RadialProfile { amplitude: c(1.0), power: 0.0, shape: bump(0.8, 0.5) },
            })
            .collect(),
    };
    let gs = GridSettings { dr_outer: 0.02, ..Default::default() };
    let fields = forward_solve(&op, &dom, &src, 2, &gs).unwrap();
    for f in &fields {
        assert!(f.values.iter().all(|x| x.is_finite()));
        assert!(f.cfl_number <= gs.cfl + 1e-12);
        assert!(f.peak_abs() < 10.0);
        assert!(f.row(0).iter().all(|x| x.norm() == 0.0));
    }
}

#[test]
fn oversized_step_and_bad_modes_rejected() {
    let op = OperatorSpec::free(3).unwrap();
    let dom = DomainSpec::new(0.0, 1.0, 1.5, 1.5).unwrap();
    let src = bump_source(1, (0.1, 0.5), (0.3, 0.6));
    let gs = GridSettings { dt: Some(0.1), ..Default::default() };
    assert!(matches!(forward_solve(&op, &dom, &src, 1, &gs), Err(RadialError::CFLViolation { j: 1, .. })));
    assert!(matches!(forward_solve(&op, &dom, &src, 0, &GridSettings::default()), Err(RadialError::InvalidSource(_))));
    let late = bump_source(0, (-0.5, 0.5), (0.3, 0.6));
    assert!(matches!(forward_solve(&op, &dom, &late, 0, &GridSettings::default()), Err(RadialError::InvalidSource(_))));
    let complex_b = OperatorSpec { b: C64::new(0.0, 0.1), ..op };
    assert!(matches!(
        forward_solve(&complex_b, &dom, &bump_source(0, (0.1, 0.5), (0.3, 0.6)), 0, &GridSettings::default()),
        Err(RadialError::Unsupported(_))
    ));
}

#[test]
fn grid_invariants_hold() {
    let dom = DomainSpec::new(0.0, 1.0, 1.5, 1.5).unwrap();
    for level in 0..3 {
        let gs = GridSettings::default().refined(level);
        let g = gs.build_grid(&dom).unwrap();
        assert!(g.max_step_ratio() <= 1.2 + 1e-12);
        assert!((g.nodes[0] - 1e-4 * 1.5).abs() < 1e-15);
        assert!(g.r_max() >= dom.lateral_radius(0.0) + 1.0);
    }
    assert!(GridSettings { grading: 1.3, ..Default::default() }.build_grid(&dom).is_err());
}

#[test]
fn field_dump_round_trips() {
    let op = OperatorSpec::free(3).unwrap();
    let dom = DomainSpec::new(0.0, 1.0, 1.5, 1.5).unwrap();
    let gs = GridSettings { dr_outer: 0.05, output_dt: Some(0.1), ..Default::default() };
    let f = &forward_solve(&op, &dom, &bump_source(0, (0.1, 0.5), (0.3, 0.6)), 0, &gs).unwrap()[0];
    let mut buf = Vec::new();
    f.write_binary(&mut buf).unwrap();
    let d = FieldDump::read(&mut buf.as_slice()).unwrap();
    assert_eq!((d.n, d.j), (3, 0));
    assert_eq!(d.radii, f.grid.nodes);
    assert_eq!(d.times, f.times);
    assert_eq!(d.values, f.values);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn solutions_are_linear_and_deterministic(re in -2.0f64..2.0, im in -2.0f64..2.0, j in 0u32..3) {
        let op = OperatorSpec::scalar(3, c(0.75), c(0.05)).unwrap();
        let dom = DomainSpec::new(0.0, 1.0, 1.2, 1.5).unwrap();
        let gs = GridSettings { dr_outer: 0.05, output_dt: Some(0.05), ..Default::default() };
        let base = bump_source(j, (0.1, 0.5), (0.3, 0.8));
        let mut scaled = base.clone();
        scaled.modes[0].radial.amplitude = C64::new(re, im);
        let u = &forward_solve(&op, &dom, &base, j, &gs).unwrap()[j as usize];
        let v = &forward_solve(&op, &dom, &scaled, j, &gs).unwrap()[j as usize];
        let again = &forward_solve(&op, &dom, &scaled, j, &gs).unwrap()[j as usize];
        prop_assert_eq!(&v.values, &again.values);
        let z = C64::new(re, im);
        let err = u.values.iter().zip(&v.values).map(|(a, b)| (a * z - b).norm()).fold(0.0, f64::max);
        // rounding accumulated over ~10⁵ steps
        prop_assert!(err <= 1e-8 * v.peak_abs(), "err {:e}", err);
    }

    #[test]
    fn wedge_trace_is_scale_covariant(amp in 0.1f64..10.0) {
        let op = OperatorSpec::free(3).unwrap();
        let dom = DomainSpec::new(0.0, 1.5, 1.0, 1.5).unwrap();
        let gs = GridSettings { dr_outer: 0.05, ..Default::default() };
        let data = |a: f64| IVPData {
            modes: vec![ModeData { j: 0, u0: Some(RadialProfile { amplitude: c(a), power: 0.0, shape: bump(0.5, 0.3) }), u1: None }],
            ell: 0.0,
            k: 0,
        };
        let w = WedgeSpec { t0: 0.5, tau0: -0.3, tau1: 0.3, slices: 7, reach: None };
        let one = wedge_energy_monitor(&solve_ivp(&op, &dom, &data(1.0), &gs).unwrap().0[0], &op, 0.5, 0.2, &w).unwrap();
        let many = wedge_energy_monitor(&solve_ivp(&op, &dom, &data(amp), &gs).unwrap().0[0], &op, 0.5, 0.2, &w).unwrap();
        for (a, b) in one.energies.iter().zip(&many.energies) {
            prop_assert!((b - amp * amp * a).abs() <= 1e-8 * b.abs(), "{} vs {}", b, amp * amp * a);
        }
        let field = &solve_ivp(&op, &dom, &data(1.0), &gs).unwrap().0[0];
        let empty = WedgeSpec { tau0: 0.2, tau1: 0.2, ..w };
        prop_assert!(wedge_energy_monitor(field, &op, 0.0, 0.0, &empty).unwrap().energies.is_empty());
    }
}
