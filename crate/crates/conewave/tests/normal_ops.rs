use conewave::normal_ops::*;
use conewave::specfun::{hankel1, recip_gamma};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `v = 2^ν Γ(ν+1) √r J_ν(r)` behaves like `C e^{∓i(νπ/2+π/4)} e^{±ir}` with
/// `C = 2^ν Γ(ν+1) / √(2π)`.
fn bessel_coefficients(nu: C64) -> (C64, C64) {
    let amp = c(2.0, 0.0).powc(nu) / recip_gamma(nu + 1.0) / (2.0 * PI).sqrt();
    let phase = nu * PI / 2.0 + PI / 4.0;
    (amp * (-C64::i() * phase).exp(), amp * (C64::i() * phase).exp())
}

#[test]
fn inverse_square_coupling_matches_bessel_connection() {
    // ν = 3/2 and Γ(5/2) = 3√π/4
    let op = OperatorSpec::scalar(3, c(2.0, 0.0), c(0.0, 0.0)).unwrap();
    let s = mode_scattering(&op, 0.0, 0, c(1.0, 0.0)).unwrap();
    assert!((s.nu - c(1.5, 0.0)).norm() < 1e-14);
    let amp = 2f64.powf(1.5) * 0.75 * PI.sqrt() / (2.0 * PI).sqrt();
    let expect_out = amp * (-C64::i() * PI).exp();
    assert!((s.c_out.value() - expect_out).norm() < 1e-9 * amp, "{:?}", s.c_out.value());
    assert!((s.c_in.value() - expect_out.conj()).norm() < 1e-9 * amp);
    assert!(s.wronskian_drift < 1e-8);
}

#[test]
fn complex_coupling_matches_bessel_connection() {
    let op = OperatorSpec::scalar(3, c(0.75, 0.5), c(0.0, 0.0)).unwrap();
    let s = mode_scattering(&op, 0.0, 0, c(1.0, 0.0)).unwrap();
    let (out, inc) = bessel_coefficients(s.nu);
    assert!((s.c_out.value() - out).norm() < 1e-9 * out.norm());
    assert!((s.c_in.value() - inc).norm() < 1e-9 * inc.norm());
}

#[test]
fn recessive_solution_matches_hankel_at_match_radius() {
    // r = 3 is far inside the asymptotic regime, so this checks the stepper
    // itself; for real order and argument J = Re H¹.
    let op = OperatorSpec::scalar(3, c(2.0, 0.0), c(0.0, 0.0)).unwrap();
    let r = 3.0;
    let u = recessive_profile(&op, 0.0, 0, c(1.0, 0.0), &[r]).unwrap()[0];
    let h = hankel1(c(1.5, 0.0), c(r, 0.0)).unwrap().value;
    let v_expect = 2f64.powf(1.5) * 0.75 * PI.sqrt() * r.sqrt() * h.re;
    // u = v / r for n = 3
    assert!((u * r - v_expect).norm() < 1e-9 * v_expect.abs());
}

#[test]
fn scaling_relation_between_frequencies() {
    let op = OperatorSpec::scalar(3, c(0.3, 0.1), c(0.08, 0.0)).unwrap();
    let xi_plus = indicial_roots(&op, 0.0, 1).plus;
    let theta = 0.7;
    let sigma_hat = C64::from_polar(1.0, theta);
    for &mag in &[0.5, 2.0] {
        let sigma = sigma_hat * mag;
        let radii = [0.3, 1.1, 2.5, 4.0];
        let scaled: Vec<f64> = radii.iter().map(|r| r * mag).collect();
        let u = recessive_profile(&op, 0.0, 1, sigma, &radii).unwrap();
        let uh = recessive_profile(&op, 0.0, 1, sigma_hat, &scaled).unwrap();
        let factor = c(mag, 0.0).powc(-xi_plus);
        for (a, b) in u.iter().zip(&uh) {
            assert!((a - factor * b).norm() < 1e-9 * a.norm(), "|σ| = {mag}");
        }
    }
}

#[test]
fn flagship_operator_scan_is_admissible() {
    let op = OperatorSpec::scalar(3, c(0.75, 0.0), c(0.05, 0.0)).unwrap();
    let scan = spectral_admissibility_scan(
        &op,
        0.0,
        1.5,
        &upper_half_circle(65),
        &ScanSettings::default(),
    )
    .unwrap();
    assert_eq!(scan.verdict, ScanVerdict::Admissible);
    assert_eq!(scan.j_max, 32);
    assert_eq!(scan.entries.len(), 33 * 65);
    assert!(scan.max_wronskian_drift < 1e-8, "{}", scan.max_wronskian_drift);
}

#[test]
fn free_wave_scan_is_admissible() {
    let op = OperatorSpec::free(3).unwrap();
    let scan = spectral_admissibility_scan(
        &op,
        0.0,
        1.0,
        &upper_half_circle(65),
        &ScanSettings::default(),
    )
    .unwrap();
    assert_eq!(scan.verdict, ScanVerdict::Admissible);
}

#[test]
fn subcritical_coupling_is_rejected() {
    let op = OperatorSpec::scalar(3, c(-0.25 - 0.1, 0.0), c(0.0, 0.0)).unwrap();
    let err = spectral_admissibility_scan(&op, 0.0, 1.0, &upper_half_circle(5), &ScanSettings::default());
    assert!(matches!(err, Err(NormalOpsError::ForbiddenCoupling { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vieta_relations(n in 2u32..7, j in 0u32..40, v_re in -0.2f64..4.0, v_im in -2.0f64..2.0,
                       b_re in -0.5f64..0.5, b_im in -0.5f64..0.5, cs in 0.5f64..2.0) {
        let mut op = OperatorSpec::scalar(n, c(v_re, v_im), c(0.0, 0.0)).unwrap();
        op.b = c(b_re, b_im);
        op.c = cs.into();
        let r = indicial_roots(&op, 0.0, j);
        let lam2 = (j * (j + n - 2)) as f64 / (cs * cs);
        let sum = -(n as f64 - 2.0 + op.b);
        let prod = -(lam2 + op.v0_at(0.0));
        prop_assert!((r.plus + r.minus - sum).norm() <= 1e-12 * (1.0 + sum.norm()));
        prop_assert!((r.plus * r.minus - prod).norm() <= 1e-12 * (1.0 + prod.norm()));
    }

    #[test]
    fn window_matches_non_indicial_set(n in 3u32..6, v0 in 0.05f64..3.0) {
        let op = OperatorSpec::scalar(n, c(v0, 0.0), c(0.0, 0.0)).unwrap();
        let w = weight_window(&op, 0.0).unwrap();
        let r0 = indicial_roots(&op, 0.0, 0);
        let half_n = n as f64 / 2.0;
        prop_assert!((w.lower - (r0.minus.re + half_n)).abs() < 1e-12);
        prop_assert!((w.upper - (r0.plus.re + half_n)).abs() < 1e-12);
        for k in 1..40 {
            let ell = w.lower + w.width() * k as f64 / 40.0;
            prop_assert!(is_non_indicial(&op, 0.0, ell), "ell {}", ell);
        }
        prop_assert!(!is_non_indicial(&op, 0.0, w.lower));
        prop_assert!(!is_non_indicial(&op, 0.0, w.upper));
    }

    #[test]
    fn dirac_window_symmetric(z in 0.0f64..3.0) {
        match weight_window(&OperatorSpec::dirac_coulomb(z), 0.0) {
            Ok(w) => prop_assert!(((w.lower + w.upper) / 2.0 - 1.0).abs() < 1e-15),
            Err(e) => prop_assert_eq!(e, NormalOpsError::DegenerateWindow),
        }
    }

    #[test]
    fn adjoint_coefficient_is_conjugate_for_real_coefficients(
        v0 in 0.05f64..3.0, a0 in -0.3f64..0.3, j in 0u32..5, sign in prop::bool::ANY
    ) {
        let op = OperatorSpec::scalar(3, c(v0, 0.0), c(a0, 0.0)).unwrap();
        let sigma = c(if sign { 1.0 } else { -1.0 }, 0.0);
        let settings = ScatteringSettings { policy: MatchPolicy::Extend { max_radius: 1e4 }, ..Default::default() };
        let d = mode_scattering_with(&op, 0.0, j, sigma, &settings).unwrap();
        let a = mode_scattering_with(&op.formal_adjoint(), 0.0, j, sigma, &settings).unwrap();
        let want = d.c_in.value().conj();
        prop_assert!((a.c_out.value() - want).norm() <= 1e-8 * want.norm());
    }

    #[test]
    fn wronskian_drift_small(v_re in 0.05f64..3.0, v_im in -1.0f64..1.0, a_re in -0.3f64..0.3,
                             theta in 0.0f64..PI, j in 0u32..8) {
        let op = OperatorSpec::scalar(3, c(v_re, v_im), c(a_re, 0.0)).unwrap();
        let settings = ScatteringSettings { policy: MatchPolicy::Extend { max_radius: 1e4 }, ..Default::default() };
        let s = mode_scattering_with(&op, 0.0, j, C64::from_polar(1.0, theta), &settings).unwrap();
        prop_assert!(s.wronskian_drift <= 1e-8, "drift {}", s.wronskian_drift);
    }
}

#[test]
fn dirac_window_closes_at_critical_charge() {
    // κ = 1: width zero at Z = √¾
    let z = 0.75f64.sqrt();
    assert!(dirac_coulomb_gap(z) < 1e-7);
    match weight_window(&OperatorSpec::dirac_coulomb(z), 0.0) {
        Ok(w) => assert!(w.width() < 1e-7),
        Err(e) => assert_eq!(e, NormalOpsError::DegenerateWindow),
    }
    let w = weight_window(&OperatorSpec::dirac_coulomb(0.5), 0.0).unwrap();
    assert!((w.lower - 0.633_974_596_215_561_4).abs() < 1e-12);
}
