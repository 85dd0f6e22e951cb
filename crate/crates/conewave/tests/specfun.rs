use conewave::specfun::*;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn wronskian(nu: C64, z: C64) -> C64 {
    let j = bessel_j(nu, z).unwrap();
    let h = hankel1(nu, z).unwrap();
    j.value * h.deriv - j.deriv * h.value
}

#[test]
fn wronskian_identity_on_grid() {
    let grid = invariant_grid();
    assert_eq!(grid.len(), GRID_SIDE * GRID_SIDE);
    for (nu, z) in grid {
        let exact = 2.0 * c(0.0, 1.0) / (PI * z);
        let err = (wronskian(nu, z) - exact).norm() / exact.norm();
        assert!(err < 1e-10, "ν = {nu}, z = {z}: {err:e}");
        assert!((wronskian_residual(nu, z).unwrap() - err).abs() < 1e-14);
    }
}

#[test]
fn recurrence_holds_for_both_families() {
    for (nu, z) in invariant_grid().into_iter().filter(|(nu, _)| nu.re >= 1.0) {
        for fam in [Family::J, Family::H1] {
            let r = recurrence_residual(fam, nu, z).unwrap();
            assert!(r < 1e-8, "{fam:?} ν = {nu}, z = {z}: {r:e}");
        }
    }
}

#[test]
fn wronskian_at_reference_point() {
    let z = c(7.3, 0.0);
    let exact = 2.0 * c(0.0, 1.0) / (PI * z);
    assert!((wronskian(c(1.5, 0.2), z) - exact).norm() < 1e-10);
}

#[test]
fn half_order_closed_forms() {
    for z in [c(0.3, 0.0), c(2.0, 0.5), c(9.0, 1.0), c(25.0, 0.0), c(40.0, 3.0)] {
        let h = hankel1(c(0.5, 0.0), z).unwrap().value;
        let exact = -c(0.0, 1.0) * (2.0 / (PI * z)).sqrt() * (c(0.0, 1.0) * z).exp();
        assert!((h - exact).norm() <= 1e-9 * exact.norm(), "z = {z}");
        // J_{1/2}(z) = √(2/(πz)) sin z
        let j = bessel_j(c(0.5, 0.0), z).unwrap().value;
        let exact = (2.0 / (PI * z)).sqrt() * z.sin();
        assert!((j - exact).norm() <= 1e-9 * exact.norm().max(1.0), "z = {z}");
    }
}

#[test]
fn values_at_origin() {
    assert_eq!(bessel_j(c(0.0, 0.0), c(0.0, 0.0)).unwrap().value, c(1.0, 0.0));
    assert_eq!(bessel_j(c(1.3, 0.4), c(0.0, 0.0)).unwrap().value, c(0.0, 0.0));
    assert_eq!(hankel1(c(1.0, 0.0), c(0.0, 0.0)), Err(SpecfunError::SingularAtOrigin));
}

#[test]
fn hankel_second_kind_is_conjugate_on_real_axis() {
    for x in [0.7, 5.0, 18.0] {
        let h1 = hankel1(c(1.25, 0.0), c(x, 0.0)).unwrap().value;
        let h2 = hankel2(c(1.25, 0.0), c(x, 0.0)).unwrap().value;
        assert!((h1.conj() - h2).norm() < 1e-10 * h1.norm());
    }
}

proptest! {
    #[test]
    fn wronskian_identity_random(re_nu in 0.0f64..6.0, im_nu in -0.5f64..0.5,
                                 rz in 0.2f64..80.0, arg in 0.0f64..1.2) {
        let nu = c(re_nu, im_nu);
        let z = C64::from_polar(rz, arg);
        let exact = 2.0 * c(0.0, 1.0) / (PI * z);
        let err = (wronskian(nu, z) - exact).norm() / exact.norm();
        prop_assert!(err < 1e-9, "ν = {}, z = {}: {:e}", nu, z, err);
    }
}
