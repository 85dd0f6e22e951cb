//! Bessel and Hankel functions of complex order and complex argument.
//!
//! Small arguments use the ascending series. Larger arguments are reached by
//! Taylor-stepping the Bessel equation along a ray, and the large-argument
//! Hankel expansion serves both as a starting point (for `H¹`) and as a
//! cross-check (for `J`). Two routes that disagree produce
//! [`SpecfunError::AccuracyLoss`] instead of a silently wrong number.

use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

type C64 = Complex64;

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecfunError {
    #[error("argument |z| = {abs_z} exceeds the supported range")]
    ArgumentOutOfRange { abs_z: f64 },
    #[error("order real part {re_nu} exceeds the configured bound {bound}")]
    OrderOutOfRange { re_nu: f64, bound: f64 },
    #[error("evaluation routes disagree: relative difference {rel_diff:e}")]
    AccuracyLoss { rel_diff: f64 },
    #[error("function is singular at z = 0")]
    SingularAtOrigin,
}

/// Evaluation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecfunConfig {
    /// Series is used for `|z| <= z_switch`.
    pub z_switch: f64,
    /// Bound on `|Re ν|`.
    pub max_order: f64,
    /// Maximum tolerated disagreement between two routes.
    pub cross_check_tol: f64,
}

impl Default for SpecfunConfig {
    fn default() -> Self {
        Self { z_switch: 12.0, max_order: 60.0, cross_check_tol: 1e-6 }
    }
}

const MAX_ABS_Z: f64 = 1e5;

/// Largest recessive-side `Im z` at which the Hankel series is still used as a cross-check.
const SERIES_CANCEL_LIMIT: f64 = 9.0;
/// Largest recessive-side `Im z` at which the Hankel series is returned.
const SERIES_PREFERRED_LIMIT: f64 = 2.0;

/// Value and derivative of a cylinder function at one `(ν, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderValue {
    pub order: C64,
    pub arg: C64,
    pub value: C64,
    pub deriv: C64,
}

impl CylinderValue {
    fn scale(&self) -> f64 {
        self.value.norm() + self.deriv.norm()
    }
}

/// `J_ν(z)` and `J'_ν(z)` with default settings.
pub fn bessel_j(nu: C64, z: C64) -> Result<CylinderValue, SpecfunError> {
    bessel_j_with(&SpecfunConfig::default(), nu, z)
}

/// `H¹_ν(z)` and its derivative with default settings.
pub fn hankel1(nu: C64, z: C64) -> Result<CylinderValue, SpecfunError> {
    hankel_with(&SpecfunConfig::default(), HankelKind::First, nu, z)
}

/// `H²_ν(z)` and its derivative with default settings.
pub fn hankel2(nu: C64, z: C64) -> Result<CylinderValue, SpecfunError> {
    hankel_with(&SpecfunConfig::default(), HankelKind::Second, nu, z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HankelKind {
    First,
    Second,
}

impl HankelKind {
    fn sign(self) -> f64 {
        match self {
            HankelKind::First => 1.0,
            HankelKind::Second => -1.0,
        }
    }
}

fn check_args(cfg: &SpecfunConfig, nu: C64, z: C64) -> Result<(), SpecfunError> {
    if !(z.norm() <= MAX_ABS_Z) {
        return Err(SpecfunError::ArgumentOutOfRange { abs_z: z.norm() });
    }
    if !(nu.re.abs() <= cfg.max_order) {
        return Err(SpecfunError::OrderOutOfRange { re_nu: nu.re, bound: cfg.max_order });
    }
    Ok(())
}

pub fn bessel_j_with(cfg: &SpecfunConfig, nu: C64, z: C64) -> Result<CylinderValue, SpecfunError> {
    check_args(cfg, nu, z)?;
    if z.norm() <= cfg.z_switch {
        return j_series(nu, z);
    }
    let z0 = z * (cfg.z_switch / z.norm());
    let start = j_series(nu, z0)?;
    let (value, deriv) = transport(nu, z0, (start.value, start.deriv), z);
    let ode = CylinderValue { order: nu, arg: z, value, deriv };
    if let Some((h1, h2, err)) = asymptotic_pair(nu, z) {
        if err < 1e-12 {
            let asym = CylinderValue {
                order: nu,
                arg: z,
                value: 0.5 * (h1.value + h2.value),
                deriv: 0.5 * (h1.deriv + h2.deriv),
            };
            let rel = rel_diff(&ode, &asym);
            if rel > cfg.cross_check_tol {
                return Err(SpecfunError::AccuracyLoss { rel_diff: rel });
            }
        }
    }
    Ok(ode)
}

pub fn hankel_with(
    cfg: &SpecfunConfig,
    kind: HankelKind,
    nu: C64,
    z: C64,
) -> Result<CylinderValue, SpecfunError> {
    check_args(cfg, nu, z)?;
    if z.norm() == 0.0 {
        return Err(SpecfunError::SingularAtOrigin);
    }
    let ode = hankel_far_field(kind, nu, z);
    let dist = (nu - nu.re.round()).norm();
    // the series subtracts two J's and loses about 2·Im(±z)/ln 10 digits
    // where the Hankel function is recessive
    let recessive_im = kind.sign() * z.im;
    if z.norm() <= cfg.z_switch && dist >= 1e-3 && recessive_im < SERIES_CANCEL_LIMIT {
        let series = hankel_series(kind, nu, z)?;
        let rel = rel_diff(&series, &ode);
        if rel > cfg.cross_check_tol {
            return Err(SpecfunError::AccuracyLoss { rel_diff: rel });
        }
        if dist >= 0.05 && recessive_im < SERIES_PREFERRED_LIMIT {
            return Ok(series);
        }
    }
    Ok(ode)
}

fn rel_diff(a: &CylinderValue, b: &CylinderValue) -> f64 {
    let num = (a.value - b.value).norm() + (a.deriv - b.deriv).norm();
    num / b.scale().max(f64::MIN_POSITIVE)
}

/// Reciprocal gamma function, entire in `z`.
pub fn recip_gamma(z: C64) -> C64 {
    if z.re < 0.5 {
        // 1/Γ(z) = sin(πz) Γ(1−z) / π
        let s = sin_pi(z);
        if s == C64::new(0.0, 0.0) {
            return s;
        }
        s * ln_gamma_right(C64::new(1.0, 0.0) - z).exp() / PI
    } else {
        (-ln_gamma_right(z)).exp()
    }
}

/// `sin(πz)`, exactly zero at real integers.
fn sin_pi(z: C64) -> C64 {
    let n = z.re.round();
    let frac = C64::new(z.re - n, z.im);
    if frac == C64::new(0.0, 0.0) {
        return frac;
    }
    let s = (PI * frac).sin();
    if (n as i64).rem_euclid(2) == 0 {
        s
    } else {
        -s
    }
}

/// Complex `ln Γ(z)` for `Re z >= 0.5` (Lanczos, g = 7).
fn ln_gamma_right(z: C64) -> C64 {
    const G: f64 = 7.0;
    const P: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let z = z - 1.0;
    let mut x = C64::new(P[0], 0.0);
    for (i, &p) in P.iter().enumerate().skip(1) {
        x += p / (z + i as f64);
    }
    let t = z + G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

/// Ascending series for `J_ν` and `J'_ν`.
fn j_series(nu: C64, z: C64) -> Result<CylinderValue, SpecfunError> {
    if z.norm() == 0.0 {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let (value, deriv) = if nu == zero {
            (one, zero)
        } else if nu == one {
            (zero, C64::new(0.5, 0.0))
        } else if nu.re > 1.0 {
            (zero, zero)
        } else {
            return Err(SpecfunError::SingularAtOrigin);
        };
        return Ok(CylinderValue { order: nu, arg: z, value, deriv });
    }
    if nu.im == 0.0 && nu.re < 0.0 && nu.re == nu.re.round() {
        // J_{-n} = (-1)^n J_n
        let v = j_series(-nu, z)?;
        let sgn = if (nu.re as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        return Ok(CylinderValue { order: nu, arg: z, value: sgn * v.value, deriv: sgn * v.deriv });
    }
    let q = -0.25 * z * z;
    // The gamma factor enters through one evaluation and a recurrence, so
    // its rounding is common to all terms and survives the cancellation.
    let mut term = recip_gamma(nu + 1.0);
    let mut sum = C64::new(0.0, 0.0);
    let mut dsum = C64::new(0.0, 0.0);
    let k_min = (z.norm() as usize) + 2;
    for k in 0..600usize {
        if k > 0 {
            term *= q / (k as f64 * (nu + k as f64));
        }
        sum += term;
        dsum += term * (2.0 * k as f64 + nu);
        if k >= k_min && term.norm() <= 1e-17 * sum.norm().max(1e-300) {
            break;
        }
    }
    let lead = (nu * (0.5 * z).ln()).exp();
    Ok(CylinderValue { order: nu, arg: z, value: lead * sum, deriv: lead * dsum / z })
}

/// Hankel functions from `J_{±ν}`; requires `ν` away from the integers.
fn hankel_series(kind: HankelKind, nu: C64, z: C64) -> Result<CylinderValue, SpecfunError> {
    let jp = j_series(nu, z)?;
    let jm = j_series(-nu, z)?;
    let sgn = kind.sign();
    let phase = (-sgn * I * PI * nu).exp();
    let denom = sgn * I * (PI * nu).sin();
    Ok(CylinderValue {
        order: nu,
        arg: z,
        value: (jm.value - phase * jp.value) / denom,
        deriv: (jm.deriv - phase * jp.deriv) / denom,
    })
}

/// Large-argument expansion of `H^{1,2}_ν(z)`; returns value, derivative and
/// the relative size of the smallest retained term.
fn hankel_asymptotic(kind: HankelKind, nu: C64, z: C64) -> (CylinderValue, f64) {
    let sgn = kind.sign();
    let mu4 = 4.0 * nu * nu;
    let si = sgn * I;
    let mut coef = C64::new(1.0, 0.0);
    let mut sum = C64::new(1.0, 0.0);
    let mut dsum = C64::new(0.0, 0.0);
    let mut zpow = C64::new(1.0, 0.0);
    let mut ipow = C64::new(1.0, 0.0);
    let mut last = f64::INFINITY;
    let mut err = f64::INFINITY;
    for k in 1..200usize {
        let kf = k as f64;
        coef *= (mu4 - (2.0 * kf - 1.0).powi(2)) / (8.0 * kf);
        zpow /= z;
        ipow *= si;
        let term = ipow * coef * zpow;
        let mag = term.norm();
        if mag > last {
            break;
        }
        sum += term;
        dsum += -kf * term / z;
        last = mag;
        err = mag / sum.norm().max(1e-300);
        if err < 1e-17 {
            break;
        }
    }
    let omega = z - 0.5 * PI * nu - 0.25 * PI;
    let amp = (2.0 / PI) / z;
    let amp = amp.sqrt();
    let e = (si * omega).exp();
    let value = amp * e * sum;
    let deriv = value * (si - 0.5 / z) + amp * e * dsum;
    (CylinderValue { order: nu, arg: z, value, deriv }, err)
}

fn asymptotic_pair(nu: C64, z: C64) -> Option<(CylinderValue, CylinderValue, f64)> {
    let (h1, e1) = hankel_asymptotic(HankelKind::First, nu, z);
    let (h2, e2) = hankel_asymptotic(HankelKind::Second, nu, z);
    let err = e1.max(e2);
    err.is_finite().then_some((h1, h2, err))
}

/// Hankel function via the expansion at a far point on the ray through `z`,
/// transported inward with the Bessel equation.
fn hankel_far_field(kind: HankelKind, nu: C64, z: C64) -> CylinderValue {
    let dir = z / z.norm();
    let mut radius = z.norm().max(24.0);
    loop {
        let far = dir * radius;
        let (h, err) = hankel_asymptotic(kind, nu, far);
        if err < 1e-16 || radius >= MAX_ABS_Z {
            if radius == z.norm() {
                return h;
            }
            let (value, deriv) = transport(nu, far, (h.value, h.deriv), z);
            return CylinderValue { order: nu, arg: z, value, deriv };
        }
        radius *= 1.5;
    }
}

/// Carries `(w, w')` of a solution of `z²w'' + zw' + (z²−ν²)w = 0` from `a`
/// to `b` along the straight segment, by local Taylor series.
fn transport(nu: C64, a: C64, init: (C64, C64), b: C64) -> (C64, C64) {
    let (mut w, mut dw) = init;
    let mut z0 = a;
    let nu2 = nu * nu;
    loop {
        let remaining = b - z0;
        let dist = remaining.norm();
        if dist == 0.0 {
            break;
        }
        let max_step = (0.35 * z0.norm()).min(1.0);
        let h = if dist <= max_step { remaining } else { remaining * (max_step / dist) };
        let (nw, ndw) = taylor_step(nu2, z0, w, dw, h);
        w = nw;
        dw = ndw;
        z0 = if dist <= max_step { b } else { z0 + h };
    }
    (w, dw)
}

fn taylor_step(nu2: C64, z0: C64, w: C64, dw: C64, h: C64) -> (C64, C64) {
    // Scaled coefficients b_k = a_k h^k of w(z0 + h) = Σ a_k h^k.
    let mut b = [C64::new(0.0, 0.0); 160];
    b[0] = w;
    b[1] = dw * h;
    let z02 = z0 * z0;
    let h2 = h * h;
    let h3 = h2 * h;
    let h4 = h2 * h2;
    let mut val = b[0] + b[1];
    let mut der = b[1];
    let mut k_used = 1;
    for k in 0..(b.len() - 2) {
        let kf = k as f64;
        let mut acc = z0 * (kf + 1.0) * (2.0 * kf + 1.0) * h * b[k + 1]
            + (kf * kf + z02 - nu2) * h2 * b[k];
        if k >= 1 {
            acc += 2.0 * z0 * h3 * b[k - 1];
        }
        if k >= 2 {
            acc += h4 * b[k - 2];
        }
        b[k + 2] = -acc / (z02 * (kf + 2.0) * (kf + 1.0));
        val += b[k + 2];
        der += (kf + 2.0) * b[k + 2];
        k_used = k + 2;
        let tail = b[k + 2].norm() + b[k + 1].norm();
        if k >= 6 && tail <= 1e-18 * val.norm().max(der.norm()).max(1e-300) {
            break;
        }
    }
    debug_assert!(k_used < b.len());
    (val, der / h)
}

/// Side length of the `(ν, z)` invariant grid.
pub const GRID_SIDE: usize = 20;

/// Orders `k/4 + 0.1i·(k mod 3)` and arguments on a log scale from 0.5 to 60
/// at angles up to π/4, `k < GRID_SIDE`.
pub fn invariant_grid() -> Vec<(C64, C64)> {
    let n = GRID_SIDE;
    let orders = (0..n).map(|k| C64::new(0.25 * k as f64, 0.1 * (k % 3) as f64));
    let args: Vec<C64> = (0..n)
        .map(|k| {
            let x = k as f64 / (n - 1) as f64;
            C64::from_polar(0.5 * 120f64.powf(x), 0.25 * PI * ((3 * k) % n) as f64 / (n - 1) as f64)
        })
        .collect();
    orders.flat_map(|nu| args.iter().map(move |&z| (nu, z))).collect()
}

/// `|J_ν H¹_ν′ − J_ν′ H¹_ν − 2i/(πz)|` relative to `2/(π|z|)`.
pub fn wronskian_residual(nu: C64, z: C64) -> Result<f64, SpecfunError> {
    let j = bessel_j(nu, z)?;
    let h = hankel1(nu, z)?;
    let w = j.value * h.deriv - j.deriv * h.value;
    let exact = 2.0 * I / (PI * z);
    Ok((w - exact).norm() / exact.norm())
}

/// Which family a recurrence check applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    J,
    H1,
}

/// `|C_{ν−1} + C_{ν+1} − (2ν/z)C_ν|` relative to the largest of the three terms.
pub fn recurrence_residual(family: Family, nu: C64, z: C64) -> Result<f64, SpecfunError> {
    let eval = |order: C64| match family {
        Family::J => bessel_j(order, z),
        Family::H1 => hankel1(order, z),
    };
    let one = C64::new(1.0, 0.0);
    let lo = eval(nu - one)?.value;
    let mid = 2.0 * nu / z * eval(nu)?.value;
    let hi = eval(nu + one)?.value;
    let scale = lo.norm().max(mid.norm()).max(hi.norm()).max(f64::MIN_POSITIVE);
    Ok((lo + hi - mid).norm() / scale)
}
