//! Connection coefficients of the reduced mode equation.
//!
//! With `v = r̂^{(n−1+b)/2} u` the reduced operator on mode `j` becomes
//! `v'' = (q/r̂² + p₁/r̂ − σ̂²) v`, `q = k(k−1) + λ_j² + V₀`, `k = (n−1+b)/2`,
//! `p₁ = −i a₀ σ̂`. The solution recessive at `r̂ = 0` is seeded by its
//! Frobenius series, carried outward by local Taylor series, and matched at
//! `r̂_match` against the asymptotic solutions `e^{±iσ̂r̂} r̂^{∓a₀/2}(1 + …)`.
//! The Wronskian that yields the incoming coefficient is evaluated against a
//! second solution integrated inward from `r̂_match`, so its constancy along
//! the path is a direct accuracy monitor.

use super::{ModeIndex, NormalOpsError, OperatorSpec};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

type C64 = Complex64;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// `mantissa · e^{log_scale}`; keeps growing solutions representable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledComplex {
    pub mantissa: C64,
    pub log_scale: f64,
}

impl ScaledComplex {
    pub fn new(mantissa: C64, log_scale: f64) -> Self {
        Self { mantissa, log_scale }
    }

    pub fn ln_abs(&self) -> f64 {
        self.mantissa.norm().ln() + self.log_scale
    }

    /// Plain value; infinite or zero when outside the `f64` range.
    pub fn value(&self) -> C64 {
        self.mantissa * self.log_scale.exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MatchPolicy {
    /// Fail with `MatchRadiusTooSmall` if the radius is insufficient.
    Fixed,
    /// Enlarge the radius by factors of 1.5 up to `max_radius`.
    Extend { max_radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringSettings {
    pub r_start: f64,
    pub r_match: f64,
    /// Relative size of the first neglected asymptotic term allowed at `r_match`.
    pub match_tol: f64,
    pub policy: MatchPolicy,
}

impl Default for ScatteringSettings {
    fn default() -> Self {
        Self { r_start: 1e-4, r_match: 40.0, match_tol: 1e-11, policy: MatchPolicy::Fixed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeScattering {
    pub t0: f64,
    pub j: u32,
    pub sigma: C64,
    pub nu: C64,
    /// Coefficient on `e^{+iσ̂r̂}` (outgoing for `σ̂ = 1`).
    pub c_out: ScaledComplex,
    /// Coefficient on `e^{−iσ̂r̂}`.
    pub c_in: ScaledComplex,
    /// `|c_in| / (|c_in| + |c_out|)` for real `σ̂`; fraction of the solution at
    /// `r̂_match` carried by the growing branch when `Im σ̂ > 0`.
    pub in_fraction: f64,
    /// `Some(true)` when the recessive solution grows exponentially (`Im σ̂ > 0`).
    pub growth: Option<bool>,
    pub wronskian_drift: f64,
    pub r_match: f64,
    pub remainder: f64,
}

/// Mode data entering the reduced equation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ReducedMode {
    pub q: C64,
    pub nu: C64,
    pub a: C64,
}

impl ReducedMode {
    pub(crate) fn new(op: &OperatorSpec, t0: f64, j: u32) -> Result<Self, NormalOpsError> {
        if !op.is_scalar() {
            return Err(NormalOpsError::NotScalar);
        }
        let mode = ModeIndex::new(op.n, j, op.c_at(t0));
        let k = 0.5 * (op.n.as_f64() - 1.0 + op.b);
        let q = k * (k - 1.0) + mode.eigenvalue + op.v0_at(t0);
        let nu = (q + 0.25).sqrt();
        if !(nu.re > 0.0) {
            return Err(NormalOpsError::NonPositiveOrder { j, re_nu: nu.re });
        }
        Ok(Self { q, nu, a: op.a0_at(t0) })
    }
}

pub fn mode_scattering(
    op: &OperatorSpec,
    t0: f64,
    j: u32,
    sigma: C64,
) -> Result<ModeScattering, NormalOpsError> {
    mode_scattering_with(op, t0, j, sigma, &ScatteringSettings::default())
}

pub fn mode_scattering_with(
    op: &OperatorSpec,
    t0: f64,
    j: u32,
    sigma: C64,
    settings: &ScatteringSettings,
) -> Result<ModeScattering, NormalOpsError> {
    if (sigma.norm() - 1.0).abs() > 1e-12 || sigma.im < -1e-14 {
        return Err(NormalOpsError::InvalidFrequency { sigma });
    }
    let mode = ReducedMode::new(op, t0, j)?;
    let conn = connection(&mode, sigma, settings)?;
    let real_axis = sigma.im.abs() <= 1e-14;
    let (in_fraction, growth) = if real_axis {
        let ci = conn.c_minus.ln_abs();
        let co = conn.c_plus.ln_abs();
        let m = ci.max(co);
        let f = (ci - m).exp() / ((ci - m).exp() + (co - m).exp());
        (f, None)
    } else {
        let f = conn.grow_fraction;
        (f, Some(f > 0.5))
    };
    Ok(ModeScattering {
        t0,
        j,
        sigma,
        nu: mode.nu,
        c_out: conn.c_plus,
        c_in: conn.c_minus,
        in_fraction,
        growth,
        wronskian_drift: conn.wronskian_drift,
        r_match: conn.r_match,
        remainder: conn.remainder,
    })
}

/// Recessive solution `u` of the unscaled mode equation at frequency `sigma`
/// (any nonzero complex value), sampled at increasing `radii`, normalized so
/// that `u ~ r^{ξ₊}` at the origin.
pub fn recessive_profile(
    op: &OperatorSpec,
    t0: f64,
    j: u32,
    sigma: C64,
    radii: &[f64],
) -> Result<Vec<C64>, NormalOpsError> {
    if sigma.norm() == 0.0 || radii.is_empty() || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(NormalOpsError::Invalid("radii must be increasing and σ nonzero".into()));
    }
    let mode = ReducedMode::new(op, t0, j)?;
    let k = 0.5 * (op.n.as_f64() - 1.0 + op.b);
    let p1 = -I * mode.a * sigma;
    let p2 = -sigma * sigma;
    let r_start = (1e-4 / sigma.norm()).min(0.5 * radii[0]);
    let mut nodes = Vec::new();
    let mut marks = Vec::new();
    let mut prev = r_start;
    for &r in radii {
        nodes.extend(path_nodes(prev, r, mode.q).into_iter().skip(usize::from(!nodes.is_empty())));
        marks.push(nodes.len() - 1);
        prev = r;
    }
    let states = integrate(&nodes, frobenius(&mode, p1, p2, r_start), mode.q, p1, p2);
    Ok(marks
        .iter()
        .map(|&m| {
            let s = states[m];
            let r = nodes[m];
            // u = r^{−k} v
            s.v * (C64::new(s.log_scale, 0.0) - k * r.ln()).exp()
        })
        .collect())
}

/// Decomposition of the recessive solution onto `e^{±iσr̂}` asymptotics.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Connection {
    pub c_plus: ScaledComplex,
    pub c_minus: ScaledComplex,
    /// Fraction of the recessive solution at `r̂_match` carried by the branch
    /// that grows toward infinity (`e^{−iσr̂}` when `Im σ ≥ 0`, else `e^{+iσr̂}`).
    pub grow_fraction: f64,
    pub wronskian_drift: f64,
    pub r_match: f64,
    pub remainder: f64,
}

/// Any `σ ≠ 0`. The branch decaying at infinity is integrated inward, so the
/// coefficient on the growing branch is always well conditioned.
pub(crate) fn connection(
    mode: &ReducedMode,
    sigma: C64,
    settings: &ScatteringSettings,
) -> Result<Connection, NormalOpsError> {
    let p1 = -I * mode.a * sigma;
    let p2 = -sigma * sigma;
    let mut r_match = settings.r_match.max(settings.r_start * 2.0);
    let (plus, minus, remainder) = loop {
        let plus = asymptotic(mode.q, p1, I * sigma, r_match);
        let minus = asymptotic(mode.q, p1, -I * sigma, r_match);
        let remainder = plus.remainder.max(minus.remainder);
        if remainder <= settings.match_tol {
            break (plus, minus, remainder);
        }
        match settings.policy {
            MatchPolicy::Extend { max_radius } if r_match * 1.5 <= max_radius => r_match *= 1.5,
            _ => {
                return Err(NormalOpsError::MatchRadiusTooSmall {
                    r_match,
                    remainder,
                    tol: settings.match_tol,
                })
            }
        }
    };
    // Decaying (or, on the real axis, outgoing) branch.
    let (decay, grow) = if sigma.im >= 0.0 { (plus, minus) } else { (minus, plus) };

    let nodes = path_nodes(settings.r_start, r_match, mode.q);
    let rec = integrate(&nodes, frobenius(mode, p1, p2, settings.r_start), mode.q, p1, p2);
    let mut back_nodes = nodes.clone();
    back_nodes.reverse();
    let mut dec = integrate(&back_nodes, decay.state, mode.q, p1, p2);
    dec.reverse();

    // W(rec, decay) = c_grow · W(grow, decay).
    let wr: Vec<ScaledComplex> = rec.iter().zip(&dec).map(|(a, b)| wronskian(a, b)).collect();
    let w_end = *wr.last().expect("path has nodes");
    let scale_end = product_scale(rec.last().unwrap(), dec.last().unwrap());
    let ref_ln = if w_end.ln_abs() > scale_end - 6.0 * std::f64::consts::LN_10 {
        w_end.ln_abs()
    } else {
        scale_end
    };
    let mut drift = 0.0f64;
    for w in &wr {
        let diff = sub_scaled(w, &w_end);
        drift = drift.max((diff.ln_abs() - ref_ln).exp());
    }

    let rec_end = rec.last().unwrap();
    let w_gd = wronskian(&grow.state, &decay.state);
    let c_grow = div_scaled(&w_end, &w_gd);
    let w_rg = wronskian(rec_end, &grow.state);
    // W(rec, grow) = c_decay · W(decay, grow) = −c_decay · W(grow, decay)
    let c_decay = div_scaled(&w_rg, &ScaledComplex::new(-w_gd.mantissa, w_gd.log_scale));

    let grow_part = ScaledComplex::new(
        c_grow.mantissa * (grow.state.v.norm() + grow.state.dv.norm()),
        c_grow.log_scale + grow.state.log_scale,
    );
    let rec_size = (rec_end.v.norm() + rec_end.dv.norm()).ln() + rec_end.log_scale;
    let grow_fraction = (grow_part.ln_abs() - rec_size).exp().min(1.0);

    let (c_plus, c_minus) = if sigma.im >= 0.0 { (c_decay, c_grow) } else { (c_grow, c_decay) };
    Ok(Connection { c_plus, c_minus, grow_fraction, wronskian_drift: drift, r_match, remainder })
}

/// Solution state `(v, v')·e^{log_scale}` at one radius.
#[derive(Debug, Clone, Copy)]
struct State {
    v: C64,
    dv: C64,
    log_scale: f64,
}

impl State {
    fn renormalized(self) -> Self {
        let m = self.v.norm().max(self.dv.norm());
        if m > 1e100 || (m < 1e-100 && m > 0.0) {
            let l = m.ln();
            let f = (-l).exp();
            State { v: self.v * f, dv: self.dv * f, log_scale: self.log_scale + l }
        } else {
            self
        }
    }
}

fn wronskian(a: &State, b: &State) -> ScaledComplex {
    ScaledComplex::new(a.v * b.dv - a.dv * b.v, a.log_scale + b.log_scale)
}

fn product_scale(a: &State, b: &State) -> f64 {
    (a.v.norm() * b.dv.norm() + a.dv.norm() * b.v.norm()).max(1e-300).ln() + a.log_scale + b.log_scale
}

fn sub_scaled(a: &ScaledComplex, b: &ScaledComplex) -> ScaledComplex {
    let m = a.log_scale.max(b.log_scale);
    ScaledComplex::new(a.mantissa * (a.log_scale - m).exp() - b.mantissa * (b.log_scale - m).exp(), m)
}

fn div_scaled(a: &ScaledComplex, b: &ScaledComplex) -> ScaledComplex {
    ScaledComplex::new(a.mantissa / b.mantissa, a.log_scale - b.log_scale)
}

/// Frobenius series `r^{½+ν} Σ α_m r^m` at `r`, normalized by `α₀ = 1`.
fn frobenius(mode: &ReducedMode, p1: C64, p2: C64, r: f64) -> State {
    let rho = 0.5 + mode.nu;
    let two_nu = 2.0 * mode.nu;
    let mut a_prev2 = C64::new(0.0, 0.0);
    let mut a_prev = C64::new(1.0, 0.0);
    let mut sum = C64::new(1.0, 0.0);
    let mut dsum = rho;
    let mut rp = 1.0;
    for m in 1..200 {
        let mf = m as f64;
        let a = (p1 * a_prev + p2 * a_prev2) / (mf * (mf + two_nu));
        rp *= r;
        let term = a * rp;
        sum += term;
        dsum += (rho + mf) * term;
        a_prev2 = a_prev;
        a_prev = a;
        if term.norm() < 1e-18 * sum.norm() && m > 3 {
            break;
        }
    }
    // r^{ρ} = e^{ρ ln r}: keep the modulus in the log scale.
    let ln_r = r.ln();
    let lead = (C64::new(0.0, rho.im * ln_r)).exp();
    State { v: lead * sum, dv: lead * dsum / r, log_scale: rho.re * ln_r }.renormalized()
}

struct Asymptotic {
    state: State,
    remainder: f64,
}

/// `e^{κr} r^{β} Σ d_k r^{−k}` with `κ² = −σ²`, `β = p₁/(2κ)`.
fn asymptotic(q: C64, p1: C64, kappa: C64, r: f64) -> Asymptotic {
    let beta = p1 / (2.0 * kappa);
    let mut term = C64::new(1.0, 0.0);
    let mut sum = term;
    let mut dsum = C64::new(0.0, 0.0); // Σ (β−k) d_k r^{−k}, later divided by r
    dsum += beta;
    let mut last = f64::INFINITY;
    let mut remainder = f64::INFINITY;
    for k in 1..400 {
        let kf = k as f64;
        let next = term * ((beta - kf + 1.0) * (beta - kf) - q) / (2.0 * kappa * kf * r);
        let mag = next.norm();
        if mag > last && k > 1 {
            remainder = last / sum.norm();
            break;
        }
        term = next;
        sum += term;
        dsum += (beta - kf) * term;
        last = mag;
        remainder = mag / sum.norm();
        if mag < 1e-17 * sum.norm() {
            break;
        }
    }
    let w = sum;
    let dw = dsum / r;
    // e^{κr} r^{β}
    let expo = kappa * r + beta * r.ln();
    let phase = C64::new(0.0, expo.im).exp();
    let v = phase * w;
    let dv = phase * (kappa * w + dw);
    Asymptotic { state: State { v, dv, log_scale: expo.re }.renormalized(), remainder }
}

/// Radii from `r0` to `r1`: geometric near the origin, then uniform.
fn path_nodes(r0: f64, r1: f64, q: C64) -> Vec<f64> {
    let qa = q.norm().sqrt().max(1.0);
    let mut nodes = vec![r0];
    let mut r = r0;
    while r < r1 {
        let h = (0.35 * r).min(2.0 * r / qa).clamp(1e-12, 1.0);
        r = (r + h).min(r1);
        if r1 - r < 1e-9 * r1 {
            r = r1;
        }
        nodes.push(r);
    }
    nodes
}

/// Carries `init`, given at `nodes[0]`, through all nodes.
fn integrate(nodes: &[f64], init: State, q: C64, p1: C64, p2: C64) -> Vec<State> {
    let mut out = Vec::with_capacity(nodes.len());
    let mut s = init;
    out.push(s);
    for w in nodes.windows(2) {
        let (v, dv) = taylor_step(q, p1, p2, w[0], s.v, s.dv, w[1] - w[0]);
        s = State { v, dv, log_scale: s.log_scale }.renormalized();
        out.push(s);
    }
    out
}

/// One Taylor step of `r² v'' = (q + p₁ r + p₂ r²) v` from `r0` by `h`.
fn taylor_step(q: C64, p1: C64, p2: C64, r0: f64, v: C64, dv: C64, h: f64) -> (C64, C64) {
    let a = q + p1 * r0 + p2 * r0 * r0;
    let b = p1 + 2.0 * p2 * r0;
    let c = p2;
    let h2 = h * h;
    let h3 = h2 * h;
    let h4 = h2 * h2;
    let r02 = r0 * r0;
    let mut bk = [C64::new(0.0, 0.0); 200];
    bk[0] = v;
    bk[1] = dv * h;
    let mut val = bk[0] + bk[1];
    let mut der = bk[1];
    for k in 0..(bk.len() - 2) {
        let kf = k as f64;
        let mut acc = (a - kf * (kf - 1.0)) * h2 * bk[k] - 2.0 * r0 * (kf + 1.0) * kf * h * bk[k + 1];
        if k >= 1 {
            acc += b * h3 * bk[k - 1];
        }
        if k >= 2 {
            acc += c * h4 * bk[k - 2];
        }
        bk[k + 2] = acc / (r02 * (kf + 2.0) * (kf + 1.0));
        val += bk[k + 2];
        der += (kf + 2.0) * bk[k + 2];
        let tail = bk[k + 2].norm() + bk[k + 1].norm();
        if k >= 6 && tail <= 1e-18 * val.norm().max(der.norm()).max(1e-300) {
            break;
        }
    }
    (val, der / h)
}
