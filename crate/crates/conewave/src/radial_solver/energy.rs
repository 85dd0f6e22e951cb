use super::{ModeField, RadialError};
use crate::normal_ops::OperatorSpec;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Energy `½∫(|u_t|² + |u_r|² + Re W |u|²/r²) r^{n−1+b} dr` at every stored
/// level, `W = λ_j² + V₀`, by the trapezoidal rule over the whole grid.
pub fn mode_energy(field: &ModeField, op: &OperatorSpec) -> Vec<f64> {
    let m = field.n as f64 - 1.0 + field.b;
    let nr = field.n_nodes();
    let r = &field.grid.nodes;
    let weights: Vec<f64> = r.iter().map(|x| x.powf(m)).collect();
    let mut ur = vec![C64::new(0.0, 0.0); nr];
    let mut dens = vec![0.0; nr];
    (0..field.n_levels())
        .map(|i| {
            let u = field.row(i);
            let ut = field.velocity_row(i);
            field.grid.derivative(u, &mut ur);
            let w = field.lambda_sq[i] + op.v0_at(field.times[i]).re;
            for k in 0..nr {
                dens[k] = 0.5 * weights[k] * (ut[k].norm_sqr() + ur[k].norm_sqr() + w * u[k].norm_sqr() / (r[k] * r[k]));
            }
            trapezoid(r, &dens)
        })
        .collect()
}

fn trapezoid(r: &[f64], g: &[f64]) -> f64 {
    r.windows(2).zip(g.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
}

/// Wedge `{τ₀ < (t−t₀)/r < τ₁}` cut off by the ingoing null surface
/// `t + r = t₀ + reach`, sampled on `slices` values of `τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WedgeSpec {
    pub t0: f64,
    pub tau0: f64,
    pub tau1: f64,
    pub slices: usize,
    /// Defaults to the largest value the stored levels and grid allow.
    pub reach: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub taus: Vec<f64>,
    pub energies: Vec<f64>,
    pub reach: f64,
    /// Largest increase between consecutive slices, relative to the largest
    /// energy; 0 for a nonincreasing trace.
    pub max_positive_jump: f64,
}

/// Flux of the `∂_t` energy current through the slices `t = t₀ + τr`,
/// weighted by `e^{−Ϝτ} r^{−2ℓ}`:
/// `E(τ) = e^{−Ϝτ}∫ r^{−2ℓ}(e + τ Re(ū_t u_r)) r^{n−1+b} dr` over
/// `r < reach/(1+τ)`. Without forcing and for `Ϝ = ℓ = 0` the trace is
/// nonincreasing, the outflow through the null cutoff being nonnegative.
pub fn wedge_energy_monitor(
    field: &ModeField,
    op: &OperatorSpec,
    ell: f64,
    digamma: f64,
    wedge: &WedgeSpec,
) -> Result<EnergyTrace, RadialError> {
    let empty = EnergyTrace { taus: vec![], energies: vec![], reach: 0.0, max_positive_jump: 0.0 };
    if wedge.slices == 0 || !(wedge.tau0 < wedge.tau1) {
        return Ok(empty);
    }
    if !(wedge.tau0 > -1.0 && wedge.tau1 < 1.0) {
        return Err(RadialError::InvalidWedge(format!("({}, {}) not inside (−1, 1)", wedge.tau0, wedge.tau1)));
    }
    let (t_first, t_last) = (field.times[0], *field.times.last().expect("fields have levels"));
    let t0 = wedge.t0;
    if !(t0 >= t_first && t0 < t_last) {
        return Err(RadialError::InvalidWedge(format!("tip t₀ = {t0} outside stored times")));
    }
    let r_grid = field.grid.r_max();
    let mut reach_max = (t_last - t0).min(r_grid * (1.0 + wedge.tau0));
    if wedge.tau0 < 0.0 {
        reach_max = reach_max.min((t0 - t_first) * (1.0 + wedge.tau0) / -wedge.tau0);
    }
    let reach = match wedge.reach {
        Some(r) if r > reach_max * (1.0 + 1e-12) || !(r > 0.0) => {
            return Err(RadialError::InvalidWedge(format!("reach {r} exceeds the stored region {reach_max}")))
        }
        Some(r) => r,
        None => 0.999 * reach_max,
    };
    if !(reach > 0.0) {
        return Err(RadialError::InvalidWedge("wedge has no room inside the stored levels".into()));
    }
    let m = field.n as f64 - 1.0 + field.b;
    let r = &field.grid.nodes;
    let nr = r.len();
    let slices = wedge.slices;
    let mut taus = Vec::with_capacity(slices);
    let mut energies = Vec::with_capacity(slices);
    for s in 0..slices {
        let tau = if slices == 1 {
            wedge.tau0
        } else {
            wedge.tau0 + (wedge.tau1 - wedge.tau0) * s as f64 / (slices - 1) as f64
        };
        let r_cut = reach / (1.0 + tau);
        let last = r.partition_point(|&x| x <= r_cut);
        if last == 0 {
            taus.push(tau);
            energies.push(0.0);
            continue;
        }
        let upto = (last + 1).min(nr);
        let dens: Vec<f64> = (0..upto)
            .map(|k| {
                let t = t0 + tau * r[k];
                let (u, ut) = hermite(field, k, t);
                let (a, b, c) = if k == 0 { (0, 1, 2) } else if k + 1 == nr { (k - 2, k - 1, k) } else { (k - 1, k, k + 1) };
                let ua = if a == k { u } else { hermite(field, a, t).0 };
                let ub = if b == k { u } else { hermite(field, b, t).0 };
                let uc = if c == k { u } else { hermite(field, c, t).0 };
                let ur = lagrange_slope(r, (a, b, c), (ua, ub, uc), r[k]);
                let w = field_lambda_sq(field, t) + op.v0_at(t).re;
                let e = 0.5 * (ut.norm_sqr() + ur.norm_sqr() + w * u.norm_sqr() / (r[k] * r[k]));
                r[k].powf(m - 2.0 * ell) * (e + tau * (ut.conj() * ur).re)
            })
            .collect();
        let mut total = trapezoid(&r[..last], &dens[..last]);
        if last < nr {
            let (x0, x1) = (r[last - 1], r[last]);
            let frac = (r_cut - x0) / (x1 - x0);
            let d_cut = dens[last - 1] + frac * (dens[last] - dens[last - 1]);
            total += 0.5 * (r_cut - x0) * (dens[last - 1] + d_cut);
        }
        taus.push(tau);
        energies.push((-digamma * tau).exp() * total);
    }
    let scale = energies.iter().cloned().fold(0.0, f64::max);
    let max_positive_jump = if scale > 0.0 {
        energies.windows(2).map(|w| (w[1] - w[0]) / scale).fold(0.0, f64::max)
    } else {
        0.0
    };
    Ok(EnergyTrace { taus, energies, reach, max_positive_jump })
}

fn field_lambda_sq(field: &ModeField, t: f64) -> f64 {
    let (i, s, _) = locate(&field.times, t);
    let lam = &field.lambda_sq;
    if i + 1 < lam.len() {
        lam[i] + s * (lam[i + 1] - lam[i])
    } else {
        lam[i]
    }
}

/// Level index `i` with `t_i ≤ t ≤ t_{i+1}`, the local fraction and spacing.
fn locate(times: &[f64], t: f64) -> (usize, f64, f64) {
    let nl = times.len();
    if nl == 1 {
        return (0, 0.0, 1.0);
    }
    let i = times.partition_point(|&x| x <= t).saturating_sub(1).min(nl - 2);
    let h = times[i + 1] - times[i];
    (i, ((t - times[i]) / h).clamp(0.0, 1.0), h)
}

/// Cubic Hermite interpolation in time of `(u, u_t)` at node `k`.
fn hermite(field: &ModeField, k: usize, t: f64) -> (C64, C64) {
    let nr = field.n_nodes();
    let (i, s, h) = locate(&field.times, t);
    if field.n_levels() == 1 {
        return (field.values[k], field.velocity[k]);
    }
    let (u0, v0) = (field.values[i * nr + k], field.velocity[i * nr + k]);
    let (u1, v1) = (field.values[(i + 1) * nr + k], field.velocity[(i + 1) * nr + k]);
    let (s2, s3) = (s * s, s * s * s);
    let u = u0 * (2.0 * s3 - 3.0 * s2 + 1.0) + v0 * (h * (s3 - 2.0 * s2 + s)) + u1 * (3.0 * s2 - 2.0 * s3) + v1 * (h * (s3 - s2));
    let ut = (u0 * (6.0 * s2 - 6.0 * s) + u1 * (6.0 * s - 6.0 * s2)) / h + v0 * (3.0 * s2 - 4.0 * s + 1.0) + v1 * (3.0 * s2 - 2.0 * s);
    (u, ut)
}

/// Slope at `x` of the quadratic through three samples.
fn lagrange_slope(r: &[f64], (a, b, c): (usize, usize, usize), (ua, ub, uc): (C64, C64, C64), x: f64) -> C64 {
    let (xa, xb, xc) = (r[a], r[b], r[c]);
    let la = ((x - xb) + (x - xc)) / ((xa - xb) * (xa - xc));
    let lb = ((x - xa) + (x - xc)) / ((xb - xa) * (xb - xc));
    let lc = ((x - xa) + (x - xb)) / ((xc - xa) * (xc - xb));
    ua * la + ub * lb + uc * lc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_flow::DomainSpec;
    use crate::radial_solver::RadialGrid;

    fn field(u: impl Fn(f64, f64) -> C64, ut: impl Fn(f64, f64) -> C64) -> ModeField {
        let grid = RadialGrid::graded(1e-3, 1.1, 0.01, 3.0).unwrap();
        let times = (0..=100).map(|i| i as f64 * 0.02).collect();
        ModeField::from_fn(3, 0, grid, times, DomainSpec::new(0.0, 2.0, 1.0, 2.0).unwrap(), u, ut)
    }

    #[test]
    fn empty_wedge_gives_empty_trace() {
        let f = field(|_, _| C64::new(0.0, 0.0), |_, _| C64::new(0.0, 0.0));
        let op = OperatorSpec::free(3).unwrap();
        let w = WedgeSpec { t0: 1.0, tau0: 0.3, tau1: 0.3, slices: 5, reach: None };
        assert!(wedge_energy_monitor(&f, &op, 0.0, 0.0, &w).unwrap().taus.is_empty());
        let w = WedgeSpec { t0: 1.0, tau0: -1.5, tau1: 0.3, slices: 5, reach: None };
        assert!(wedge_energy_monitor(&f, &op, 0.0, 0.0, &w).is_err());
    }

    #[test]
    fn static_energy_of_linear_profile() {
        // u = r, u_t = 0: energy density ½ r² on [r_1, r_N]
        let f = field(|_, r| C64::new(r, 0.0), |_, _| C64::new(0.0, 0.0));
        let op = OperatorSpec::free(3).unwrap();
        let e = mode_energy(&f, &op);
        let (a, b) = (f.grid.nodes[0], f.grid.r_max());
        let exact = (b.powi(3) - a.powi(3)) / 6.0;
        assert!((e[0] - exact).abs() < 1e-4 * exact, "{} vs {exact}", e[0]);
    }

    #[test]
    fn hermite_reproduces_cubics_in_time() {
        let f = field(|t, r| C64::new(t * t * t - t + r, 0.0), |t, _| C64::new(3.0 * t * t - 1.0, 0.0));
        let (u, ut) = hermite(&f, 3, 0.731);
        let r = f.grid.nodes[3];
        assert!((u.re - (0.731f64.powi(3) - 0.731 + r)).abs() < 1e-12);
        assert!((ut.re - (3.0 * 0.731f64.powi(2) - 1.0)).abs() < 1e-10);
    }
}
