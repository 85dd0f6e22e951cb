use super::{ModeField, RadialError};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub r_lo: f64,
    pub r_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    /// Stored level actually used.
    pub t: f64,
    pub points: usize,
}

/// Values below this fraction of the field's peak make the fit degenerate.
const FIT_FLOOR: f64 = 1e-12;

/// Least-squares slope of `log|u(t, r)|` against `log r` over the window,
/// at the stored level closest to `t_sample`.
pub fn phg_exponent_fit(field: &ModeField, window: FitWindow, t_sample: f64) -> Result<ExponentFit, RadialError> {
    if !(window.r_lo > 0.0 && window.r_lo < window.r_hi) {
        return Err(RadialError::FitDegenerate(format!("window [{}, {}] is empty", window.r_lo, window.r_hi)));
    }
    let r = &field.grid.nodes;
    let nr = r.len();
    let inner = r.partition_point(|&x| x < window.r_hi);
    for i in 0..field.n_levels() {
        if field.source[i * nr..i * nr + inner].iter().any(|f| f.norm() != 0.0) {
            return Err(RadialError::FitPrecondition(format!(
                "source does not vanish on r < {} (level t = {})",
                window.r_hi, field.times[i]
            )));
        }
    }
    let i = (0..field.n_levels())
        .min_by(|&a, &b| (field.times[a] - t_sample).abs().total_cmp(&(field.times[b] - t_sample).abs()))
        .ok_or_else(|| RadialError::FitDegenerate("field has no levels".into()))?;
    let row = field.row(i);
    let floor = FIT_FLOOR * field.peak_abs();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in 0..nr {
        if r[k] < window.r_lo || r[k] > window.r_hi {
            continue;
        }
        let a = row[k].norm();
        if !(a > floor) || a == 0.0 {
            return Err(RadialError::FitDegenerate(format!("|u| = {a:e} below floor at r = {}", r[k])));
        }
        xs.push(r[k].ln());
        ys.push(a.ln());
    }
    let np = xs.len();
    if np < 3 {
        return Err(RadialError::FitDegenerate(format!("only {np} nodes in the window")));
    }
    let nf = np as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = (ssr / (nf - 2.0) / sxx).sqrt();
    Ok(ExponentFit { slope, stderr, intercept, t: field.times[i], points: np })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_flow::DomainSpec;
    use crate::radial_solver::RadialGrid;
    use num_complex::Complex64 as C64;

    fn field(u: impl Fn(f64, f64) -> C64) -> ModeField {
        let grid = RadialGrid::graded(1e-4, 1.2, 0.05, 2.0).unwrap();
        ModeField::from_fn(3, 0, grid, vec![0.0, 1.0], DomainSpec::new(0.0, 1.0, 1.0, 2.0).unwrap(), u, |_, _| C64::new(0.0, 0.0))
    }

    #[test]
    fn recovers_power_law() {
        let f = field(|_, r| C64::new(0.0, 2.0 * r.powf(1.37)));
        let fit = phg_exponent_fit(&f, FitWindow { r_lo: 1e-3, r_hi: 1e-2 }, 0.9).unwrap();
        assert!((fit.slope - 1.37).abs() < 1e-12);
        assert!(fit.stderr < 1e-10);
        assert_eq!(fit.t, 1.0);
    }

    #[test]
    fn vanishing_field_is_degenerate() {
        let f = field(|_, _| C64::new(0.0, 0.0));
        assert!(matches!(
            phg_exponent_fit(&f, FitWindow { r_lo: 1e-3, r_hi: 1e-2 }, 0.0),
            Err(RadialError::FitDegenerate(_))
        ));
    }

    #[test]
    fn source_near_origin_rejected() {
        let mut f = field(|_, r| C64::new(r, 0.0));
        f.source[2] = C64::new(1.0, 0.0);
        assert!(matches!(
            phg_exponent_fit(&f, FitWindow { r_lo: 1e-3, r_hi: 1e-2 }, 0.0),
            Err(RadialError::FitPrecondition(_))
        ));
    }
}
