//! Sampled test of spectral admissibility on the closed upper half circle.

use super::scattering::{connection, ReducedMode};
use super::{
    is_non_indicial, weight_window, MatchPolicy, NormalOpsError, OperatorSpec, ScaledComplex,
    ScatteringSettings,
};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSettings {
    /// Highest mode included.
    pub j_max: u32,
    pub samples: usize,
    /// Relative size below which a coefficient counts as zero.
    pub zero_tol: f64,
    pub scattering: ScatteringSettings,
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self {
            j_max: 32,
            samples: 65,
            zero_tol: 1e-6,
            scattering: ScatteringSettings {
                policy: MatchPolicy::Extend { max_radius: 1e5 },
                ..ScatteringSettings::default()
            },
        }
    }
}

/// `e^{iθ}` for `θ = πk/(m−1)`, `k = 0..m`, so both `±1` and `i` are hit when
/// `m` is odd.
pub fn upper_half_circle(m: usize) -> Vec<Complex64> {
    match m {
        0 => Vec::new(),
        1 => vec![Complex64::new(0.0, 1.0)],
        _ => (0..m)
            .map(|k| {
                let theta = std::f64::consts::PI * k as f64 / (m - 1) as f64;
                // exact at the ends and the apex
                match (2 * k).cmp(&(m - 1)) {
                    std::cmp::Ordering::Equal => Complex64::new(0.0, 1.0),
                    _ if k == 0 => Complex64::new(1.0, 0.0),
                    _ if k == m - 1 => Complex64::new(-1.0, 0.0),
                    _ => Complex64::from_polar(1.0, theta),
                }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub j: u32,
    pub sample: usize,
    pub sigma: Complex64,
    pub c_out: ScaledComplex,
    pub c_in: ScaledComplex,
    /// Size of the coefficient that must not vanish, relative to the solution.
    pub direct_measure: f64,
    /// Same for the adjoint mode operator at `conj σ̂`.
    pub adjoint_measure: f64,
    pub wronskian_drift: f64,
    pub r_match: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ScanVerdict {
    Admissible,
    NotAdmissible { reason: String },
    Inconclusive { j: u32, sigma: Complex64, measure: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralScan {
    pub t0: f64,
    pub ell: f64,
    pub j_max: u32,
    pub zero_tol: f64,
    pub verdict: ScanVerdict,
    /// Ordered by `(j, sample)`.
    pub entries: Vec<ScanEntry>,
    pub max_wronskian_drift: f64,
}

/// Checks that no recessive mode solution is outgoing on the real axis or
/// decaying for `Im σ̂ > 0`, and the same for the adjoint at `conj σ̂` with
/// incoming and outgoing exchanged.
///
/// Modes above `j_max` are not examined; the obstructions weaken as `Re ν_j`
/// grows, which is an assumption of the truncation.
pub fn spectral_admissibility_scan(
    op: &OperatorSpec,
    t0: f64,
    ell: f64,
    sigmas: &[Complex64],
    settings: &ScanSettings,
) -> Result<SpectralScan, NormalOpsError> {
    op.validate()?;
    let window = weight_window(op, t0)?;
    let mut scan = SpectralScan {
        t0,
        ell,
        j_max: settings.j_max,
        zero_tol: settings.zero_tol,
        verdict: ScanVerdict::Admissible,
        entries: Vec::new(),
        max_wronskian_drift: 0.0,
    };
    if !window.contains(ell) {
        scan.verdict = ScanVerdict::NotAdmissible {
            reason: format!("weight {ell} outside window ({}, {})", window.lower, window.upper),
        };
        return Ok(scan);
    }
    if !is_non_indicial(op, t0, ell) {
        scan.verdict = ScanVerdict::NotAdmissible { reason: format!("weight {ell} is indicial") };
        return Ok(scan);
    }
    for s in sigmas {
        if (s.norm() - 1.0).abs() > 1e-12 || s.im < -1e-14 {
            return Err(NormalOpsError::InvalidFrequency { sigma: *s });
        }
    }
    let adjoint = op.formal_adjoint();
    let grid: Vec<(u32, usize)> =
        (0..=settings.j_max).flat_map(|j| (0..sigmas.len()).map(move |k| (j, k))).collect();
    let entries: Vec<ScanEntry> = grid
        .par_iter()
        .map(|&(j, k)| scan_entry(op, &adjoint, t0, j, k, sigmas[k], &settings.scattering))
        .collect::<Result<_, _>>()?;

    scan.max_wronskian_drift = entries.iter().map(|e| e.wronskian_drift).fold(0.0, f64::max);
    if let Some(e) = entries
        .iter()
        .filter(|e| e.direct_measure.min(e.adjoint_measure) < settings.zero_tol)
        .min_by(|a, b| {
            a.direct_measure.min(a.adjoint_measure).total_cmp(&b.direct_measure.min(b.adjoint_measure))
        })
    {
        scan.verdict = ScanVerdict::Inconclusive {
            j: e.j,
            sigma: e.sigma,
            measure: e.direct_measure.min(e.adjoint_measure),
        };
    }
    scan.entries = entries;
    Ok(scan)
}

fn scan_entry(
    op: &OperatorSpec,
    adjoint: &OperatorSpec,
    t0: f64,
    j: u32,
    sample: usize,
    sigma: Complex64,
    settings: &ScatteringSettings,
) -> Result<ScanEntry, NormalOpsError> {
    let real_axis = sigma.im.abs() <= 1e-14;
    let direct = connection(&ReducedMode::new(op, t0, j)?, sigma, settings)?;
    let dual = connection(&ReducedMode::new(adjoint, t0, j)?, sigma.conj(), settings)?;
    let (direct_measure, adjoint_measure) = if real_axis {
        (share(direct.c_minus, direct.c_plus), share(dual.c_plus, dual.c_minus))
    } else {
        (direct.grow_fraction, dual.grow_fraction)
    };
    Ok(ScanEntry {
        j,
        sample,
        sigma,
        c_out: direct.c_plus,
        c_in: direct.c_minus,
        direct_measure,
        adjoint_measure,
        wronskian_drift: direct.wronskian_drift.max(dual.wronskian_drift),
        r_match: direct.r_match.max(dual.r_match),
    })
}

/// `|a| / (|a| + |b|)` computed on log scales.
fn share(a: ScaledComplex, b: ScaledComplex) -> f64 {
    let la = a.ln_abs();
    let lb = b.ln_abs();
    let m = la.max(lb);
    if !m.is_finite() {
        return 0.0;
    }
    let ea = (la - m).exp();
    ea / (ea + (lb - m).exp())
}
