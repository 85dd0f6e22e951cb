use super::RadialError;
use crate::phase_flow::DomainSpec;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// One-dimensional profile used for sources and data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Profile {
    /// `exp(1 − 1/(1−x²))` with `x = (y − center)/half_width`; C^∞.
    Bump { center: f64, half_width: f64 },
    /// `(1−x²)^order`; `order − 1` continuous derivatives.
    PolyBump { center: f64, half_width: f64, order: u32 },
    /// Indicator of `[start, end)`.
    Boxcar { start: f64, end: f64 },
}

impl Profile {
    pub fn eval(&self, y: f64) -> f64 {
        match *self {
            Profile::Bump { center, half_width } => {
                let x = (y - center) / half_width;
                if x.abs() < 1.0 {
                    (1.0 - 1.0 / (1.0 - x * x)).exp()
                } else {
                    0.0
                }
            }
            Profile::PolyBump { center, half_width, order } => {
                let x = (y - center) / half_width;
                if x.abs() < 1.0 {
                    (1.0 - x * x).powi(order as i32)
                } else {
                    0.0
                }
            }
            Profile::Boxcar { start, end } => {
                if y >= start && y < end {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match *self {
            Profile::Bump { center, half_width } | Profile::PolyBump { center, half_width, .. } => {
                (center - half_width, center + half_width)
            }
            Profile::Boxcar { start, end } => (start, end),
        }
    }

    /// Number of continuous derivatives; `None` for C^∞.
    pub fn smoothness(&self) -> Option<u32> {
        match *self {
            Profile::Bump { .. } => None,
            Profile::PolyBump { order, .. } => Some(order.saturating_sub(1)),
            Profile::Boxcar { .. } => Some(0),
        }
    }

    /// Order of vanishing at `y = 0`: 0 if the profile is nonzero there,
    /// `None` if it vanishes to infinite order.
    fn vanishing_order_at_zero(&self) -> Option<f64> {
        let (lo, hi) = self.support();
        if lo > 0.0 || hi < 0.0 {
            return None;
        }
        match *self {
            Profile::Bump { .. } if lo == 0.0 || hi == 0.0 => None,
            Profile::PolyBump { order, .. } if lo == 0.0 || hi == 0.0 => Some(order as f64),
            Profile::Boxcar { .. } if hi == 0.0 => None,
            _ => Some(0.0),
        }
    }

    fn validate(&self) -> Result<(), String> {
        match *self {
            Profile::Bump { center, half_width } | Profile::PolyBump { center, half_width, .. } => {
                if !center.is_finite() || !(half_width > 0.0) || !half_width.is_finite() {
                    return Err("profile needs finite center and positive half width".into());
                }
            }
            Profile::Boxcar { start, end } => {
                if !(start < end) || !start.is_finite() || !end.is_finite() {
                    return Err("boxcar needs start < end".into());
                }
            }
        }
        if let Profile::PolyBump { order: 0, .. } = self {
            return Err("polynomial bump needs order ≥ 1".into());
        }
        Ok(())
    }
}

/// Radial profile `A·r^power·shape(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub amplitude: C64,
    #[serde(default)]
    pub power: f64,
    pub shape: Profile,
}

impl RadialProfile {
    pub fn eval(&self, r: f64) -> C64 {
        let s = self.shape.eval(r);
        if s == 0.0 {
            return C64::new(0.0, 0.0);
        }
        self.amplitude * (s * r.powf(self.power))
    }

    /// Exponent `q` with `|profile| ~ r^q` as `r → 0`; `None` if it vanishes
    /// near 0.
    pub fn decay(&self) -> Option<f64> {
        if self.amplitude == C64::new(0.0, 0.0) {
            return None;
        }
        self.shape.vanishing_order_at_zero().map(|q| q + self.power)
    }
}

/// `f_j(t, r) = T(t)·R(r)` on one spherical-harmonic mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSource {
    pub j: u32,
    pub time: Profile,
    pub radial: RadialProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    pub t0: f64,
    pub t1: f64,
    pub r0: f64,
    pub r1: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub modes: Vec<ModeSource>,
}

impl SourceSpec {
    pub fn single(src: ModeSource) -> Self {
        Self { modes: vec![src] }
    }

    pub fn support(&self) -> Option<SupportBox> {
        self.modes.iter().fold(None, |acc, m| {
            let (t0, t1) = m.time.support();
            let (r0, r1) = m.radial.shape.support();
            let b = SupportBox { t0, t1, r0: r0.max(0.0), r1 };
            Some(match acc {
                None => b,
                Some(a) => SupportBox { t0: a.t0.min(b.t0), t1: a.t1.max(b.t1), r0: a.r0.min(b.r0), r1: a.r1.max(b.r1) },
            })
        })
    }

    /// Smallest number of available derivatives over all terms.
    pub fn smoothness(&self) -> Option<u32> {
        self.modes
            .iter()
            .filter_map(|m| match (m.time.smoothness(), m.radial.shape.smoothness()) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            })
            .min()
    }

    pub fn has_mode(&self, j: u32) -> bool {
        self.modes.iter().any(|m| m.j == j)
    }

    /// The support must start after `t₋` and sit inside the lens.
    pub fn validate(&self, dom: &DomainSpec) -> Result<(), RadialError> {
        for m in &self.modes {
            m.time.validate().map_err(RadialError::InvalidSource)?;
            m.radial.shape.validate().map_err(RadialError::InvalidSource)?;
            if !m.radial.power.is_finite() || !m.radial.amplitude.is_finite() {
                return Err(RadialError::InvalidSource("amplitude and power must be finite".into()));
            }
        }
        if let Some(b) = self.support() {
            if !(b.t0 > dom.t_minus) {
                return Err(RadialError::InvalidSource(format!(
                    "source support starts at t = {} but must start after t₋ = {}",
                    b.t0, dom.t_minus
                )));
            }
            let reach = dom.lateral_radius(b.t1.min(dom.t_plus));
            if b.r1 > reach {
                return Err(RadialError::InvalidSource(format!(
                    "source reaches r = {} beyond the lens radius {reach} at t = {}",
                    b.r1, b.t1
                )));
            }
        }
        Ok(())
    }
}

/// Initial data for one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeData {
    pub j: u32,
    pub u0: Option<RadialProfile>,
    pub u1: Option<RadialProfile>,
}

/// Data on the initial slice `t = t₋`, with the weight `ℓ` and b-order `k`
/// it must be compatible with: `u₀ ∈ r^{ℓ+k}L²`, `u₁ ∈ r^{ℓ+k−1}L²` near 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IVPData {
    pub modes: Vec<ModeData>,
    pub ell: f64,
    #[serde(default)]
    pub k: u32,
}

impl IVPData {
    pub fn has_mode(&self, j: u32) -> bool {
        self.modes.iter().any(|m| m.j == j && (m.u0.is_some() || m.u1.is_some()))
    }

    /// Checks the decay of every profile against the weight. Returns the
    /// smallest margin `q − (ℓ + k − n/2)` found.
    pub fn validate(&self, n: u32) -> Result<f64, RadialError> {
        let half_n = 0.5 * n as f64;
        let mut margin = f64::INFINITY;
        for m in &self.modes {
            for (p, shift, name) in [(m.u0, 0.0, "u0"), (m.u1, 1.0, "u1")] {
                let Some(p) = p else { continue };
                p.shape.validate().map_err(RadialError::InvalidData)?;
                if !p.power.is_finite() || !p.amplitude.is_finite() {
                    return Err(RadialError::InvalidData(format!("{name} of mode {} is not finite", m.j)));
                }
                if let Some(q) = p.decay() {
                    let need = self.ell + self.k as f64 - shift - half_n;
                    if !(q > need) {
                        return Err(RadialError::InvalidData(format!(
                            "{name} of mode {} decays like r^{q}, needs faster than r^{need} for ℓ = {}, k = {}",
                            m.j, self.ell, self.k
                        )));
                    }
                    margin = margin.min(q - need);
                }
            }
        }
        Ok(margin)
    }
}
