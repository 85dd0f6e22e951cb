//! Discrete weighted edge and b Sobolev norms of mode fields on lens domains.
//!
//! `‖u‖²_{H_e^{s,ℓ}} = Σ_j Σ_{|α|≤s} ∫∫ |V_e^α (r^{−ℓ}u_j)|² r^{n−1} dt dr` with
//! `V_e ∈ {r∂_t, r∂_r, λ_j}`. Words are ordered, `∂_t` is a centred difference
//! on the stored levels, `r∂_r` the grid's three-point derivative, and the
//! double integral a trapezoidal sum over the lens nodes.

use crate::radial_solver::ModeField;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

/// Largest supported edge order.
pub const MAX_EDGE_ORDER: u32 = 2;

/// Relative change between the two finest grids above which an entry is
/// flagged.
pub const REFINEMENT_TOLERANCE: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormsError {
    #[error("edge order s = {0} not supported (s ≤ 2)")]
    OrderUnsupported(u32),
    #[error("edge_norm takes k = 0, got k = {0}")]
    BOrderNotAllowed(u32),
    #[error("weight ℓ = {0} is not finite")]
    InvalidWeight(f64),
    #[error("no fields given")]
    Empty,
    #[error("fields do not share a grid and time levels: {0}")]
    Mismatch(String),
    #[error("need at least three stored levels for time differences")]
    TooFewLevels,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormOrders {
    pub s: u32,
    pub ell: f64,
    #[serde(default)]
    pub k: u32,
}

impl NormOrders {
    pub fn new(s: u32, ell: f64, k: u32) -> Result<Self, NormsError> {
        let o = Self { s, ell, k };
        o.validate()?;
        Ok(o)
    }

    pub fn validate(&self) -> Result<(), NormsError> {
        if self.s > MAX_EDGE_ORDER {
            return Err(NormsError::OrderUnsupported(self.s));
        }
        if !self.ell.is_finite() {
            return Err(NormsError::InvalidWeight(self.ell));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Letter {
    /// `r∂_t`
    T,
    /// `r∂_r`
    R,
    /// multiplication by `λ_j`
    L,
}

fn words(s: u32) -> Vec<Vec<Letter>> {
    let mut all = vec![vec![]];
    let mut last = vec![vec![]];
    for _ in 0..s {
        let mut next = Vec::new();
        for w in &last {
            for l in [Letter::T, Letter::R, Letter::L] {
                let mut v: Vec<Letter> = w.clone();
                v.push(l);
                next.push(v);
            }
        }
        all.extend(next.iter().cloned());
        last = next;
    }
    all
}

/// Row-major array on the levels × nodes of a field.
struct Array<'a> {
    field: &'a ModeField,
    data: Vec<C64>,
}

impl Array<'_> {
    fn nr(&self) -> usize {
        self.field.n_nodes()
    }

    /// `∂_t` by centred differences, one-sided second order at the ends.
    fn dt(&self) -> Vec<C64> {
        let (nl, nr) = (self.field.n_levels(), self.nr());
        let t = &self.field.times;
        let d = &self.data;
        let mut out = vec![C64::new(0.0, 0.0); d.len()];
        for i in 0..nl {
            let (a, b, c) = if i == 0 {
                (0, 1, 2)
            } else if i + 1 == nl {
                (nl - 3, nl - 2, nl - 1)
            } else {
                (i - 1, i, i + 1)
            };
            let x = t[i];
            let (xa, xb, xc) = (t[a], t[b], t[c]);
            let la = ((x - xb) + (x - xc)) / ((xa - xb) * (xa - xc));
            let lb = ((x - xa) + (x - xc)) / ((xb - xa) * (xb - xc));
            let lc = ((x - xa) + (x - xb)) / ((xc - xa) * (xc - xb));
            for k in 0..nr {
                out[i * nr + k] = d[a * nr + k] * la + d[b * nr + k] * lb + d[c * nr + k] * lc;
            }
        }
        out
    }

    fn r_dr(&self) -> Vec<C64> {
        let nr = self.nr();
        let r = &self.field.grid.nodes;
        let mut out = vec![C64::new(0.0, 0.0); self.data.len()];
        for (src, dst) in self.data.chunks(nr).zip(out.chunks_mut(nr)) {
            self.field.grid.derivative(src, dst);
            for (x, rk) in dst.iter_mut().zip(r) {
                *x *= *rk;
            }
        }
        out
    }

    fn apply(&self, letter: Letter) -> Vec<C64> {
        let nr = self.nr();
        let r = &self.field.grid.nodes;
        match letter {
            Letter::T => {
                let mut d = self.dt();
                for row in d.chunks_mut(nr) {
                    for (x, rk) in row.iter_mut().zip(r) {
                        *x *= *rk;
                    }
                }
                d
            }
            Letter::R => self.r_dr(),
            Letter::L => {
                let mut d = self.data.clone();
                for (row, lam2) in d.chunks_mut(nr).zip(&self.field.lambda_sq) {
                    let lam = lam2.sqrt();
                    row.iter_mut().for_each(|x| *x *= lam);
                }
                d
            }
        }
    }

    fn b_derivative(&self, beta: [u32; 3]) -> Vec<C64> {
        let nr = self.nr();
        let mut cur = Array { field: self.field, data: self.data.clone() };
        for _ in 0..beta[2] {
            cur.data = cur.apply(Letter::L);
        }
        for _ in 0..beta[1] {
            cur.data = cur.apply(Letter::R);
        }
        for _ in 0..beta[0] {
            cur.data = cur.dt();
        }
        debug_assert_eq!(cur.data.len() % nr, 0);
        cur.data
    }
}

/// Lens nodes used by the quadrature: all stored levels but the last, and
/// per level the nodes whose right neighbour is still inside the lens.
fn lens_extent(field: &ModeField) -> Vec<usize> {
    let r = &field.grid.nodes;
    let nl = field.n_levels();
    (0..nl.saturating_sub(1))
        .map(|i| {
            let radius = field.domain.lateral_radius(field.times[i]);
            // nodes 0..m with r[m] ≤ radius, so cells [r_k, r_{k+1}] lie inside
            r.partition_point(|&x| x <= radius).saturating_sub(1)
        })
        .collect()
}

fn squared_integral(field: &ModeField, data: &[C64], extent: &[usize]) -> f64 {
    let nr = field.n_nodes();
    let r = &field.grid.nodes;
    let m = field.n as f64 - 1.0;
    let t = &field.times;
    let per_level: Vec<f64> = extent
        .iter()
        .enumerate()
        .map(|(i, &last)| {
            let row = &data[i * nr..(i + 1) * nr];
            let g = |k: usize| row[k].norm_sqr() * r[k].powf(m);
            (0..last).map(|k| 0.5 * (r[k + 1] - r[k]) * (g(k) + g(k + 1))).sum()
        })
        .collect();
    per_level.windows(2).zip(t.windows(2)).map(|(v, s)| 0.5 * (s[1] - s[0]) * (v[0] + v[1])).sum()
}

fn check_fields(fields: &[ModeField]) -> Result<(), NormsError> {
    let first = fields.first().ok_or(NormsError::Empty)?;
    if first.n_levels() < 3 {
        return Err(NormsError::TooFewLevels);
    }
    for f in &fields[1..] {
        if f.grid != first.grid || f.times != first.times || f.domain != first.domain {
            return Err(NormsError::Mismatch(format!("mode {} differs from mode {}", f.j, first.j)));
        }
    }
    Ok(())
}

fn weighted(field: &ModeField, data: &[C64], ell: f64) -> Vec<C64> {
    let nr = field.n_nodes();
    let w: Vec<f64> = field.grid.nodes.iter().map(|r| r.powf(-ell)).collect();
    data.chunks(nr).flat_map(|row| row.iter().zip(&w).map(|(x, y)| x * y)).collect()
}

/// Squared `H_e^{s,ℓ}` norm of `data` living on `field`'s grid.
fn edge_norm_sq(field: &ModeField, data: &[C64], s: u32, ell: f64) -> f64 {
    let extent = lens_extent(field);
    let u0 = Array { field, data: weighted(field, data, ell) };
    let mut total = 0.0;
    for word in words(s) {
        let mut cur = Array { field, data: u0.data.clone() };
        for &l in word.iter().rev() {
            cur.data = cur.apply(l);
        }
        total += squared_integral(field, &cur.data, &extent);
    }
    total
}

/// `‖u‖_{H_e^{s,ℓ}}` over all modes. Per-mode sums are added in the order
/// given.
pub fn edge_norm(fields: &[ModeField], ord: NormOrders) -> Result<f64, NormsError> {
    ord.validate()?;
    if ord.k != 0 {
        return Err(NormsError::BOrderNotAllowed(ord.k));
    }
    check_fields(fields)?;
    Ok(fields.iter().map(|f| edge_norm_sq(f, &f.values, ord.s, ord.ell)).sum::<f64>().sqrt())
}

/// Multi-indices `(β_t, β_r, β_ω)` with `|β| ≤ k` in graded lexicographic
/// order.
pub fn b_multi_indices(k: u32) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for total in 0..=k {
        for a in (0..=total).rev() {
            for b in (0..=total - a).rev() {
                out.push([a, b, total - a - b]);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    /// `V_b^β = ∂_t^{β₀}(r∂_r)^{β₁}λ^{β₂}`.
    pub beta: [u32; 3],
    pub s: u32,
    pub ell: f64,
    /// Value on the finest grid.
    pub value: f64,
    /// Values on every grid, coarse to fine.
    pub history: Vec<f64>,
    /// Relative change between the two finest grids.
    pub change: Option<f64>,
    /// `None` with a single grid.
    pub stable: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormTable {
    pub rows: Vec<NormRow>,
}

impl NormTable {
    pub fn row(&self, beta: [u32; 3]) -> Option<&NormRow> {
        self.rows.iter().find(|r| r.beta == beta)
    }

    /// Columns `beta,s,ell,value,refinement_flag`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("beta,s,ell,value,refinement_flag\n");
        for r in &self.rows {
            let flag = match r.stable {
                Some(true) => "stable",
                Some(false) => "unstable",
                None => "single_grid",
            };
            let _ = writeln!(out, "\"({},{},{})\",{},{},{:e},{flag}", r.beta[0], r.beta[1], r.beta[2], r.s, r.ell, r.value);
        }
        out
    }
}

/// `‖V_b^β u‖_{H_e^{s,ℓ}}` for `|β| ≤ k` on each refinement (coarse to
/// fine). Entries are flagged unstable when the two finest values differ by
/// more than 10% of the finer one.
pub fn b_regularity_norms(refinements: &[Vec<ModeField>], ord: NormOrders) -> Result<NormTable, NormsError> {
    ord.validate()?;
    if refinements.is_empty() {
        return Err(NormsError::Empty);
    }
    for fields in refinements {
        check_fields(fields)?;
    }
    let betas = b_multi_indices(ord.k);
    let per_grid: Vec<Vec<f64>> = refinements
        .iter()
        .map(|fields| {
            betas
                .iter()
                .map(|&beta| {
                    fields
                        .iter()
                        .map(|f| {
                            let d = Array { field: f, data: f.values.clone() }.b_derivative(beta);
                            edge_norm_sq(f, &d, ord.s, ord.ell)
                        })
                        .sum::<f64>()
                        .sqrt()
                })
                .collect()
        })
        .collect();
    let rows = betas
        .iter()
        .enumerate()
        .map(|(b, &beta)| {
            let history: Vec<f64> = per_grid.iter().map(|g| g[b]).collect();
            let value = *history.last().expect("at least one grid");
            let change = (history.len() >= 2).then(|| {
                let prev = history[history.len() - 2];
                if value == 0.0 && prev == 0.0 {
                    0.0
                } else {
                    (value - prev).abs() / value.abs().max(prev.abs())
                }
            });
            NormRow { beta, s: ord.s, ell: ord.ell, value, history, change, stable: change.map(|c| c <= REFINEMENT_TOLERANCE) }
        })
        .collect();
    Ok(NormTable { rows })
}
