use super::RadialError;
use serde::{Deserialize, Serialize};

/// Largest node count accepted for a single radial grid.
pub const MAX_NODES: usize = 400_000;

/// Radial nodes `r_min·ρ^k` up to the point where the geometric step reaches
/// `dr_outer`, then uniform steps of `dr_outer` out to `r_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub nodes: Vec<f64>,
    pub r_min: f64,
    pub ratio: f64,
    pub dr_outer: f64,
}

impl RadialGrid {
    pub fn graded(r_min: f64, ratio: f64, dr_outer: f64, r_max: f64) -> Result<Self, RadialError> {
        if !(r_min > 0.0) || !(dr_outer > 0.0) || !(r_max > r_min) {
            return Err(RadialError::InvalidGrid(format!(
                "need 0 < r_min < r_max and dr_outer > 0 (r_min={r_min}, r_max={r_max}, dr_outer={dr_outer})"
            )));
        }
        if !(1.0..=1.2).contains(&ratio) {
            return Err(RadialError::InvalidGrid(format!("grading ratio {ratio} outside [1, 1.2]")));
        }
        let mut nodes = vec![r_min];
        let mut r = r_min;
        while ratio > 1.0 && r * (ratio - 1.0) < dr_outer && r < r_max {
            r *= ratio;
            nodes.push(r);
        }
        while r < r_max {
            r += dr_outer;
            nodes.push(r);
            if nodes.len() > MAX_NODES {
                return Err(RadialError::InvalidGrid(format!("more than {MAX_NODES} nodes")));
            }
        }
        Ok(Self { nodes, r_min, ratio, dr_outer })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().expect("grids are nonempty")
    }

    /// Smaller of the two spacings adjacent to node `k`.
    pub fn local_spacing(&self, k: usize) -> f64 {
        let r = &self.nodes;
        let left = if k > 0 { r[k] - r[k - 1] } else { f64::INFINITY };
        let right = if k + 1 < r.len() { r[k + 1] - r[k] } else { f64::INFINITY };
        left.min(right)
    }

    pub fn min_spacing(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// Largest ratio of consecutive spacings.
    pub fn max_step_ratio(&self) -> f64 {
        let h: Vec<f64> = self.nodes.windows(2).map(|w| w[1] - w[0]).collect();
        h.windows(2).map(|w| w[1] / w[0]).fold(1.0, f64::max)
    }

    /// `∂_r g` at every node: three-point nonuniform differences inside,
    /// one-sided second-order at the ends.
    pub fn derivative<T>(&self, g: &[T], out: &mut [T])
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        let r = &self.nodes;
        let n = r.len();
        debug_assert!(g.len() == n && out.len() == n);
        if n < 3 {
            let d = if n == 2 { 1.0 / (r[1] - r[0]) } else { 0.0 };
            for o in out.iter_mut() {
                *o = g[n - 1] * d + g[0] * (-d);
            }
            return;
        }
        for k in 1..n - 1 {
            let (hm, hp) = (r[k] - r[k - 1], r[k + 1] - r[k]);
            let cm = -hp / (hm * (hm + hp));
            let c0 = (hp - hm) / (hm * hp);
            let cp = hm / (hp * (hm + hp));
            out[k] = g[k - 1] * cm + g[k] * c0 + g[k + 1] * cp;
        }
        let edge = |i0: usize, i1: usize, i2: usize| {
            // quadratic through three points, differentiated at the first
            let (x0, x1, x2) = (r[i0], r[i1], r[i2]);
            let c0 = (2.0 * x0 - x1 - x2) / ((x0 - x1) * (x0 - x2));
            let c1 = (x0 - x2) / ((x1 - x0) * (x1 - x2));
            let c2 = (x0 - x1) / ((x2 - x0) * (x2 - x1));
            g[i0] * c0 + g[i1] * c1 + g[i2] * c2
        };
        out[0] = edge(0, 1, 2);
        out[n - 1] = edge(n - 1, n - 2, n - 3);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grading_and_transition() {
        let g = RadialGrid::graded(1e-4, 1.2, 0.01, 3.0).unwrap();
        assert!(g.max_step_ratio() <= 1.2 + 1e-12);
        assert!(g.r_max() >= 3.0);
        assert!((g.nodes[1] / g.nodes[0] - 1.2).abs() < 1e-12);
        let last = g.len() - 1;
        assert!((g.nodes[last] - g.nodes[last - 1] - 0.01).abs() < 1e-12);
    }

    #[test]
    fn rejects_steep_grading() {
        assert!(RadialGrid::graded(1e-4, 1.3, 0.01, 1.0).is_err());
    }

    #[test]
    fn derivative_exact_on_quadratics() {
        let g = RadialGrid::graded(1e-3, 1.15, 0.05, 2.0).unwrap();
        let f: Vec<f64> = g.nodes.iter().map(|r| 3.0 * r * r - r + 2.0).collect();
        let mut d = vec![0.0; g.len()];
        g.derivative(&f, &mut d);
        for (r, d) in g.nodes.iter().zip(&d) {
            assert!((d - (6.0 * r - 1.0)).abs() < 1e-8, "{r} {d}");
        }
    }
}
