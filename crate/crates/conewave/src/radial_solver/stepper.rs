use super::{GridSettings, RadialError, RadialGrid, Substitution};
use crate::normal_ops::{indicial_roots, OperatorSpec};
use crate::tfun::{ComplexFn, RealFn};
use num_complex::Complex64 as C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Norms below this are not used to judge growth.
const GROWTH_FLOOR: f64 = 1e-100;

/// Two-level leapfrog state for one mode.
///
/// `w^{n+1}(1+α) = 2wⁿ − (1−α)w^{n−1} + Δt²(A wⁿ + R/r² wⁿ + r^{−γ}fⁿ)`
/// with `α = a₀Δt/(2r)` and `A` the finite-volume operator
/// `r^{−M}∂_r(r^M ∂_r)`, `M = n−1+b+2γ`. The first cell extends to `r = 0`
/// where the flux vanishes; beyond the last node `w = 0`.
#[derive(Debug, Clone)]
pub struct ModeStepper {
    j: u32,
    gamma: f64,
    /// `γ(γ + n − 2 + b)`
    shift: f64,
    angular: f64,
    r: Vec<f64>,
    up: Vec<f64>,
    down: Vec<f64>,
    inv_r2: Vec<f64>,
    r_gamma: Vec<f64>,
    v0: ComplexFn,
    a0: ComplexFn,
    c: RealFn,
    limit: f64,
    h_min: f64,
    dt: f64,
    t: f64,
    prev: Vec<C64>,
    cur: Vec<C64>,
    next: Vec<C64>,
    blowup_factor: f64,
}

impl ModeStepper {
    /// `span` is the time interval over which the coefficients are sampled
    /// for the stability bound.
    pub fn new(
        op: &OperatorSpec,
        j: u32,
        grid: &RadialGrid,
        settings: &GridSettings,
        span: (f64, f64),
    ) -> Result<Self, RadialError> {
        op.validate()?;
        if !op.is_scalar() {
            return Err(RadialError::Unsupported("the solver handles the scalar variant only".into()));
        }
        if op.b.im != 0.0 {
            return Err(RadialError::Unsupported("complex b is not supported by the solver".into()));
        }
        let n = op.n.as_f64();
        let m = n - 1.0 + op.b.re;
        let t_ref = settings.ref_time.unwrap_or(0.5 * (span.0 + span.1));
        let gamma = match settings.substitution {
            Substitution::Recessive => indicial_roots(op, t_ref, j).plus.re,
            Substitution::Off => 0.0,
        };
        let big_m = m + 2.0 * gamma;
        if !(big_m > -1.0) {
            return Err(RadialError::Unsupported(format!("cell measure r^{big_m} is not integrable at 0")));
        }
        let r = grid.nodes.clone();
        let nn = r.len();
        if nn < 3 {
            return Err(RadialError::InvalidGrid("need at least three nodes".into()));
        }
        // faces: 0, midpoints, and half a step past the last node
        let mut faces = Vec::with_capacity(nn + 1);
        faces.push(0.0);
        for k in 0..nn - 1 {
            faces.push(0.5 * (r[k] + r[k + 1]));
        }
        let h_last = r[nn - 1] - r[nn - 2];
        faces.push(r[nn - 1] + 0.5 * h_last);
        let p = big_m + 1.0;
        let mut up = vec![0.0; nn];
        let mut down = vec![0.0; nn];
        for k in 0..nn {
            let (fm, fp) = (faces[k], faces[k + 1]);
            let q = fm / fp;
            // vol = fp^{p}(1 − q^{p})/p, written without forming r^M
            let one_minus = if q == 0.0 { 1.0 } else { -(p * q.ln()).exp_m1() };
            let hp = if k + 1 < nn { r[k + 1] - r[k] } else { h_last };
            up[k] = p / (hp * fp * one_minus);
            if k > 0 {
                let hm = r[k] - r[k - 1];
                down[k] = p * q.powf(big_m) / (hm * fp * one_minus);
            }
        }
        let inv_r2: Vec<f64> = r.iter().map(|x| 1.0 / (x * x)).collect();
        let r_gamma: Vec<f64> = r.iter().map(|x| x.powf(gamma)).collect();
        let jf = j as f64;
        let mut me = Self {
            j,
            gamma,
            shift: gamma * (gamma + m - 1.0),
            angular: jf * (jf + n - 2.0),
            r,
            up,
            down,
            inv_r2,
            r_gamma,
            v0: op.v0.clone(),
            a0: op.a0.clone(),
            c: op.c.clone(),
            limit: 0.0,
            h_min: grid.min_spacing(),
            dt: 0.0,
            t: span.0,
            prev: vec![ZERO; nn],
            cur: vec![ZERO; nn],
            next: vec![ZERO; nn],
            blowup_factor: settings.blowup_factor,
        };
        let mut r_max = 0.0f64;
        for i in 0..=32 {
            let t = span.0 + (span.1 - span.0) * i as f64 / 32.0;
            r_max = r_max.max(me.potential(t).norm());
        }
        let gersh = (0..nn).map(|k| 2.0 * (me.up[k] + me.down[k]) + r_max * me.inv_r2[k]).fold(0.0, f64::max);
        me.limit = 2.0 / gersh.sqrt();
        Ok(me)
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    /// Exponent of the substitution `u = r^γ w`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Largest stable `|Δt|` for the undamped scheme.
    pub fn stability_limit(&self) -> f64 {
        self.limit
    }

    /// Largest stable step not exceeding `cfl·min Δr`.
    pub fn default_dt(&self, cfl: f64) -> f64 {
        (cfl * self.h_min).min(0.9 * self.limit)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn cfl_number(&self) -> f64 {
        self.dt.abs() / self.h_min
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Sets a signed step; negative steps run backward in time.
    pub fn set_dt(&mut self, dt: f64) -> Result<(), RadialError> {
        let cfl = dt.abs() / self.h_min;
        if !(dt != 0.0 && dt.is_finite()) || dt.abs() > self.limit {
            return Err(RadialError::CFLViolation { j: self.j, dt: dt.abs(), limit: self.limit, cfl });
        }
        self.dt = dt;
        Ok(())
    }

    /// `γ(γ+n−2+b) − λ_j²(t) − V₀(t)`, the coefficient of `r⁻²w`.
    fn potential(&self, t: f64) -> C64 {
        let c = self.c.eval(t);
        C64::new(self.shift - self.angular / (c * c), 0.0) - self.v0.eval(t)
    }

    /// Zero state at time `t` (quiescent past).
    pub fn init_quiescent(&mut self, t: f64) {
        self.t = t;
        self.prev.iter_mut().for_each(|x| *x = ZERO);
        self.cur.iter_mut().for_each(|x| *x = ZERO);
    }

    /// Taylor start from `u(t) = u0`, `u_t(t) = u1` with forcing `f0` at `t`.
    /// Leaves the state at `t + Δt`.
    pub fn init_data(&mut self, t: f64, u0: &[C64], u1: &[C64], f0: &[C64]) {
        let nn = self.r.len();
        let pot = self.potential(t);
        let a0 = self.a0.eval(t);
        let dt = self.dt;
        for k in 0..nn {
            self.prev[k] = u0[k] / self.r_gamma[k];
        }
        for k in 0..nn {
            let w = self.prev[k];
            let v = u1[k] / self.r_gamma[k];
            let acc = self.laplace(&self.prev, k) + pot * self.inv_r2[k] * w - a0 / self.r[k] * v
                + f0[k] / self.r_gamma[k];
            self.cur[k] = w + v * dt + acc * (0.5 * dt * dt);
        }
        self.t = t + dt;
    }

    #[inline]
    fn laplace(&self, w: &[C64], k: usize) -> C64 {
        let right = if k + 1 < w.len() { w[k + 1] } else { ZERO };
        let mut acc = (right - w[k]) * self.up[k];
        if k > 0 {
            acc -= (w[k] - w[k - 1]) * self.down[k];
        }
        acc
    }

    /// Advances one step with forcing `f` (in `u` variables) at the current
    /// time. If `velocity` is given it receives `u_t` at the current time.
    pub fn advance(&mut self, f: &[C64], velocity: Option<&mut [C64]>) -> Result<(), RadialError> {
        let nn = self.r.len();
        let dt = self.dt;
        let dt2 = dt * dt;
        let pot = self.potential(self.t);
        let a0 = self.a0.eval(self.t);
        let (mut norm_prev, mut norm_cur, mut norm_next, mut norm_g) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for k in 0..nn {
            let w = self.cur[k];
            let g = f[k] / self.r_gamma[k];
            let alpha = a0 * (0.5 * dt / self.r[k]);
            let rhs = w * 2.0 - self.prev[k] * (1.0 - alpha) + (self.laplace(&self.cur, k) + pot * self.inv_r2[k] * w + g) * dt2;
            let nx = rhs / (1.0 + alpha);
            self.next[k] = nx;
            norm_prev = norm_prev.max(self.prev[k].norm_sqr());
            norm_cur = norm_cur.max(w.norm_sqr());
            norm_next = norm_next.max(nx.norm_sqr());
            norm_g = norm_g.max(g.norm_sqr());
        }
        if !norm_next.is_finite() {
            return Err(RadialError::BlowUp { j: self.j, t: self.t + dt, growth: f64::INFINITY });
        }
        // a stable step stays within a fixed multiple of the previous levels
        // plus the forcing increment
        let bound = norm_cur.sqrt() + norm_prev.sqrt() + dt2 * norm_g.sqrt();
        let norm_next = norm_next.sqrt();
        if bound > GROWTH_FLOOR && norm_next > self.blowup_factor * bound {
            return Err(RadialError::BlowUp { j: self.j, t: self.t + dt, growth: norm_next / bound });
        }
        if let Some(v) = velocity {
            let inv = 0.5 / dt;
            for k in 0..nn {
                v[k] = (self.next[k] - self.prev[k]) * (inv * self.r_gamma[k]);
            }
        }
        std::mem::swap(&mut self.prev, &mut self.cur);
        std::mem::swap(&mut self.cur, &mut self.next);
        self.t += dt;
        Ok(())
    }

    /// `u` at the current time.
    pub fn current_u(&self, out: &mut [C64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.cur[k] * self.r_gamma[k];
        }
    }
}

/// Advances `stepper` by one leapfrog step under forcing `source`.
pub fn step_mode(stepper: &mut ModeStepper, source: &[C64]) -> Result<(), RadialError> {
    stepper.advance(source, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(op: &OperatorSpec, j: u32) -> (RadialGrid, ModeStepper) {
        let grid = RadialGrid::graded(1e-3, 1.2, 0.05, 4.0).unwrap();
        let st = ModeStepper::new(op, j, &grid, &GridSettings::default(), (0.0, 1.0)).unwrap();
        (grid, st)
    }

    #[test]
    fn zero_stays_zero() {
        let op = OperatorSpec::free(3).unwrap();
        let (grid, mut st) = setup(&op, 0);
        st.set_dt(st.default_dt(0.5)).unwrap();
        st.init_quiescent(0.0);
        let f = vec![ZERO; grid.len()];
        for _ in 0..100 {
            step_mode(&mut st, &f).unwrap();
        }
        let mut u = vec![ZERO; grid.len()];
        st.current_u(&mut u);
        assert!(u.iter().all(|x| *x == ZERO));
    }

    #[test]
    fn oversize_step_rejected() {
        let op = OperatorSpec::free(3).unwrap();
        let (_, mut st) = setup(&op, 0);
        let lim = st.stability_limit();
        assert!(matches!(st.set_dt(1.5 * lim), Err(RadialError::CFLViolation { .. })));
        assert!(st.set_dt(-0.5 * lim).is_ok());
    }

    #[test]
    fn operator_annihilates_constants_in_w() {
        // A has zero row sums except at the Dirichlet end
        let op = OperatorSpec::scalar(3, C64::new(2.0, 0.0), ZERO).unwrap();
        let (grid, st) = setup(&op, 0);
        assert!((st.gamma() - 1.0).abs() < 1e-14);
        let w = vec![C64::new(1.0, 0.0); grid.len()];
        for k in 0..grid.len() - 1 {
            assert!(st.laplace(&w, k).norm() < 1e-9 * st.up[k].max(1.0));
        }
        assert!(st.potential(0.0).norm() < 1e-14);
    }

    #[test]
    fn unstable_growth_detected() {
        let op = OperatorSpec::free(3).unwrap();
        let (grid, mut st) = setup(&op, 0);
        st.dt = 3.0 * st.stability_limit();
        st.init_quiescent(0.0);
        let mut f: Vec<C64> = grid.nodes.iter().map(|r| C64::new((-(r - 2.0) * (r - 2.0)).exp(), 0.0)).collect();
        let mut err = None;
        for i in 0..2000 {
            if let Err(e) = step_mode(&mut st, &f) {
                err = Some(e);
                break;
            }
            if i == 0 {
                f.iter_mut().for_each(|x| *x = ZERO);
            }
        }
        assert!(matches!(err, Some(RadialError::BlowUp { .. })));
    }
}
