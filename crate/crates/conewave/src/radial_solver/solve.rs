use super::{GridSettings, IVPData, ModeField, ModeStepper, RadialError, RadialGrid, SourceSpec};
use crate::normal_ops::{
    spectral_admissibility_scan, upper_half_circle, OperatorSpec, ScanSettings, ScanVerdict, SpectralScan,
};
use crate::phase_flow::DomainSpec;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Forcing `f_j(t, ·)` written into the node array.
pub type ForcingFn<'a> = dyn Fn(u32, f64, &[f64], &mut [C64]) + Sync + 'a;

/// Runs the spectral scan and fails unless the verdict is admissible.
pub fn admissibility_gate(
    op: &OperatorSpec,
    t0: f64,
    ell: f64,
    settings: &ScanSettings,
) -> Result<SpectralScan, RadialError> {
    let scan = spectral_admissibility_scan(op, t0, ell, &upper_half_circle(settings.samples), settings)?;
    match &scan.verdict {
        ScanVerdict::Admissible => Ok(scan),
        ScanVerdict::NotAdmissible { reason } => Err(RadialError::NotAdmissible(reason.clone())),
        ScanVerdict::Inconclusive { j, sigma, measure } => Err(RadialError::NotAdmissible(format!(
            "inconclusive at j = {j}, σ̂ = {sigma} (measure {measure:e})"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Direction {
    Forward,
    Backward,
}

struct Levels {
    times: Vec<f64>,
    dt_out: f64,
}

fn levels(dom: &DomainSpec, settings: &GridSettings) -> Result<Levels, RadialError> {
    dom.validate()?;
    let span = dom.t_plus - dom.t_minus;
    let out = settings.output_dt.unwrap_or(span / 200.0);
    let count = (span / out).round().max(1.0);
    if count > 1e6 {
        return Err(RadialError::InvalidGrid("more than 10⁶ stored levels".into()));
    }
    let count = count as usize;
    let dt_out = span / count as f64;
    let times = (0..=count).map(|i| dom.t_minus + dt_out * i as f64).collect();
    Ok(Levels { times, dt_out })
}

fn lambda_sq(op: &OperatorSpec, j: u32, times: &[f64]) -> Vec<f64> {
    let (jf, nf) = (j as f64, op.n.as_f64());
    times.iter().map(|&t| jf * (jf + nf - 2.0) / op.c_at(t).powi(2)).collect()
}

fn zero_field(op: &OperatorSpec, j: u32, grid: &RadialGrid, lv: &Levels, dom: &DomainSpec) -> ModeField {
    let mut f = ModeField::zeros(op.n.get(), j, grid.clone(), lv.times.clone(), lambda_sq(op, j, &lv.times), *dom);
    f.b = op.b.re;
    f
}

enum Start<'a> {
    Quiescent,
    Data { u0: &'a [C64], u1: &'a [C64] },
}

#[allow(clippy::too_many_arguments)]
fn run_mode(
    op: &OperatorSpec,
    j: u32,
    dom: &DomainSpec,
    settings: &GridSettings,
    grid: &RadialGrid,
    lv: &Levels,
    direction: Direction,
    start: Start<'_>,
    forcing: &dyn Fn(f64, &mut [C64]),
) -> Result<ModeField, RadialError> {
    let mut st = ModeStepper::new(op, j, grid, settings, (dom.t_minus, dom.t_plus))?;
    let target = match settings.dt {
        Some(dt) => {
            st.set_dt(dt)?;
            dt
        }
        None => st.default_dt(settings.cfl),
    };
    let stride = ((lv.dt_out / target) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let sign = if direction == Direction::Forward { 1.0 } else { -1.0 };
    st.set_dt(sign * lv.dt_out / stride as f64)?;

    let nr = grid.len();
    let nl = lv.times.len();
    let mut field = zero_field(op, j, grid, lv, dom);
    field.gamma = st.gamma();
    field.dt = st.dt().abs();
    field.cfl_number = st.cfl_number();
    let order: Vec<usize> = match direction {
        Direction::Forward => (0..nl).collect(),
        Direction::Backward => (0..nl).rev().collect(),
    };
    let mut f = vec![ZERO; nr];
    let mut vel = vec![ZERO; nr];
    let t_start = lv.times[order[0]];
    forcing(t_start, &mut f);
    let mut first_step = 0;
    match start {
        Start::Quiescent => st.init_quiescent(t_start),
        Start::Data { u0, u1 } => {
            st.init_data(t_start, u0, u1, &f);
            let i = order[0];
            field.values[i * nr..(i + 1) * nr].copy_from_slice(u0);
            field.velocity[i * nr..(i + 1) * nr].copy_from_slice(u1);
            field.source[i * nr..(i + 1) * nr].copy_from_slice(&f);
            first_step = 1;
        }
    }
    let mut steps = first_step;
    for (pos, &i) in order.iter().enumerate() {
        let begin = if pos == 0 { first_step } else { 0 };
        let last = pos + 1 == nl;
        let todo = if last { 1 } else { stride };
        for s in begin..todo {
            let t = st.time();
            forcing(t, &mut f);
            if s == 0 {
                st.current_u(&mut field.values[i * nr..(i + 1) * nr]);
                field.source[i * nr..(i + 1) * nr].copy_from_slice(&f);
                st.advance(&f, Some(&mut vel))?;
                field.velocity[i * nr..(i + 1) * nr].copy_from_slice(&vel);
            } else {
                st.advance(&f, None)?;
            }
            steps += 1;
        }
    }
    field.steps = steps;
    Ok(field)
}

/// Precomputed separable forcing for one mode.
fn spec_forcing(src: &SourceSpec, j: u32, grid: &RadialGrid) -> impl Fn(f64, &mut [C64]) + Sync {
    let terms: Vec<_> = src
        .modes
        .iter()
        .filter(|m| m.j == j)
        .map(|m| (m.time, grid.nodes.iter().map(|&r| m.radial.eval(r)).collect::<Vec<C64>>()))
        .collect();
    move |t, out: &mut [C64]| {
        out.iter_mut().for_each(|x| *x = ZERO);
        for (time, radial) in &terms {
            let a = time.eval(t);
            if a != 0.0 {
                for (o, r) in out.iter_mut().zip(radial) {
                    *o += r * a;
                }
            }
        }
    }
}

fn check_modes(src: &SourceSpec, j_max: u32) -> Result<(), RadialError> {
    if let Some(m) = src.modes.iter().find(|m| m.j > j_max) {
        return Err(RadialError::InvalidSource(format!("source on mode {} above j_max = {j_max}", m.j)));
    }
    Ok(())
}

fn solve_spec(
    op: &OperatorSpec,
    dom: &DomainSpec,
    src: &SourceSpec,
    j_max: u32,
    settings: &GridSettings,
    direction: Direction,
) -> Result<Vec<ModeField>, RadialError> {
    check_modes(src, j_max)?;
    let grid = settings.build_grid(dom)?;
    let lv = levels(dom, settings)?;
    (0..=j_max)
        .into_par_iter()
        .map(|j| {
            if !src.has_mode(j) {
                return Ok(zero_field(op, j, &grid, &lv, dom));
            }
            let forcing = spec_forcing(src, j, &grid);
            run_mode(op, j, dom, settings, &grid, &lv, direction, Start::Quiescent, &forcing)
        })
        .collect()
}

/// Forward solution with zero past on `[t₋, t₊]` for modes `0..=j_max`.
/// Modes without forcing are returned as zero without being stepped.
pub fn forward_solve(
    op: &OperatorSpec,
    dom: &DomainSpec,
    src: &SourceSpec,
    j_max: u32,
    settings: &GridSettings,
) -> Result<Vec<ModeField>, RadialError> {
    src.validate(dom)?;
    solve_spec(op, dom, src, j_max, settings, Direction::Forward)
}

/// Solution vanishing near `t₊`, obtained by stepping backward in time.
pub fn backward_solve(
    op: &OperatorSpec,
    dom: &DomainSpec,
    src: &SourceSpec,
    j_max: u32,
    settings: &GridSettings,
) -> Result<Vec<ModeField>, RadialError> {
    if let Some(b) = src.support() {
        if !(b.t1 < dom.t_plus && b.t0 >= dom.t_minus) {
            return Err(RadialError::InvalidSource(format!(
                "backward forcing must be supported in [t₋, t₊), got [{}, {}]",
                b.t0, b.t1
            )));
        }
    }
    solve_spec(op, dom, src, j_max, settings, Direction::Backward)
}

/// Forward solution for an arbitrary forcing on the listed modes.
pub fn forward_solve_with(
    op: &OperatorSpec,
    dom: &DomainSpec,
    modes: &[u32],
    settings: &GridSettings,
    forcing: &ForcingFn<'_>,
) -> Result<Vec<ModeField>, RadialError> {
    let grid = settings.build_grid(dom)?;
    let lv = levels(dom, settings)?;
    modes
        .par_iter()
        .map(|&j| {
            let f = |t: f64, out: &mut [C64]| forcing(j, t, &grid.nodes, out);
            run_mode(op, j, dom, settings, &grid, &lv, Direction::Forward, Start::Quiescent, &f)
        })
        .collect()
}

/// Solution of `P u = 0` with `u = u₀`, `∂_t u = u₁` at `t₋`, for modes
/// `0..=max j` in `data`. Returns the fields and the smallest decay margin
/// of the data relative to the weight.
pub fn solve_ivp(
    op: &OperatorSpec,
    dom: &DomainSpec,
    data: &IVPData,
    settings: &GridSettings,
) -> Result<(Vec<ModeField>, f64), RadialError> {
    let margin = data.validate(op.n.get())?;
    let grid = settings.build_grid(dom)?;
    let lv = levels(dom, settings)?;
    let j_max = data.modes.iter().map(|m| m.j).max().unwrap_or(0);
    let sample = |p: Option<super::RadialProfile>| -> Vec<C64> {
        grid.nodes.iter().map(|&r| p.map_or(ZERO, |p| p.eval(r))).collect()
    };
    let fields = (0..=j_max)
        .into_par_iter()
        .map(|j| {
            if !data.has_mode(j) {
                return Ok(zero_field(op, j, &grid, &lv, dom));
            }
            let mut u0 = vec![ZERO; grid.len()];
            let mut u1 = vec![ZERO; grid.len()];
            for m in data.modes.iter().filter(|m| m.j == j) {
                for (a, b) in u0.iter_mut().zip(sample(m.u0)) {
                    *a += b;
                }
                for (a, b) in u1.iter_mut().zip(sample(m.u1)) {
                    *a += b;
                }
            }
            let none = |_: f64, out: &mut [C64]| out.iter_mut().for_each(|x| *x = ZERO);
            run_mode(op, j, dom, settings, &grid, &lv, Direction::Forward, Start::Data { u0: &u0, u1: &u1 }, &none)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((fields, margin))
}
