//! Adaptive Dormand–Prince 5(4) integration with a per-step hook.

use serde::{Deserialize, Serialize};
use std::ops::ControlFlow;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, h_init: 1e-3, h_max: 0.25, max_steps: 200_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum DriveEnd<B> {
    Broke(B),
    ReachedEnd,
    StepLimit,
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `y' = f(s, y)` from `s = 0` to `s_end`. After each accepted step
/// `hook(s, y)` may modify `y` (projection) and decide whether to stop.
pub(crate) fn drive<F, H, B>(
    y0: &[f64],
    s_end: f64,
    ctrl: &StepControl,
    mut f: F,
    mut hook: H,
) -> DriveEnd<B>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    H: FnMut(f64, &mut Vec<f64>) -> ControlFlow<B>,
{
    let dim = y0.len();
    let mut y = y0.to_vec();
    let mut k = vec![vec![0.0; dim]; 7];
    let mut tmp = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    let mut s = 0.0;
    let mut h = ctrl.h_init.min(ctrl.h_max);
    let mut steps = 0usize;
    f(s, &y, &mut k[0]);
    while s < s_end {
        if steps >= ctrl.max_steps {
            return DriveEnd::StepLimit;
        }
        steps += 1;
        h = h.min(s_end - s);
        for stage in 1..7 {
            for i in 0..dim {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(stage) {
                    acc += h * A[stage][j] * kj[i];
                }
                tmp[i] = acc;
            }
            f(s + C[stage] * h, &tmp, &mut k[stage]);
        }
        // stage 7 evaluated at the 5th-order solution
        y_new.copy_from_slice(&tmp);
        let mut err = 0.0;
        for i in 0..dim {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            let sc = ctrl.atol + ctrl.rtol * y[i].abs().max(y_new[i].abs());
            err += (h * e / sc).powi(2);
        }
        let err = (err / dim as f64).sqrt();
        if !err.is_finite() {
            h *= 0.2;
            if h < 1e-300 {
                return DriveEnd::StepLimit;
            }
            continue;
        }
        if err <= 1.0 {
            s += h;
            y.copy_from_slice(&y_new);
            if let ControlFlow::Break(b) = hook(s, &mut y) {
                return DriveEnd::Broke(b);
            }
            f(s, &y, &mut k[0]);
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * fac).min(ctrl.h_max);
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
        }
    }
    DriveEnd::ReachedEnd
}
