//! Variable edge regularity orders evaluated as functions of `ξ̂`.

use serde::{Deserialize, Serialize};

/// Shape of an order profile on `[−1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrderProfile {
    Constant { value: f64 },
    /// `high` on `[−1, −1+flat]`, `low` on `[1−flat, 1]`, quintic smoothstep between.
    Step { high: f64, low: f64, flat: f64 },
}

/// An order function `s = f(ξ̂)` with the threshold values it was built for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderFunction {
    pub s_in_value: f64,
    pub s_out_value: f64,
    pub profile: OrderProfile,
}

/// Width of the flat pieces at `ξ̂ = ±1`.
pub const DEFAULT_FLAT: f64 = 0.1;

impl OrderFunction {
    /// A constant order, recording `value` as both threshold values.
    pub fn constant(value: f64) -> Self {
        Self { s_in_value: value, s_out_value: value, profile: OrderProfile::Constant { value } }
    }

    pub fn eval(&self, xi_hat: f64) -> f64 {
        self.eval_with_deriv(xi_hat).0
    }

    pub fn eval_with_deriv(&self, xi_hat: f64) -> (f64, f64) {
        match self.profile {
            OrderProfile::Constant { value } => (value, 0.0),
            OrderProfile::Step { high, low, flat } => {
                let x = xi_hat.clamp(-1.0, 1.0);
                let width = 2.0 - 2.0 * flat;
                let y = ((x + 1.0 - flat) / width).clamp(0.0, 1.0);
                let s = y * y * y * (10.0 - 15.0 * y + 6.0 * y * y);
                let ds = 30.0 * y * y * (1.0 - y) * (1.0 - y) / width;
                (high + (low - high) * s, (low - high) * ds)
            }
        }
    }

    /// Value at the incoming end `ξ̂ = −1`.
    pub fn at_incoming(&self) -> f64 {
        self.eval(-1.0)
    }

    /// Value at the outgoing end `ξ̂ = +1`.
    pub fn at_outgoing(&self) -> f64 {
        self.eval(1.0)
    }
}

/// Builds an order function exceeding `s_in` near `ξ̂ = −1` and below `s_out`
/// near `ξ̂ = +1`, nonincreasing in `ξ̂`. `eps` must be positive.
pub fn build_order_function(s_in: f64, s_out: f64, eps: f64) -> OrderFunction {
    assert!(eps > 0.0, "order margin must be positive");
    let profile = if s_in <= s_out {
        OrderProfile::Constant { value: s_in + eps }
    } else {
        OrderProfile::Step { high: s_in + eps, low: s_out - eps, flat: DEFAULT_FLAT }
    };
    OrderFunction { s_in_value: s_in, s_out_value: s_out, profile }
}
