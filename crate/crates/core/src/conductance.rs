//! Edge constitutive laws.
//!
//! Every model is described by a potential `G(y)` whose derivative is the edge current,
//! `I = g(y) = G'(y)`, with `y = z_tail - z_head`. Potentials are shifted so that
//! `G(0) = 0`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ConductanceModel {
    /// Ohmic resistor, `I = y / R`.
    Linear { resistance: f64 },
    /// Saturating negative conductance `I = -S(k y, β)` with
    /// `S(ky, β) = (tanh(ky - β) + tanh β) / (1 - tanh² β)`.
    TanhNegative { gain: f64, beta: f64 },
    /// Cubic negative conductance `I = -k (y - c y³)`. Not bounded; meant for local
    /// analysis around `y = 0`. With `c = 0` it is a linear negative conductance.
    CubicNegative { gain: f64, cubic: f64 },
}

/// `ln cosh x` without overflow.
fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl ConductanceModel {
    pub fn is_negative(&self) -> bool {
        !matches!(self, ConductanceModel::Linear { .. })
    }

    pub fn gain(&self) -> Option<f64> {
        match *self {
            ConductanceModel::Linear { .. } => None,
            ConductanceModel::TanhNegative { gain, .. } | ConductanceModel::CubicNegative { gain, .. } => Some(gain),
        }
    }

    pub fn with_gain(self, k: f64) -> Self {
        match self {
            ConductanceModel::TanhNegative { beta, .. } => ConductanceModel::TanhNegative { gain: k, beta },
            ConductanceModel::CubicNegative { cubic, .. } => ConductanceModel::CubicNegative { gain: k, cubic },
            lin => lin,
        }
    }

    /// Edge potential `G(y)`, normalized to `G(0) = 0`.
    pub fn potential(&self, y: f64) -> f64 {
        match *self {
            ConductanceModel::Linear { resistance } => 0.5 * y * y / resistance,
            ConductanceModel::TanhNegative { gain: k, beta } => {
                let t = beta.tanh();
                let d = 1.0 - t * t;
                -(ln_cosh(k * y - beta) - ln_cosh(beta) + k * t * y) / (k * d)
            }
            ConductanceModel::CubicNegative { gain: k, cubic: c } => -k * (0.5 * y * y - 0.25 * c * y.powi(4)),
        }
    }

    /// Edge current `g(y) = G'(y)` flowing from tail to head.
    pub fn current(&self, y: f64) -> f64 {
        match *self {
            ConductanceModel::Linear { resistance } => y / resistance,
            ConductanceModel::TanhNegative { gain, beta } => -saturation(gain, beta, y, 0),
            ConductanceModel::CubicNegative { gain: k, cubic: c } => -k * (y - c * y.powi(3)),
        }
    }

    /// Analytic derivative of the current of order 1, 2 or 3.
    ///
    /// # Panics
    /// If `order` is not 1, 2 or 3.
    pub fn derivative(&self, y: f64, order: u8) -> f64 {
        assert!((1..=3).contains(&order), "derivative order must be 1, 2 or 3");
        match *self {
            ConductanceModel::Linear { resistance } => {
                if order == 1 {
                    1.0 / resistance
                } else {
                    0.0
                }
            }
            ConductanceModel::TanhNegative { gain, beta } => -saturation(gain, beta, y, order),
            ConductanceModel::CubicNegative { gain: k, cubic: c } => match order {
                1 => -k * (1.0 - 3.0 * c * y * y),
                2 => 6.0 * k * c * y,
                _ => 6.0 * k * c,
            },
        }
    }

    /// Normalized negative conductance `g_-` with `I = -k g_-(y)` and `g_-'(0) = 1`.
    /// `None` for linear resistors.
    pub fn normalized(&self) -> Option<NormalizedNegative> {
        match *self {
            ConductanceModel::Linear { .. } => None,
            _ => Some(NormalizedNegative { model: *self }),
        }
    }
}

/// `∂^order/∂y^order S(k y, β)`.
fn saturation(k: f64, beta: f64, y: f64, order: u8) -> f64 {
    let t = beta.tanh();
    let d = 1.0 - t * t;
    let s = (k * y - beta).tanh();
    let sech2 = 1.0 - s * s;
    match order {
        0 => (s + t) / d,
        1 => k * sech2 / d,
        2 => k * k * (-2.0 * s * sech2) / d,
        _ => k.powi(3) * sech2 * (6.0 * s * s - 2.0) / d,
    }
}

/// Gain-free shape of a negative conductance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedNegative {
    model: ConductanceModel,
}

impl NormalizedNegative {
    pub fn value(&self, y: f64) -> f64 {
        let k = self.model.gain().unwrap_or(1.0);
        -self.model.current(y) / k
    }

    /// `g_-^{(order)}(y)` for order 1..=3.
    pub fn derivative(&self, y: f64, order: u8) -> f64 {
        let k = self.model.gain().unwrap_or(1.0);
        -self.model.derivative(y, order) / k
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> impl Iterator<Item = f64> {
        (0..=40).map(|i| -5.0 + 0.25 * i as f64)
    }

    fn models() -> Vec<ConductanceModel> {
        vec![
            ConductanceModel::Linear { resistance: 2.0 },
            ConductanceModel::TanhNegative { gain: 0.5, beta: 0.5 },
            ConductanceModel::TanhNegative { gain: 2.0, beta: -1.0 },
            ConductanceModel::TanhNegative { gain: 1.3, beta: 0.0 },
            ConductanceModel::CubicNegative { gain: 0.8, cubic: 0.3 },
        ]
    }

    #[test]
    fn linear_values() {
        let m = ConductanceModel::Linear { resistance: 1.0 };
        assert_eq!(m.potential(2.0), 2.0);
        assert_eq!(ConductanceModel::Linear { resistance: 2.0 }.current(1.0), 0.5);
        for y in grid() {
            assert_eq!(m.derivative(y, 2), 0.0);
            assert_eq!(m.derivative(y, 3), 0.0);
        }
    }

    #[test]
    fn tanh_normalization_at_zero() {
        for beta in [-1.0, 0.0, 0.3, 2.0] {
            let m = ConductanceModel::TanhNegative { gain: 2.0, beta };
            assert_eq!(m.potential(0.0), 0.0);
            assert!(m.current(0.0).abs() < 1e-15);
            assert_relative_eq!(m.derivative(0.0, 1), -2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn potential_derivative_is_current() {
        let h = 1e-5;
        for m in models() {
            for y in (0..=24).map(|i| -3.0 + 0.25 * i as f64) {
                let fd = (m.potential(y + h) - m.potential(y - h)) / (2.0 * h);
                let cur = m.current(y);
                assert!((fd - cur).abs() <= 1e-6 * cur.abs().max(1e-3), "{m:?} y={y}: {fd} vs {cur}");
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for m in models() {
            for y in grid() {
                for order in 1..=3u8 {
                    let h = 1e-5;
                    let f = |t: f64| if order == 1 { m.current(t) } else { m.derivative(t, order - 1) };
                    let fd = (f(y + h) - f(y - h)) / (2.0 * h);
                    let an = m.derivative(y, order);
                    assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-2), "{m:?} order {order} y={y}: {fd} vs {an}");
                }
            }
        }
    }

    #[test]
    fn normalized_tanh_derivatives_at_zero() {
        // oracle: fifth-order finite differences of g_-(y) = S(ky, β)/k
        for (k, beta) in [(0.5, 0.5), (2.0, -0.3), (1.0, 1.0)] {
            let g = ConductanceModel::TanhNegative { gain: k, beta }.normalized().unwrap();
            let h = 1e-3;
            let f = |y: f64| g.value(y);
            let d2 = (-f(2.0 * h) + 16.0 * f(h) - 30.0 * f(0.0) + 16.0 * f(-h) - f(-2.0 * h)) / (12.0 * h * h);
            let d3 = (f(2.0 * h) - 2.0 * f(h) + 2.0 * f(-h) - f(-2.0 * h)) / (2.0 * h.powi(3));
            assert_relative_eq!(g.derivative(0.0, 1), 1.0, epsilon = 1e-14);
            assert_relative_eq!(g.derivative(0.0, 2), 2.0 * k * beta.tanh(), epsilon = 1e-12);
            assert_relative_eq!(d2, g.derivative(0.0, 2), epsilon = 1e-6, max_relative = 1e-6);
            assert_relative_eq!(d3, g.derivative(0.0, 3), epsilon = 1e-5, max_relative = 1e-5);
        }
        let g0 = ConductanceModel::TanhNegative { gain: 0.7, beta: 0.0 }.normalized().unwrap();
        assert_relative_eq!(g0.derivative(0.0, 3), -2.0 * 0.49, epsilon = 1e-14);
    }

    #[test]
    fn tanh_is_saturating_and_decreasing() {
        let m = ConductanceModel::TanhNegative { gain: 1.5, beta: 0.4 };
        let t = 0.4_f64.tanh();
        let lo = -(1.0 + t) / (1.0 - t * t);
        let hi = (1.0 - t) / (1.0 - t * t);
        let mut prev = f64::INFINITY;
        for y in grid() {
            let i = m.current(y);
            assert!(i < prev);
            assert!(i >= lo - 1e-12 && i <= hi + 1e-12);
            prev = i;
        }
        assert!(m.current(1e3).is_finite() && m.potential(1e3).is_finite());
    }

    #[test]
    fn potential_convexity() {
        for y in grid() {
            assert!(ConductanceModel::Linear { resistance: 3.0 }.derivative(y, 1) > 0.0);
            assert!(ConductanceModel::TanhNegative { gain: 0.9, beta: 0.2 }.derivative(y, 1) < 0.0);
        }
    }
}
