use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::special::sine_integral_tail;
use super::{Oscillation, TailModel};

/// Coefficient functions with an exact formula. Sampled functions that carry
/// one evaluate it instead of interpolating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum ClosedForm {
    Zero,
    Constant {
        value: f64,
    },
    /// `c (x + offset)^{-exponent}`
    Power {
        amplitude: f64,
        exponent: f64,
        offset: f64,
    },
    /// `c sin(ωx)/x`, equal to `cω` at the origin.
    SinOverX {
        amplitude: f64,
        frequency: f64,
    },
    /// `c ∫_x^∞ sin(ωs)/s ds`
    SineIntegralTail {
        amplitude: f64,
        frequency: f64,
    },
    /// `(x² + 1)^{-α} sin(x^β)`
    Chirp {
        alpha: f64,
        beta: f64,
    },
    /// `c e^{-rate·x}`
    Exponential {
        amplitude: f64,
        rate: f64,
    },
    /// `c e^{-s x²}`
    Gaussian {
        amplitude: f64,
        scale: f64,
    },
    /// `c erfc(s x)`
    Erfc {
        amplitude: f64,
        scale: f64,
    },
    /// `v · f(x · s)`
    Dilated {
        inner: Box<ClosedForm>,
        x_scale: f64,
        v_scale: f64,
    },
    /// `a² + sign · a'`
    RiccatiSum {
        a: Box<ClosedForm>,
        sign: f64,
    },
}

impl ClosedForm {
    pub fn power(amplitude: f64, exponent: f64, offset: f64) -> Self {
        ClosedForm::Power {
            amplitude,
            exponent,
            offset,
        }
    }

    pub fn dilated(self, x_scale: f64, v_scale: f64) -> Self {
        ClosedForm::Dilated {
            inner: Box::new(self),
            x_scale,
            v_scale,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ClosedForm::Zero => 0.0,
            ClosedForm::Constant { value } => *value,
            ClosedForm::Power {
                amplitude,
                exponent,
                offset,
            } => amplitude * (x + offset).powf(-exponent),
            ClosedForm::SinOverX {
                amplitude,
                frequency,
            } => {
                let t = frequency * x;
                if t.abs() < 1e-4 {
                    amplitude * frequency * (1.0 - t * t / 6.0 + t.powi(4) / 120.0)
                } else {
                    amplitude * t.sin() / x
                }
            }
            ClosedForm::SineIntegralTail {
                amplitude,
                frequency,
            } => amplitude * sine_integral_tail(frequency * x),
            ClosedForm::Chirp { alpha, beta } => {
                (x * x + 1.0).powf(-alpha) * x.abs().powf(*beta).sin()
            }
            ClosedForm::Exponential { amplitude, rate } => amplitude * (-rate * x).exp(),
            ClosedForm::Gaussian { amplitude, scale } => amplitude * (-scale * x * x).exp(),
            ClosedForm::Erfc { amplitude, scale } => amplitude * libm::erfc(scale * x),
            ClosedForm::Dilated {
                inner,
                x_scale,
                v_scale,
            } => v_scale * inner.eval(x * x_scale),
            ClosedForm::RiccatiSum { a, sign } => {
                let v = a.eval(x);
                v * v + sign * a.derivative(x)
            }
        }
    }

    /// Exact first derivative.
    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            ClosedForm::Zero | ClosedForm::Constant { .. } => 0.0,
            ClosedForm::Power {
                amplitude,
                exponent,
                offset,
            } => -exponent * amplitude * (x + offset).powf(-exponent - 1.0),
            ClosedForm::SinOverX {
                amplitude,
                frequency,
            } => {
                let t = frequency * x;
                if t.abs() < 1e-3 {
                    // c ω² (-t/3 + t³/30)
                    amplitude * frequency * frequency * (-t / 3.0 + t.powi(3) / 30.0)
                } else {
                    amplitude * (frequency * x * t.cos() - t.sin()) / (x * x)
                }
            }
            ClosedForm::SineIntegralTail {
                amplitude,
                frequency,
            } => {
                let t = frequency * x;
                if t == 0.0 {
                    -amplitude * frequency
                } else {
                    -amplitude * t.sin() / x
                }
            }
            ClosedForm::Chirp { alpha, beta } => {
                let env = (x * x + 1.0).powf(-alpha);
                let denv = -2.0 * alpha * x * (x * x + 1.0).powf(-alpha - 1.0);
                let phase = x.abs().powf(*beta);
                let dphase = if x == 0.0 {
                    if *beta == 1.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    beta * x.abs().powf(beta - 1.0)
                };
                denv * phase.sin() + env * phase.cos() * dphase
            }
            ClosedForm::Exponential { amplitude, rate } => -rate * amplitude * (-rate * x).exp(),
            ClosedForm::Gaussian { amplitude, scale } => {
                -2.0 * scale * x * amplitude * (-scale * x * x).exp()
            }
            ClosedForm::Erfc { amplitude, scale } => {
                -amplitude * 2.0 * scale / PI.sqrt() * (-(scale * x).powi(2)).exp()
            }
            ClosedForm::Dilated {
                inner,
                x_scale,
                v_scale,
            } => v_scale * x_scale * inner.derivative(x * x_scale),
            ClosedForm::RiccatiSum { a, sign } => {
                // 2 a a' + sign a''; a'' by a centred difference of the exact a'
                let h = 1e-4 * (1.0 + x.abs());
                let d2 = (a.derivative(x + h) - a.derivative(x - h)) / (2.0 * h);
                2.0 * a.eval(x) * a.derivative(x) + sign * d2
            }
        }
    }

    /// Power-law tail description, when the form has one.
    pub fn tail(&self) -> Option<TailModel> {
        match self {
            ClosedForm::Zero => Some(TailModel::power(0.0, 1.0)),
            ClosedForm::Power {
                amplitude,
                exponent,
                offset,
            } => Some(TailModel {
                amplitude: *amplitude,
                exponent: *exponent,
                offset: *offset,
                oscillation: None,
            }),
            ClosedForm::SinOverX {
                amplitude,
                frequency,
            } => Some(TailModel {
                amplitude: *amplitude,
                exponent: 1.0,
                offset: 0.0,
                oscillation: Some(Oscillation {
                    frequency: *frequency,
                    phase: 0.0,
                }),
            }),
            ClosedForm::Dilated {
                inner,
                x_scale,
                v_scale,
            } => inner.tail().map(|t| {
                // v c (s x + o)^{-p} = v c s^{-p} (x + o/s)^{-p}
                TailModel {
                    amplitude: v_scale * t.amplitude * x_scale.powf(-t.exponent),
                    exponent: t.exponent,
                    offset: t.offset / x_scale,
                    oscillation: t.oscillation.map(|o| Oscillation {
                        frequency: o.frequency * x_scale,
                        phase: o.phase,
                    }),
                }
            }),
            ClosedForm::RiccatiSum { a, sign } => match a.tail() {
                Some(TailModel {
                    amplitude,
                    exponent: 1.0,
                    offset,
                    oscillation: None,
                }) => Some(TailModel {
                    // (c/(x+o))² + sign (-c/(x+o)²)
                    amplitude: amplitude * amplitude - sign * amplitude,
                    exponent: 2.0,
                    offset,
                    oscillation: None,
                }),
                _ => None,
            },
            _ => None,
        }
    }

    /// `∫_x^∞` of the form, where a closed expression exists.
    pub fn tail_integral(&self, x: f64) -> Option<f64> {
        match self {
            ClosedForm::Zero => Some(0.0),
            ClosedForm::Power {
                amplitude,
                exponent,
                offset,
            } if *exponent > 1.0 => {
                Some(amplitude * (x + offset).powf(1.0 - exponent) / (exponent - 1.0))
            }
            ClosedForm::SinOverX {
                amplitude,
                frequency,
            } => Some(amplitude * sine_integral_tail(frequency * x)),
            ClosedForm::Exponential { amplitude, rate } if *rate > 0.0 => {
                Some(amplitude * (-rate * x).exp() / rate)
            }
            ClosedForm::Gaussian { amplitude, scale } if *scale > 0.0 => {
                let s = scale.sqrt();
                Some(amplitude * PI.sqrt() / (2.0 * s) * libm::erfc(s * x))
            }
            _ => None,
        }
    }
}
