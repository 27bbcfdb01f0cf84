//! Adaptive explicit Runge-Kutta integration (Dormand-Prince 8(5,3)).
//!
//! All systems are real; complex equations are split into real and imaginary
//! parts by the caller, which keeps non-holomorphic right-hand sides (those
//! containing conjugates) valid.

mod tableau;

use crate::error::{Error, Result};

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const ERROR_EXPONENT: f64 = -1.0 / 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step length.
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            max_step: f64::INFINITY,
            max_steps: 5_000_000,
        }
    }
}

impl OdeOptions {
    /// Relative tolerance `tol`, absolute tolerance `tol * 1e-3`.
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol * 1e-3,
            ..Self::default()
        }
    }

    pub fn max_step(mut self, h: f64) -> Self {
        self.max_step = h;
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

impl OdeStats {
    pub fn merge(&mut self, other: OdeStats) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.evaluations += other.evaluations;
    }
}

/// Integrates `y' = f(x, y)` from `(x0, y0)` and returns the state at every
/// position in `stops`, which must be monotone in the direction of
/// integration. Steps land exactly on each stop.
pub fn integrate<const N: usize, F>(
    f: F,
    x0: f64,
    y0: [f64; N],
    stops: &[f64],
    opts: &OdeOptions,
) -> Result<(Vec<[f64; N]>, OdeStats)>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    integrate_capped(f, |_| f64::INFINITY, x0, y0, stops, opts)
}

/// As [`integrate`], with a position-dependent cap on the step length (used to
/// avoid stepping over features of tabulated coefficients).
pub fn integrate_capped<const N: usize, F, C>(
    mut f: F,
    cap: C,
    x0: f64,
    y0: [f64; N],
    stops: &[f64],
    opts: &OdeOptions,
) -> Result<(Vec<[f64; N]>, OdeStats)>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    C: Fn(f64) -> f64,
{
    let mut out = Vec::with_capacity(stops.len());
    let mut stats = OdeStats::default();
    if stops.is_empty() {
        return Ok((out, stats));
    }
    let last = *stops.last().unwrap();
    let direction = if last >= x0 { 1.0 } else { -1.0 };

    let mut x = x0;
    let mut y = y0;
    let mut fx = f(x, &y);
    stats.evaluations += 1;
    let mut h_abs = initial_step(&mut f, x, &y, &fx, direction, opts, &mut stats);

    let mut k = [[0.0; N]; tableau::STAGES];
    for &stop in stops {
        if direction * (stop - x) < 0.0 {
            return Err(Error::InvalidGrid(format!(
                "output positions are not monotone: {stop} after {x}"
            )));
        }
        while direction * (stop - x) > 0.0 {
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(Error::TooManySteps { position: x });
            }
            let min_step = 10.0 * (next_after(x, direction) - x).abs();
            let mut accepted = false;
            let mut rejected_once = false;
            while !accepted {
                h_abs = h_abs.min(opts.max_step).min(cap(x));
                if h_abs < min_step {
                    return Err(Error::StepUnderflow { position: x });
                }
                let mut h = h_abs * direction;
                let mut x_new = x + h;
                let clipped = direction * (x_new - stop) >= 0.0;
                if clipped {
                    x_new = stop;
                    h = x_new - x;
                }
                let y_new = rk_step(&mut f, x, &y, &fx, h, &mut k);
                stats.evaluations += tableau::STAGES - 1;
                let err = error_norm(&k, h, &y, &y_new, opts);
                if err < 1.0 {
                    let mut factor = if err == 0.0 {
                        MAX_FACTOR
                    } else {
                        (SAFETY * err.powf(ERROR_EXPONENT)).min(MAX_FACTOR)
                    };
                    if rejected_once {
                        factor = factor.min(1.0);
                    }
                    // a step shortened to hit a stop says little about the next one
                    if !clipped {
                        h_abs = h.abs() * factor;
                    }
                    x = x_new;
                    y = y_new;
                    fx = f(x, &y);
                    stats.evaluations += 1;
                    stats.accepted += 1;
                    accepted = true;
                    if y.iter().any(|v| !v.is_finite()) {
                        return Err(Error::StepUnderflow { position: x });
                    }
                } else {
                    h_abs = h.abs() * (SAFETY * err.powf(ERROR_EXPONENT)).max(MIN_FACTOR);
                    stats.rejected += 1;
                    rejected_once = true;
                }
            }
        }
        out.push(y);
    }
    Ok((out, stats))
}

fn next_after(x: f64, direction: f64) -> f64 {
    let bits = x.to_bits();
    if x == 0.0 {
        return direction * f64::from_bits(1);
    }
    let up = (x > 0.0) == (direction > 0.0);
    f64::from_bits(if up { bits + 1 } else { bits - 1 })
}

fn rk_step<const N: usize, F>(
    f: &mut F,
    x: f64,
    y: &[f64; N],
    fx: &[f64; N],
    h: f64,
    k: &mut [[f64; N]; tableau::STAGES],
) -> [f64; N]
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    k[0] = *fx;
    for s in 1..tableau::STAGES {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = tableau::A[s][j];
            if a != 0.0 {
                for i in 0..N {
                    ys[i] += h * a * kj[i];
                }
            }
        }
        k[s] = f(x + tableau::C[s] * h, &ys);
    }
    let mut y_new = *y;
    for (s, ks) in k.iter().enumerate() {
        let b = tableau::B[s];
        if b != 0.0 {
            for i in 0..N {
                y_new[i] += h * b * ks[i];
            }
        }
    }
    y_new
}

fn error_norm<const N: usize>(
    k: &[[f64; N]; tableau::STAGES],
    h: f64,
    y: &[f64; N],
    y_new: &[f64; N],
    opts: &OdeOptions,
) -> f64 {
    let mut e5 = 0.0;
    let mut e3 = 0.0;
    for i in 0..N {
        let scale = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
        let mut a = 0.0;
        let mut b = 0.0;
        for (s, ks) in k.iter().enumerate().take(tableau::STAGES) {
            a += tableau::E5[s] * ks[i];
            b += tableau::E3[s] * ks[i];
        }
        e5 += (a / scale).powi(2);
        e3 += (b / scale).powi(2);
    }
    if e5 == 0.0 && e3 == 0.0 {
        return 0.0;
    }
    h.abs() * e5 / ((e5 + 0.01 * e3) * N as f64).sqrt()
}

fn initial_step<const N: usize, F>(
    f: &mut F,
    x: f64,
    y: &[f64; N],
    fx: &[f64; N],
    direction: f64,
    opts: &OdeOptions,
    stats: &mut OdeStats,
) -> f64
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let scale: Vec<f64> = y.iter().map(|v| opts.atol + v.abs() * opts.rtol).collect();
    let rms = |v: &[f64]| -> f64 {
        (v.iter()
            .zip(&scale)
            .map(|(a, s)| (a / s).powi(2))
            .sum::<f64>()
            / N as f64)
            .sqrt()
    };
    let d0 = rms(y);
    let d1 = rms(fx);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let mut y1 = *y;
    for i in 0..N {
        y1[i] += direction * h0 * fx[i];
    }
    let f1 = f(x + direction * h0, &y1);
    stats.evaluations += 1;
    let diff: Vec<f64> = f1.iter().zip(fx).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 8.0)
    };
    (100.0 * h0).min(h1).min(opts.max_step)
}
