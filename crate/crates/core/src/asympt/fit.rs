use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::coeffs::Profile;
use crate::error::{Error, Result};
use crate::krein::transfer_matrix;
use crate::quad;
use crate::spectral::Verdict;

/// Values and derivatives of a real solution on a grid.
#[derive(Debug, Clone)]
pub struct SolutionTrajectory {
    pub positions: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
}

impl SolutionTrajectory {
    /// `∫_0^x u²` at every node (trapezoid).
    pub fn running_square(&self) -> Vec<f64> {
        let sq: Vec<f64> = self.u.iter().map(|v| v * v).collect();
        quad::cumulative_trapezoid(&self.positions, &sq)
    }
}

/// Solutions of `−u'' + qu = λ²u` with `u(0) = cos α`, `u'(0) = sin α` for
/// `α = 0` (first) and `α = π/2` (second).
pub fn solution_pair<P: Profile + ?Sized>(
    q: &P,
    lambda: f64,
    positions: &[f64],
    tol: f64,
) -> Result<(SolutionTrajectory, SolutionTrajectory)> {
    let m = transfer_matrix(q, lambda, positions, tol)?;
    let take = |f: fn(&crate::krein::TransferMatrixSample) -> (f64, f64)| {
        let (u, du) = m.iter().map(f).unzip();
        SolutionTrajectory {
            positions: positions.to_vec(),
            u,
            du,
        }
    };
    Ok((take(|s| s.neumann()), take(|s| s.dirichlet())))
}

#[derive(Debug, Clone, Copy)]
pub struct FitWindow {
    pub lo: f64,
    pub hi: f64,
    pub panels: usize,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PanelFit {
    pub lo: f64,
    pub hi: f64,
    /// Coefficients of `sin(λx)` and `cos(λx)`.
    pub sin_coef: f64,
    pub cos_coef: f64,
    /// Root-mean-square of the panel's own fit residual.
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticFit {
    pub lambda: f64,
    /// Boundary angle `α` of the fitted solution, when known.
    pub alpha: Option<f64>,
    /// `C` and `φ` of `C sin(λx + φ)` from the farthest panel.
    pub amplitude: f64,
    pub phase: f64,
    pub panels: Vec<PanelFit>,
    pub residual_curve: Vec<f64>,
    /// Slope of `ln residual` against `ln x` across panels.
    pub residual_slope: f64,
    pub decreasing: bool,
}

impl AsymptoticFit {
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    /// CSV `lambda,C,phi,last_residual` for a set of fits.
    pub fn write_csv<W: Write>(fits: &[AsymptoticFit], mut w: W) -> Result<()> {
        writeln!(w, "lambda,C,phi,last_residual")?;
        for f in fits {
            writeln!(
                w,
                "{:.10e},{:.10e},{:.10e},{:.10e}",
                f.lambda,
                f.amplitude,
                f.phase,
                f.residual_curve.last().copied().unwrap_or(0.0)
            )?;
        }
        Ok(())
    }
}

fn fit_panel(xs: &[f64], us: &[f64], lambda: f64) -> (f64, f64, f64) {
    let (mut ss, mut sc, mut cc, mut su, mut cu) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&x, &u) in xs.iter().zip(us) {
        let (s, c) = (lambda * x).sin_cos();
        ss += s * s;
        sc += s * c;
        cc += c * c;
        su += s * u;
        cu += c * u;
    }
    let det = ss * cc - sc * sc;
    let a = (su * cc - cu * sc) / det;
    let b = (cu * ss - su * sc) / det;
    let rms = (xs
        .iter()
        .zip(us)
        .map(|(&x, &u)| {
            let (s, c) = (lambda * x).sin_cos();
            (u - a * s - b * c).powi(2)
        })
        .sum::<f64>()
        / xs.len() as f64)
        .sqrt();
    (a, b, rms)
}

/// Least-squares fit of `A sin(λx) + B cos(λx)` on each panel of the window;
/// `C = √(A² + B²)` and `φ = atan2(B, A)` come from the farthest panel.
pub fn fit_sin(positions: &[f64], values: &[f64], lambda: f64, window: FitWindow) -> Result<AsymptoticFit> {
    if !(lambda > 0.0) {
        return Err(Error::param("lambda", format!("must be positive, got {lambda}")));
    }
    if positions.len() != values.len() || positions.is_empty() {
        return Err(Error::InvalidGrid("positions and values differ in length".into()));
    }
    let FitWindow { lo, hi, panels } = window;
    if lo < positions[0] || hi > *positions.last().unwrap() || !(hi > lo) {
        return Err(Error::InvalidGrid(format!(
            "window [{lo}, {hi}] is not inside [{}, {}]",
            positions[0],
            positions.last().unwrap()
        )));
    }
    let period = 2.0 * PI / lambda;
    if hi - lo < 4.0 * period {
        return Err(Error::WindowTooShort(format!(
            "[{lo}, {hi}] spans fewer than 4 periods ({period} each)"
        )));
    }
    if panels == 0 {
        return Err(Error::param("panels", "need at least one panel"));
    }
    let width = (hi - lo) / panels as f64;
    let mut fits = Vec::with_capacity(panels);
    for k in 0..panels {
        let (a, b) = (lo + k as f64 * width, lo + (k + 1) as f64 * width);
        let idx: Vec<usize> = (0..positions.len())
            .filter(|&i| positions[i] >= a && positions[i] <= b)
            .collect();
        if idx.len() < 3 {
            return Err(Error::Undersampled(format!(
                "panel [{a}, {b}] holds {} samples",
                idx.len()
            )));
        }
        let xs: Vec<f64> = idx.iter().map(|&i| positions[i]).collect();
        let us: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
        let (sin_coef, cos_coef, residual) = fit_panel(&xs, &us, lambda);
        fits.push(PanelFit {
            lo: a,
            hi: b,
            sin_coef,
            cos_coef,
            residual,
        });
    }
    let last = fits.last().unwrap();
    let amplitude = last.sin_coef.hypot(last.cos_coef);
    let phase = last.cos_coef.atan2(last.sin_coef).rem_euclid(2.0 * PI);
    let residual_curve: Vec<f64> = fits.iter().map(|p| p.residual).collect();
    let residual_slope = if fits.len() >= 2 && residual_curve.iter().all(|&r| r > 0.0) {
        let xs: Vec<f64> = fits.iter().map(|p| (0.5 * (p.lo + p.hi)).ln()).collect();
        let ys: Vec<f64> = residual_curve.iter().map(|r| r.ln()).collect();
        quad::fit_line(&xs, &ys).0
    } else {
        0.0
    };
    let decreasing = fits.len() >= 2 && residual_slope < 0.0 && residual_curve.last() < residual_curve.first();
    Ok(AsymptoticFit {
        lambda,
        alpha: None,
        amplitude,
        phase,
        panels: fits,
        residual_curve,
        residual_slope,
        decreasing,
    })
}

/// Slope of `ln f` against `ln x` over the trailing decade `[x_end/10,
/// x_end]`.
pub fn growth_exponent(positions: &[f64], values: &[f64]) -> Result<f64> {
    let end = *positions.last().ok_or_else(|| Error::InvalidGrid("empty trajectory".into()))?;
    let start = end / 10.0;
    if !(positions[0] <= start && start > 0.0) {
        return Err(Error::WindowTooShort(format!(
            "[{}, {end}] does not cover a decade",
            positions[0]
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&x, &v) in positions.iter().zip(values) {
        if x >= start {
            if !(v > 0.0) {
                return Err(Error::NonPositive { x, value: v });
            }
            xs.push(x.ln());
            ys.push(v.ln());
        }
    }
    if xs.len() < 2 {
        return Err(Error::Undersampled("fewer than 2 nodes in the trailing decade".into()));
    }
    Ok(quad::fit_line(&xs, &ys).0)
}

/// Widening of the growth-exponent band `[1 − 2κ, 1 + 2κ]` that absorbs the
/// unknown constants at finite `x`.
const BAND_SLACK: f64 = 0.1;
/// Largest change between the slopes of the two halves of the trailing
/// decade for an exponent to count as settled.
const SETTLED_SLOPE: f64 = 0.1;

#[derive(Debug, Clone, Serialize)]
pub struct SubordinacyDiagnostics {
    pub exponent_u: f64,
    pub exponent_v: f64,
    pub band: [f64; 2],
    pub verdict: Verdict,
    pub wronskian: f64,
    /// Largest candidate `ζ` for which `(∫u²)(∫v²)^{−ζ}` trends upward across
    /// the trailing decade.
    pub zeta: Option<f64>,
    /// `ln` of the ratio's growth across the trailing decade at `zeta`.
    pub zeta_divergence: Option<f64>,
    /// Continuity exponent `2γ₁/(γ₁ + γ₂)` of the spectral measure implied by
    /// power-law bounds `x^{γ₁} ≲ ∫u² ≲ x^{γ₂}` on all solutions.
    pub eta: f64,
}

fn half_decade_slopes(x: &[f64], f: &[f64]) -> Result<(f64, f64)> {
    let end = *x.last().unwrap();
    let mid = end / 10f64.sqrt();
    let pick = |lo: f64, hi: f64| -> Result<f64> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = x
            .iter()
            .zip(f)
            .filter(|(&x, _)| x >= lo && x <= hi)
            .map(|(&x, &v)| (x.ln(), v.ln()))
            .unzip();
        if xs.len() < 2 {
            return Err(Error::Undersampled("too few nodes in the trailing decade".into()));
        }
        Ok(quad::fit_line(&xs, &ys).0)
    };
    Ok((pick(end / 10.0, mid)?, pick(mid, end)?))
}

/// Compares the running `L²` norms of two independent solutions with the
/// band `[1 − 2κ, 1 + 2κ]` for their growth exponents.
pub fn subordinacy_sandwich(
    u: &SolutionTrajectory,
    v: &SolutionTrajectory,
    kappa: f64,
) -> Result<SubordinacyDiagnostics> {
    if u.positions != v.positions {
        return Err(Error::InvalidGrid("solutions live on different grids".into()));
    }
    let scale = (u.u[0].hypot(u.du[0]) * v.u[0].hypot(v.du[0])).max(f64::MIN_POSITIVE);
    let wronskian = u.u[0] * v.du[0] - u.du[0] * v.u[0];
    if wronskian.abs() < 1e-10 * scale {
        return Err(Error::DependentSolutions(wronskian));
    }
    let x = &u.positions;
    let fu = u.running_square();
    let fv = v.running_square();
    let exponent_u = growth_exponent(x, &fu)?;
    let exponent_v = growth_exponent(x, &fv)?;
    let band = [1.0 - 2.0 * kappa, 1.0 + 2.0 * kappa];
    let inside = |e: f64| e >= band[0] - BAND_SLACK && e <= band[1] + BAND_SLACK;
    let settled = |f: &[f64]| -> Result<bool> {
        let (a, b) = half_decade_slopes(x, f)?;
        Ok((a - b).abs() <= SETTLED_SLOPE)
    };
    let verdict = if !(settled(&fu)? && settled(&fv)?) {
        Verdict::Undecided
    } else if inside(exponent_u) && inside(exponent_v) {
        Verdict::Hold
    } else {
        Verdict::Fail
    };

    // ratio increasing across 21 geometric points of the trailing decade
    let end = *x.last().unwrap();
    let probes: Vec<(f64, f64)> = (0..=20)
        .map(|k| {
            let p = end / 10.0 * 10f64.powf(k as f64 / 20.0);
            (
                quad::interp_cubic(x, &fu, p).ln(),
                quad::interp_cubic(x, &fv, p).ln(),
            )
        })
        .collect();
    let log_ratio = |zeta: f64| -> Vec<f64> { probes.iter().map(|(a, b)| a - zeta * b).collect() };
    // trend rather than pointwise monotonicity, so bounded oscillations of
    // the running norms do not mask growth
    let log_x: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
    let increasing = |zeta: f64| {
        let r = log_ratio(zeta);
        quad::fit_line(&log_x, &r).0 > 0.0 && r[r.len() - 1] > r[0]
    };
    let zeta = (1..=160)
        .map(|k| k as f64 * 0.025).rfind(|&z| increasing(z));
    let zeta_divergence = zeta.map(|z| {
        let r = log_ratio(z);
        r[r.len() - 1] - r[0]
    });
    let (g1, g2) = (exponent_u.min(exponent_v), exponent_u.max(exponent_v));
    Ok(SubordinacyDiagnostics {
        exponent_u,
        exponent_v,
        band,
        verdict,
        wronskian,
        zeta,
        zeta_divergence,
        eta: 2.0 * g1 / (g1 + g2),
    })
}
