use serde::{Deserialize, Serialize};

use super::SpectralDensityEstimate;
use crate::error::{Error, Result};
use crate::quad;

/// Log-variable span covered by the power-law continuation above and below
/// the sampled window.
const UPPER_SPAN: f64 = 80.0;
const LOWER_SPAN: f64 = 60.0;
/// Nodes used to fit the power-law continuation at each end.
const FIT_NODES: usize = 4;
const STABILITY: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogKind {
    /// `∫_ℝ ln f(λ)/(1+λ²) dλ`; a density given on `λ ≥ 0` only is extended
    /// evenly.
    Int2,
    /// `∫_0^∞ ln f(λ)/(√λ(1+λ)) dλ`
    T1,
}

impl LogKind {
    /// Weight in the variable `t = ln λ`, Jacobian included.
    fn weight(self, t: f64) -> f64 {
        match self {
            LogKind::Int2 => 1.0 / (2.0 * t.cosh()),
            LogKind::T1 => (0.5 * t).exp() / (1.0 + t.exp()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LogIntegral {
    pub kind: LogKind,
    /// Window integral plus the power-law continuation beyond both ends.
    pub value: f64,
    /// Integral over the sampled window alone.
    pub window_value: f64,
    /// Relative change of `value` when the window's upper end is halved.
    pub window_change: f64,
    /// Relative change of `value` when every other node is dropped.
    pub refinement_change: f64,
    pub finite: bool,
}

/// `∫ ℓ(t) w(t) dt` for `ℓ` piecewise linear in `t = ln λ` through the
/// nodal logs. Each hat function is integrated against the weight, so the
/// nodal weights are positive and power-law densities are exact.
fn window_integral(kind: LogKind, t: &[f64], l: &[f64]) -> f64 {
    let rule = quad::gl16();
    let mut acc = 0.0;
    for i in 0..t.len() - 1 {
        let (a, b) = (t[i], t[i + 1]);
        acc += rule.integrate(a, b, |s| {
            let u = (s - a) / (b - a);
            ((1.0 - u) * l[i] + u * l[i + 1]) * kind.weight(s)
        });
    }
    acc
}

/// `∫ (c₀ + c₁ t) w(t) dt` from `from` over `span` (negative spans run
/// downward).
fn linear_tail(kind: LogKind, from: f64, span: f64, slope: f64, intercept: f64) -> f64 {
    let (a, b) = if span > 0.0 { (from, from + span) } else { (from + span, from) };
    quad::gl16().composite(a, b, (span.abs() * 4.0) as usize, |s| {
        (intercept + slope * s) * kind.weight(s)
    })
}

fn branch_value(kind: LogKind, t: &[f64], l: &[f64]) -> (f64, f64) {
    let n = t.len();
    let window = window_integral(kind, t, l);
    let (s_hi, c_hi) = quad::fit_line(&t[n - FIT_NODES..], &l[n - FIT_NODES..]);
    let (s_lo, c_lo) = quad::fit_line(&t[..FIT_NODES], &l[..FIT_NODES]);
    let upper = linear_tail(kind, t[n - 1], UPPER_SPAN, s_hi, c_hi);
    let lower = linear_tail(kind, t[0], -LOWER_SPAN, s_lo, c_lo);
    (window + upper + lower, window)
}

/// `(λ, ln f)` on `λ > 0`, mapped to `t = ln λ`.
struct Branch {
    t: Vec<f64>,
    l: Vec<f64>,
    lambda: Vec<f64>,
}

impl Branch {
    fn value(&self, kind: LogKind) -> (f64, f64) {
        branch_value(kind, &self.t, &self.l)
    }

    fn truncated(&self, lambda_max: f64) -> Option<Branch> {
        let n = self.lambda.iter().take_while(|&&x| x <= lambda_max).count();
        (n > FIT_NODES).then(|| Branch {
            t: self.t[..n].to_vec(),
            l: self.l[..n].to_vec(),
            lambda: self.lambda[..n].to_vec(),
        })
    }

    fn coarsened(&self) -> Option<Branch> {
        let n = self.t.len();
        let mut keep: Vec<usize> = (0..n).step_by(2).collect();
        if *keep.last().unwrap() != n - 1 {
            keep.push(n - 1);
        }
        (keep.len() > FIT_NODES).then(|| Branch {
            t: keep.iter().map(|&i| self.t[i]).collect(),
            l: keep.iter().map(|&i| self.l[i]).collect(),
            lambda: keep.iter().map(|&i| self.lambda[i]).collect(),
        })
    }
}

fn branch(pairs: impl Iterator<Item = (f64, f64)>) -> Result<Option<Branch>> {
    let (lambda, dens): (Vec<f64>, Vec<f64>) = pairs.unzip();
    if lambda.is_empty() {
        return Ok(None);
    }
    if lambda.len() < FIT_NODES + 1 {
        return Err(Error::InvalidGrid(format!(
            "need at least {} nodes on each side of 0, got {}",
            FIT_NODES + 1,
            lambda.len()
        )));
    }
    Ok(Some(Branch {
        t: lambda.iter().map(|x| x.ln()).collect(),
        l: dens.iter().map(|d| d.ln()).collect(),
        lambda,
    }))
}

fn relative_change(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Weighted integral of `ln(density)` over the whole axis of `kind`. The
/// density is continued beyond the sampled window by power laws fitted to
/// the end nodes; `finite` records whether the value is stable (relative
/// change below 1%) under halving the window and under dropping every other
/// node.
pub fn weighted_log_integral(
    density: &SpectralDensityEstimate,
    kind: LogKind,
) -> Result<LogIntegral> {
    let zeros: Vec<f64> = density
        .params
        .iter()
        .zip(&density.density)
        .filter(|(_, d)| !(**d > 0.0))
        .map(|(p, _)| *p)
        .collect();
    if !zeros.is_empty() {
        return Err(Error::DensityZeros { nodes: zeros });
    }
    let pairs = || density.params.iter().copied().zip(density.density.iter().copied());
    let positive = branch(pairs().filter(|p| p.0 > 0.0))?;
    let negative = branch(pairs().filter(|p| p.0 < 0.0).map(|(x, d)| (-x, d)).rev())?;
    if kind == LogKind::T1 && negative.is_some() {
        return Err(Error::InvalidGrid("the half-line integral needs λ ≥ 0".into()));
    }
    let Some(positive) = positive else {
        return Err(Error::InvalidGrid("no positive parameters".into()));
    };

    // (total, window) from the positive and, if present, mirrored branches
    let combine = |pos: &Branch, neg: Option<&Branch>| {
        let (v, w) = pos.value(kind);
        match (kind, neg) {
            (LogKind::Int2, Some(n)) => {
                let (nv, nw) = n.value(kind);
                (v + nv, w + nw)
            }
            (LogKind::Int2, None) => (2.0 * v, 2.0 * w),
            (LogKind::T1, _) => (v, w),
        }
    };
    let (value, window_value) = combine(&positive, negative.as_ref());

    let top = *positive.lambda.last().unwrap();
    let half = positive.truncated(0.5 * top).map(|b| {
        let neg = negative.as_ref().and_then(|n| n.truncated(0.5 * top));
        combine(&b, neg.as_ref()).0
    });
    let coarse = positive.coarsened().map(|b| {
        let neg = negative.as_ref().and_then(Branch::coarsened);
        combine(&b, neg.as_ref()).0
    });
    let (Some(half), Some(coarse)) = (half, coarse) else {
        return Err(Error::InvalidGrid(format!(
            "stability checks need at least {} nodes below half the window",
            FIT_NODES + 1
        )));
    };
    let window_change = relative_change(value, half);
    let refinement_change = relative_change(value, coarse);
    let stable = |a: f64, b: f64| (a - b).abs() <= STABILITY * a.abs().max(b.abs()) + 1e-12;
    Ok(LogIntegral {
        kind,
        value,
        window_value,
        window_change,
        refinement_change,
        finite: stable(value, half) && stable(value, coarse),
    })
}
