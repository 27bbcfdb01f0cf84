//! Fixed-point solution of `a(x) = ∫_x^∞ a(s)² ds − W(x)` by Picard
//! iteration in the weighted space `{g : (x+1)|g(x)| ≤ κ}`, and the potential
//! pair `q = a² + a'`, `q₁ = a² − a'`.

use serde::Serialize;

use crate::coeffs::{ClosedForm, Profile, SampledFunction, TailModel};
use crate::error::{Error, Result};
use crate::quad;

/// Geometric growth of `x + 1` between nodes added beyond the grid of `W`.
const EXTENSION_RATIO: f64 = 1.005;

#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    /// Solution on the grid of `W` extended geometrically to `(x+1) ≥ 10/tol`,
    /// with tail `c/(x+1)` beyond.
    pub a: SampledFunction,
    /// `(1 − √(1 − 4γ))/2`
    pub kappa: f64,
    pub gamma: f64,
    /// Applications of the fixed-point map.
    pub iterations: usize,
    /// Weighted sup distance between the returned iterate and its image.
    pub final_residual: f64,
    /// Successive-difference ratios `ρ(g_{k+1}, g_k)/ρ(g_k, g_{k−1})` above the
    /// rounding floor.
    pub contraction_rates: Vec<f64>,
    /// `ρ(g_{k+1}, g_k)` per iteration.
    pub history: Vec<f64>,
}

impl RiccatiSolution {
    /// `max (x+1)|a(x)|` over the nodes.
    pub fn weighted_sup(&self) -> f64 {
        self.a
            .grid()
            .iter()
            .zip(self.a.real_values())
            .map(|(x, v)| (x + 1.0) * v.abs())
            .fold(0.0, f64::max)
    }

    pub fn max_contraction_rate(&self) -> Option<f64> {
        self.contraction_rates.iter().copied().reduce(f64::max)
    }
}

pub fn kappa(gamma: f64) -> f64 {
    (1.0 - (1.0 - 4.0 * gamma).sqrt()) / 2.0
}

fn extended_grid(base: &[f64], tol: f64) -> Vec<f64> {
    let mut grid = base.to_vec();
    let target = 10.0 / tol;
    let mut y = *grid.last().unwrap() + 1.0;
    while y < target {
        y = (y * EXTENSION_RATIO).min(target);
        grid.push(y - 1.0);
    }
    grid
}

/// `(x+1)·∫_x^∞ g²` at every node, for `g = w/(x+1)` with `w` interpolated
/// cubically and continued as the constant `w_last` beyond the grid.
fn weighted_tail_of_square(grid: &[f64], w: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let rule = quad::gl8();
    let last = w[n - 1];
    let mut acc = last * last / (grid[n - 1] + 1.0);
    let mut out = vec![0.0; n];
    out[n - 1] = acc * (grid[n - 1] + 1.0);
    for i in (0..n - 1).rev() {
        acc += rule.integrate(grid[i], grid[i + 1], |x| {
            let v = quad::interp_cubic(grid, w, x) / (x + 1.0);
            v * v
        });
        out[i] = acc * (grid[i] + 1.0);
    }
    out
}

fn sup_distance(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Solves the Riccati fixed point for `W` under the hypothesis
/// `|W(x)|(x+1) ≤ γ < 1/4`, starting from `g₀ = −W`.
///
/// Iterates are carried as `w = (x+1)g`, in which the metric is a plain sup
/// norm and power-law tails are constant.
pub fn solve_contraction(
    w: &SampledFunction,
    gamma: f64,
    tol: f64,
    max_iter: usize,
) -> Result<RiccatiSolution> {
    if !(gamma > 0.0 && gamma < 0.25) {
        return Err(Error::param(
            "gamma",
            format!("must lie in (0, 1/4), got {gamma}"),
        ));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::param("tol", format!("must lie in (0, 1), got {tol}")));
    }
    let grid = extended_grid(w.grid(), tol);
    let target: Vec<f64> = grid.iter().map(|&x| (x + 1.0) * w.eval(x)).collect();
    let worst = grid
        .iter()
        .zip(&target)
        .map(|(&x, &v)| (x, v.abs()))
        .fold((0.0, 0.0), |acc, p| if p.1 > acc.1 { p } else { acc });
    if worst.1 > gamma * (1.0 + 1e-12) {
        return Err(Error::HypothesisViolated {
            x: worst.0,
            value: worst.1,
            gamma,
        });
    }

    let kappa = kappa(gamma);
    let mut g: Vec<f64> = target.iter().map(|v| -v).collect();
    let mut history = Vec::new();
    let mut rates = Vec::new();
    let floor = 1e-13;
    let mut iterations = 0;
    let final_residual = loop {
        let tail = weighted_tail_of_square(&grid, &g);
        let next: Vec<f64> = tail.iter().zip(&target).map(|(t, v)| t - v).collect();
        iterations += 1;
        let step = sup_distance(&next, &g);
        if let Some(&prev) = history.last() {
            if prev > floor && step > floor {
                rates.push(step / prev);
            }
        }
        history.push(step);
        if step <= tol {
            break step;
        }
        if iterations >= max_iter || !step.is_finite() {
            return Err(Error::NoConvergence {
                iterations,
                residual: step,
                history,
            });
        }
        g = next;
    };

    let c = *g.last().unwrap();
    let values: Vec<f64> = grid.iter().zip(&g).map(|(x, v)| v / (x + 1.0)).collect();
    let a = SampledFunction::new(grid, values, Some(TailModel::power(c, 1.0)))?;
    Ok(RiccatiSolution {
        a,
        kappa,
        gamma,
        iterations,
        final_residual,
        contraction_rates: rates,
        history,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeRule {
    /// Derivative of the closed form carried by `a`.
    Exact,
    /// Five-point finite differences on the grid of `a`.
    FivePoint,
}

#[derive(Debug, Clone)]
pub struct Potentials {
    /// `a² + a'`
    pub q: SampledFunction,
    /// `a² − a'`
    pub q1: SampledFunction,
    pub rule: DerivativeRule,
}

/// `q = a² + a'` and `q₁ = a² − a'` on the grid of `a`.
pub fn potentials_from_a(a: &SampledFunction) -> Result<Potentials> {
    let grid = a.grid().to_vec();
    if grid.len() < 5 {
        return Err(Error::InvalidGrid(format!(
            "derivative stencil needs at least 5 nodes, got {}",
            grid.len()
        )));
    }
    if let Some(form) = a.exact() {
        let pair = |sign: f64| {
            SampledFunction::from_closed(
                grid.clone(),
                ClosedForm::RiccatiSum {
                    a: Box::new(form.clone()),
                    sign,
                },
            )
        };
        return Ok(Potentials {
            q: pair(1.0)?,
            q1: pair(-1.0)?,
            rule: DerivativeRule::Exact,
        });
    }
    let values = a.real_values();
    let da = quad::derivative_5pt(&grid, &values)?;
    let tail = |sign: f64| {
        a.tail_model().and_then(|t| match t.oscillation {
            None if t.exponent == 1.0 => Some(TailModel {
                amplitude: t.amplitude * t.amplitude - sign * t.amplitude,
                exponent: 2.0,
                offset: t.offset,
                oscillation: None,
            }),
            _ => None,
        })
    };
    let build = |sign: f64| {
        SampledFunction::new(
            grid.clone(),
            values.iter().zip(&da).map(|(v, d)| v * v + sign * d).collect(),
            tail(sign),
        )
    };
    Ok(Potentials {
        q: build(1.0)?,
        q1: build(-1.0)?,
        rule: DerivativeRule::FivePoint,
    })
}
