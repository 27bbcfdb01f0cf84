//! Quadrature, interpolation and extrapolation helpers shared by the
//! numerical modules.

use std::ops::{Add, Mul};
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&t, &w)| (mid + half * t, half * w))
    }

    pub fn integrate<T, F>(&self, a: f64, b: f64, mut f: F) -> T
    where
        T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
        F: FnMut(f64) -> T,
    {
        self.mapped(a, b)
            .fold(T::default(), |acc, (x, w)| acc + f(x) * w)
    }

    /// Composite rule with `panels` equal sub-intervals.
    pub fn composite<T, F>(&self, a: f64, b: f64, panels: usize, mut f: F) -> T
    where
        T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
        F: FnMut(f64) -> T,
    {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let mut acc = T::default();
        for k in 0..panels {
            let lo = a + h * k as f64;
            acc = acc + self.integrate(lo, lo + h, &mut f);
        }
        acc
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Shared 8-point rule.
pub fn gl8() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(8))
}

/// Shared 16-point rule.
pub fn gl16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

/// Index `i` of the interval `[grid[i], grid[i+1]]` containing `x`, clamped
/// to the valid range.
pub fn locate(grid: &[f64], x: f64) -> usize {
    let n = grid.len();
    debug_assert!(n >= 2);
    let p = grid.partition_point(|&g| g <= x);
    p.saturating_sub(1).min(n - 2)
}

/// Four-point Lagrange interpolation around the interval containing `x`.
/// Falls back to linear interpolation on grids with fewer than four nodes.
pub fn interp_cubic<T>(grid: &[f64], values: &[T], x: f64) -> T
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    let n = grid.len();
    match n {
        0 => T::default(),
        1 => values[0],
        2 | 3 => {
            let i = locate(grid, x);
            let t = (x - grid[i]) / (grid[i + 1] - grid[i]);
            values[i] * (1.0 - t) + values[i + 1] * t
        }
        _ => {
            let i = locate(grid, x);
            let start = i.saturating_sub(1).min(n - 4);
            let xs = &grid[start..start + 4];
            let mut acc = T::default();
            for j in 0..4 {
                let mut l = 1.0;
                for m in 0..4 {
                    if m != j {
                        l *= (x - xs[m]) / (xs[j] - xs[m]);
                    }
                }
                acc = acc + values[start + j] * l;
            }
            acc
        }
    }
}

/// Finite-difference weights (Fornberg) for the `order`-th derivative at
/// `x0` using the nodes `xs`.
pub fn fornberg_weights(x0: f64, xs: &[f64], order: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Derivative of samples by five-point (fourth order) finite differences on a
/// possibly non-uniform grid; stencils shift inward at the ends.
pub fn derivative_5pt(grid: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    let n = grid.len();
    if n < 5 {
        return Err(Error::InvalidGrid(format!(
            "five-point derivative stencil needs at least 5 nodes, got {n}"
        )));
    }
    Ok((0..n)
        .map(|i| {
            let start = i.saturating_sub(2).min(n - 5);
            let w = fornberg_weights(grid[i], &grid[start..start + 5], 1);
            w.iter()
                .zip(&values[start..start + 5])
                .map(|(w, v)| w * v)
                .sum()
        })
        .collect())
}

/// `out[i] = ∫_{grid[i]}^{grid[last]} f`, accumulated from the end with an
/// 8-point Gauss rule on every grid interval.
pub fn cumulative_from_end<F: Fn(f64) -> f64>(grid: &[f64], f: F) -> Vec<f64> {
    let n = grid.len();
    let mut out = vec![0.0; n];
    let rule = gl8();
    for i in (0..n.saturating_sub(1)).rev() {
        out[i] = out[i + 1] + rule.integrate(grid[i], grid[i + 1], &f);
    }
    out
}

/// `out[i] = ∫_{grid[0]}^{grid[i]} f`.
pub fn cumulative_from_start<F: Fn(f64) -> f64>(grid: &[f64], f: F) -> Vec<f64> {
    let n = grid.len();
    let mut out = vec![0.0; n];
    let rule = gl8();
    for i in 1..n {
        out[i] = out[i - 1] + rule.integrate(grid[i - 1], grid[i], &f);
    }
    out
}

/// Trapezoid running integral of samples.
pub fn cumulative_trapezoid(grid: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    for i in 1..grid.len() {
        out[i] = out[i - 1] + 0.5 * (grid[i] - grid[i - 1]) * (values[i] + values[i - 1]);
    }
    out
}

/// Polynomial (Neville) extrapolation of `values(h)` to `h = 0`.
pub fn extrapolate_to_zero<T>(hs: &[f64], values: &[T]) -> T
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
{
    let n = hs.len();
    assert!(n >= 1 && values.len() == n);
    let mut p: Vec<T> = values.to_vec();
    for m in 1..n {
        for i in 0..n - m {
            let (hi, hj) = (hs[i], hs[i + m]);
            // P_{i..i+m}(0) = (hj * P_i - hi * P_{i+1}) / (hj - hi)
            p[i] = p[i] * (hj / (hj - hi)) + p[i + 1] * (-hi / (hj - hi));
        }
    }
    p[0]
}

/// Least-squares line through `(xs, ys)`; returns `(slope, intercept)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// `∫_x^∞ c (s+o)^{-p} e^{iνs} ds`.
///
/// Non-oscillatory pieces (`ν = 0`) need `p > 1`. Oscillatory pieces use the
/// integration-by-parts asymptotic series once `|ν|(x+o)` is large enough;
/// closer in, the range up to that point is integrated numerically.
pub fn power_fourier_tail(c: f64, p: f64, o: f64, x: f64, nu: f64) -> Result<Complex64> {
    if c == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if nu.abs() < 1e-14 {
        if p <= 1.0 {
            return Err(Error::DivergentTail { exponent: p });
        }
        return Ok(Complex64::new(c * (x + o).powf(1.0 - p) / (p - 1.0), 0.0));
    }
    // The series terms shrink by (p+k)/(|ν|(x+o)); demand a comfortable margin.
    let start = ((p + 40.0) / nu.abs() - o).max(x);
    let mut head = Complex64::new(0.0, 0.0);
    if start > x {
        let span = start - x;
        let panels = ((span * nu.abs() / 0.5).ceil() as usize).max(4);
        head = gl16().composite(x, start, panels, |s| {
            Complex64::from_polar(c * (s + o).powf(-p), nu * s)
        });
    }
    let y = start + o;
    let inv = Complex64::new(0.0, nu).inv();
    let mut term = -Complex64::from_polar(c * y.powf(-p), nu * start) * inv;
    let mut sum = term;
    let mut k = 0.0;
    loop {
        let next = term * ((p + k) / y) * inv;
        if next.norm() >= term.norm() || next.norm() <= 1e-18 * sum.norm() || k > 200.0 {
            break;
        }
        sum += next;
        term = next;
        k += 1.0;
    }
    Ok(head + sum)
}
