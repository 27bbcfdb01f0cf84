use num_complex::Complex64;
use serde::Serialize;

use crate::coeffs::Profile;
use crate::error::{Error, Result};
use crate::krein::integrate_q;
use crate::quad;

const MAX_ORDER: usize = 5;

/// Truncated iterated-integral expansion of `Q' = −A e^{−iλx} conj(Q)`.
///
/// With `F_0 = 1` and `F_j(x) = ∫_x^∞ A(s) e^{−iλs} conj(F_{j−1}(s)) ds`, the
/// solution with limit `Q_∞` is `Σ_j c_j F_j` where `c_j = Q_∞` for even `j`
/// and `conj(Q_∞)` for odd `j`.
#[derive(Debug, Clone, Serialize)]
pub struct SeriesEvaluation {
    pub lambda: f64,
    pub order: usize,
    pub positions: Vec<f64>,
    /// `F_j` on `positions`, `j = 0..=order`.
    pub terms: Vec<Vec<Complex64>>,
    /// `sup |F_j|` on `positions`.
    pub term_norms: Vec<f64>,
    /// `Σ_j F_j`, which equals `Q/Q_∞` when `Q_∞` is real.
    pub series_sum: Vec<Complex64>,
    /// `Q_∞` fixed by `Q(0) = 1` for the truncated series.
    pub q_inf: Complex64,
    /// Truncated `Q` with `Q(0) = 1`.
    pub q: Vec<Complex64>,
    /// `∫_0^∞ |A|`
    pub l1_norm: f64,
    /// `Σ_{j=2}^{order} (∫_{x_end}^∞|A|)^j / j!`, bounding the terms dropped
    /// at the truncation point.
    pub truncation_bound: f64,
    /// `max |Q_series − Q_ode|` once [`SeriesEvaluation::compare`] has run.
    pub gap: Option<f64>,
}

impl SeriesEvaluation {
    /// Integrates the phase-stripped equation from `Q(0) = 1` and records the
    /// largest difference from the truncated series on `positions`.
    pub fn compare<P: Profile + ?Sized>(&mut self, a: &P, tol: f64) -> Result<f64> {
        let ode = integrate_q(a, Complex64::new(self.lambda, 0.0), &self.positions, tol)?;
        let gap = ode
            .q
            .iter()
            .zip(&self.q)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        self.gap = Some(gap);
        Ok(gap)
    }

    /// `(∫|A|)^{k+1}/(k+1)!`, the envelope of the first dropped term.
    pub fn remainder_envelope(&self) -> f64 {
        let k = self.order + 1;
        self.l1_norm.powi(k as i32) / (1..=k).map(|j| j as f64).product::<f64>()
    }
}

/// Evaluates the series through `order` on `positions` by recursive
/// quadrature from `x_end` inward on a uniform grid of spacing `step`.
/// Beyond `x_end` the first term uses the tail model of `A` (or zero when
/// there is none); deeper terms are dropped there and bounded instead.
pub fn ck_series_q<P: Profile + ?Sized>(
    a: &P,
    lambda: f64,
    order: usize,
    positions: &[f64],
    x_end: f64,
    step: f64,
) -> Result<SeriesEvaluation> {
    if order > MAX_ORDER {
        return Err(Error::param("order", format!("at most {MAX_ORDER}, got {order}")));
    }
    if !(lambda > 0.0) {
        return Err(Error::param("lambda", format!("must be positive, got {lambda}")));
    }
    let top = positions.iter().copied().fold(0.0, f64::max);
    if positions.iter().any(|&x| x < 0.0) || x_end < top {
        return Err(Error::InvalidGrid(format!(
            "positions must lie in [0, x_end = {x_end}]"
        )));
    }
    let tail = a.tail();
    let (tail_first, tail_l1) = match &tail {
        Some(t) if t.amplitude != 0.0 => {
            if t.exponent <= 1.0 && order >= 1 {
                return Err(Error::DivergentTail { exponent: t.exponent });
            }
            let first = t.fourier_integral_from(x_end, -lambda)?;
            let abs = t.amplitude.abs() * (x_end + t.offset).powf(1.0 - t.exponent) / (t.exponent - 1.0);
            (first, abs)
        }
        _ => (Complex64::new(0.0, 0.0), 0.0),
    };

    let n = (x_end / step).ceil().max(4.0) as usize;
    let h = x_end / n as f64;
    let grid: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    let rule = quad::gl8();
    let kernel = |s: f64| a.eval_complex(s) * Complex64::from_polar(1.0, -lambda * s);

    let mut tables: Vec<Vec<Complex64>> = vec![vec![Complex64::new(1.0, 0.0); n + 1]];
    for j in 1..=order {
        let prev = tables[j - 1].clone();
        let mut cur = vec![Complex64::new(0.0, 0.0); n + 1];
        cur[n] = if j == 1 { tail_first } else { Complex64::new(0.0, 0.0) };
        for i in (0..n).rev() {
            cur[i] = cur[i + 1]
                + rule.integrate(grid[i], grid[i + 1], |s| {
                    kernel(s) * quad::interp_cubic(&grid, &prev, s).conj()
                });
        }
        tables.push(cur);
    }

    let l1_norm = quad::gl8().composite(0.0, x_end, n, |s| a.eval_complex(s).norm()) + tail_l1;
    let truncation_bound = (2..=order)
        .map(|j| tail_l1.powi(j as i32) / (1..=j).map(|k| k as f64).product::<f64>())
        .sum();

    // 1 = Q_∞ S_e(0) + conj(Q_∞) S_o(0), solved as a real 2×2 system
    let at = |x: f64, j: usize| quad::interp_cubic(&grid, &tables[j], x);
    let (mut se, mut so) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for (j, t) in tables.iter().enumerate().take(order + 1) {
        if j % 2 == 0 {
            se += t[0];
        } else {
            so += t[0];
        }
    }
    // (se + so)·re + i(se − so)·im = 1
    let (c1, c2) = (se + so, Complex64::new(0.0, 1.0) * (se - so));
    let det = c1.re * c2.im - c2.re * c1.im;
    let q_inf = Complex64::new(c2.im / det, -c1.im / det);

    let terms: Vec<Vec<Complex64>> = (0..=order)
        .map(|j| positions.iter().map(|&x| at(x, j)).collect())
        .collect();
    let term_norms = terms
        .iter()
        .map(|t| t.iter().map(|v| v.norm()).fold(0.0, f64::max))
        .collect();
    let series_sum = (0..positions.len())
        .map(|i| terms.iter().map(|t| t[i]).sum())
        .collect();
    let q = (0..positions.len())
        .map(|i| {
            terms
                .iter()
                .enumerate()
                .map(|(j, t)| if j % 2 == 0 { q_inf * t[i] } else { q_inf.conj() * t[i] })
                .sum()
        })
        .collect();
    Ok(SeriesEvaluation {
        lambda,
        order,
        positions: positions.to_vec(),
        terms,
        term_norms,
        series_sum,
        q_inf,
        q,
        l1_norm,
        truncation_bound,
        gap: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{ClosedForm, FnProfile};
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_coefficient_gives_one() {
        for order in 0..=3 {
            let s = ck_series_q(&ClosedForm::Zero, 1.0, order, &[0.0, 1.0, 5.0], 10.0, 0.05).unwrap();
            assert!(s.series_sum.iter().all(|v| *v == Complex64::new(1.0, 0.0)));
            assert_eq!(s.q_inf, Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn first_term_of_a_box() {
        let a = FnProfile(|x: f64| if x <= 1.0 { 0.1 } else { 0.0 });
        let s = ck_series_q(&a, 1.0, 1, &[0.0], 1.0, 0.001).unwrap();
        let expected = Complex64::new(1.0 + 0.1 * 1f64.sin(), 0.1 * (1f64.cos() - 1.0));
        assert_abs_diff_eq!((s.series_sum[0] - expected).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn order_three_meets_envelope() {
        let a = ClosedForm::power(0.05, 1.5, 1.0);
        let x: Vec<f64> = (0..=100).map(|i| i as f64).collect();
        for lambda in [0.7, 1.3] {
            let mut s = ck_series_q(&a, lambda, 3, &x, 400.0, 0.02).unwrap();
            let gap = s.compare(&a, 1e-12).unwrap();
            assert!(gap <= s.l1_norm.powi(4) / 24.0, "{lambda}: {gap}");
            for (j, &norm) in s.term_norms.iter().enumerate() {
                let envelope = s.l1_norm.powi(j as i32) / (1..=j).map(|k| k as f64).product::<f64>();
                assert!(norm <= envelope * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn divergent_tail_is_rejected() {
        let a = ClosedForm::power(0.05, 0.9, 1.0);
        assert!(matches!(
            ck_series_q(&a, 1.0, 2, &[0.0], 10.0, 0.1),
            Err(Error::DivergentTail { .. })
        ));
    }
}
