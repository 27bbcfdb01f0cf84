use num_complex::Complex64;
use serde::Serialize;

use crate::coeffs::Profile;
use crate::error::{Error, Result};
use crate::krein::integrate_krein;
use crate::quad;

/// Node spacing for the quadratures.
const FINE_STEP: f64 = 0.005;
/// Spacing of the reported trace.
const TRACE_STEP: f64 = 0.1;
/// Distance beyond `xmax` at which the tail functional is started from 0;
/// the truncation error is below `e^{−40}·sup|A|`.
const TAIL_PAD: f64 = 40.0;
const DECADE_BINS: usize = 10;

#[derive(Debug, Clone, Serialize)]
pub struct OscillationSample {
    pub x: f64,
    /// `e^x ∫_x^∞ e^{−s}A(s) ds`
    pub tail_functional: f64,
    /// `∫_0^x |A·T|`
    pub l1_running: f64,
    /// `|P*(x, i)|`
    pub pstar_abs: f64,
    /// `∫_0^x A²`
    pub l2_running: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OscillationDiagnostics {
    pub xmax: f64,
    pub tail_sup: f64,
    /// `sup |T|` over the last decade `[xmax/10, xmax]`.
    pub tail_sup_last_decade: f64,
    /// Slope of `ln sup|T|` against `ln x` over geometric bins of the last
    /// decade; absent when `T` vanishes on a bin.
    pub tail_decay_exponent: Option<f64>,
    pub l1_total: f64,
    /// `(∫_0^{xmax} − ∫_0^{xmax/10}) |A·T|`
    pub l1_last_decade: f64,
    pub pstar_sup: f64,
    /// `sup_{[0,xmax]}|P*| / sup_{[0,xmax/10]}|P*| − 1`
    pub pstar_last_decade_increase: f64,
    pub l2_total: f64,
    /// Slope of `∫_0^x A²` against `ln x` over the last decade.
    pub l2_log_slope: f64,
    pub trace: Vec<OscillationSample>,
}

/// Diagnostics for a bounded real Krein coefficient `A`: the tail functional
/// `T(x) = e^x ∫_x^∞ e^{−s}A`, the running `L¹` norm of `A·T`, `|P*(x, i)|`
/// from the Krein system at `λ = i`, and the running `L²` norm of `A`, each
/// with a trend over the last decade `[xmax/10, xmax]`.
pub fn oscillating_coefficient_check<P: Profile + ?Sized>(
    a: &P,
    xmax: f64,
    tol: f64,
) -> Result<OscillationDiagnostics> {
    if !(xmax >= 1.0) {
        return Err(Error::param("xmax", format!("must be at least 1, got {xmax}")));
    }
    if !a.is_real() {
        return Err(Error::param("A", "must be real"));
    }
    let end = xmax + TAIL_PAD;
    let n = (end / FINE_STEP).round() as usize;
    let h = end / n as f64;
    let grid: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    let rule = quad::gl16();

    let mut tail = vec![0.0; n + 1];
    let decay = (-h).exp();
    for i in (0..n).rev() {
        let (x0, x1) = (grid[i], grid[i + 1]);
        tail[i] = decay * tail[i + 1] + rule.integrate(x0, x1, |s| (x0 - s).exp() * a.eval(s));
    }
    let av: Vec<f64> = grid.iter().map(|&x| a.eval(x)).collect();
    let prod: Vec<f64> = av.iter().zip(&tail).map(|(a, t)| (a * t).abs()).collect();
    let l1 = quad::cumulative_trapezoid(&grid, &prod);
    let l2 = quad::cumulative_from_start(&grid, |x| a.eval(x).powi(2));

    let m = (xmax / FINE_STEP).round() as usize;
    let decade = ((xmax / 10.0) / h).round() as usize;
    let sup = |v: &[f64], r: std::ops::RangeInclusive<usize>| {
        v[r].iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
    };
    let tail_sup = sup(&tail, 0..=m);
    let tail_sup_last_decade = sup(&tail, decade..=m);
    let bins: Vec<(f64, f64)> = (0..DECADE_BINS)
        .map(|j| {
            let lo = xmax / 10.0 * 10f64.powf(j as f64 / DECADE_BINS as f64);
            let hi = xmax / 10.0 * 10f64.powf((j + 1) as f64 / DECADE_BINS as f64);
            let (i0, i1) = ((lo / h).round() as usize, ((hi / h).round() as usize).min(m));
            ((lo * hi).sqrt().ln(), sup(&tail, i0..=i1))
        })
        .collect();
    let tail_decay_exponent = bins.iter().all(|b| b.1 > 0.0).then(|| {
        let xs: Vec<f64> = bins.iter().map(|b| b.0).collect();
        let ys: Vec<f64> = bins.iter().map(|b| b.1.ln()).collect();
        quad::fit_line(&xs, &ys).0
    });

    let fit_from = decade.max(1);
    let xs: Vec<f64> = grid[fit_from..=m].iter().map(|x| x.ln()).collect();
    let l2_log_slope = quad::fit_line(&xs, &l2[fit_from..=m]).0;

    let trace_n = (xmax / TRACE_STEP).round() as usize;
    let positions: Vec<f64> = (0..=trace_n).map(|i| xmax * i as f64 / trace_n as f64).collect();
    let k = integrate_krein(a, Complex64::new(0.0, 1.0), &positions, tol)?;
    let pstar_abs: Vec<f64> = k.pstar.iter().map(|p| p.norm()).collect();
    let pstar_sup = pstar_abs.iter().copied().fold(0.0, f64::max);
    let early = pstar_abs
        .iter()
        .zip(&positions)
        .filter(|(_, &x)| x <= xmax / 10.0)
        .fold(0.0f64, |acc, (p, _)| acc.max(*p));

    let at = |v: &[f64], x: f64| v[((x / h).round() as usize).min(n)];
    let trace = positions
        .iter()
        .zip(&pstar_abs)
        .map(|(&x, &p)| OscillationSample {
            x,
            tail_functional: at(&tail, x),
            l1_running: at(&l1, x),
            pstar_abs: p,
            l2_running: at(&l2, x),
        })
        .collect();
    Ok(OscillationDiagnostics {
        xmax,
        tail_sup,
        tail_sup_last_decade,
        tail_decay_exponent,
        l1_total: l1[m],
        l1_last_decade: l1[m] - l1[decade],
        pstar_sup,
        pstar_last_decade_increase: pstar_sup / early - 1.0,
        l2_total: l2[m],
        l2_log_slope,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{ClosedForm, FnProfile};
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_coefficient() {
        let d = oscillating_coefficient_check(&ClosedForm::Zero, 20.0, 1e-10).unwrap();
        assert_eq!(d.tail_sup, 0.0);
        assert_eq!(d.l1_total, 0.0);
        assert_eq!(d.l2_total, 0.0);
        assert_eq!(d.pstar_sup, 1.0);
        assert!(d.tail_decay_exponent.is_none());
    }

    #[test]
    fn constant_coefficient_tail_functional() {
        // T ≡ c and ∫A² = c²x
        let d = oscillating_coefficient_check(&FnProfile(|_| 0.3), 10.0, 1e-10).unwrap();
        for s in &d.trace {
            assert_abs_diff_eq!(s.tail_functional, 0.3, epsilon = 1e-12);
            assert_abs_diff_eq!(s.l2_running, 0.09 * s.x, epsilon = 1e-10);
        }
    }

    #[test]
    fn exponential_coefficient_is_square_integrable() {
        let a = FnProfile(|x: f64| -(-x).exp());
        let d = oscillating_coefficient_check(&a, 100.0, 1e-10).unwrap();
        assert_abs_diff_eq!(d.l2_total, 0.5, epsilon = 1e-9);
        assert!(d.l2_log_slope.abs() < 1e-6);
        assert!(d.pstar_last_decade_increase.abs() < 1e-6);
        // T(x) = −e^{−x}/2
        assert_abs_diff_eq!(d.trace[10].tail_functional, -(-1.0f64).exp() / 2.0, epsilon = 1e-12);
    }
}
