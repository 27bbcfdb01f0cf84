use std::f64::consts::PI;

use num_complex::Complex64;

use super::{Samples, SampledFunction};
use crate::error::{Error, Result};

/// Smooth cutoff: 1 on `[0, h/2]`, 0 on `[h, ∞)`, and a `C^∞` blend of
/// `exp(-1/t)` pieces between.
pub fn smooth_cutoff(omega: f64, halfwidth: f64) -> f64 {
    let t = omega.abs() / halfwidth;
    if t <= 0.5 {
        return 1.0;
    }
    if t >= 1.0 {
        return 0.0;
    }
    let u = 2.0 * (t - 0.5);
    let f = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let (lo, hi) = (f(1.0 - u), f(u));
    lo / (lo + hi)
}

/// Result of splitting `q̂ = q̂(0)·χ + ψ̂` and transforming back.
#[derive(Debug, Clone)]
pub struct Synthesis {
    /// `q(x) = (2/π) ∫ q̂(ω) cos(ωx) dω`
    pub q: SampledFunction,
    /// Cosine transform of the remainder `ψ̂`.
    pub psi: SampledFunction,
    /// `W(x) = ∫_x^∞ ψ = -(2/π) ∫ ψ̂(ω) sin(ωx)/ω dω`
    pub w: SampledFunction,
    /// `ψ̂` on the frequency grid.
    pub psi_hat: SampledFunction,
    pub qhat0: f64,
}

/// Uniform spacing of `grid`, or an error naming the first irregular step.
fn uniform_step(grid: &[f64], what: &str) -> Result<f64> {
    let h = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    for (i, w) in grid.windows(2).enumerate() {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "{what} grid must be uniform; step {} at index {i} differs from {h}",
                w[1] - w[0]
            )));
        }
    }
    Ok(h)
}

/// `∫_a^b t^k e^{ixt} dt` for `k <= 2`.
fn moment(k: usize, a: f64, b: f64, x: f64) -> Complex64 {
    let theta = x.abs() * a.abs().max(b.abs());
    if theta < 1.0 {
        // Σ_n (ix)^n/n! (b^{n+k+1} - a^{n+k+1})/(n+k+1)
        let mut sum = Complex64::new(0.0, 0.0);
        let mut coeff = Complex64::new(1.0, 0.0);
        for n in 0..40 {
            let p = (n + k + 1) as i32;
            sum += coeff * ((b.powi(p) - a.powi(p)) / p as f64);
            // odd terms vanish on symmetric ranges, so bound rather than test
            let bound = coeff.norm() * a.abs().max(b.abs()).powi(p);
            if bound < 1e-18 * sum.norm() {
                break;
            }
            coeff *= Complex64::new(0.0, x) / (n + 1) as f64;
        }
        return sum;
    }
    // e^{ixt} Σ_j (-1)^j k!/(k-j)! t^{k-j} / (ix)^{j+1}
    let ix = Complex64::new(0.0, x);
    let antideriv = |t: f64| {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut fall = 1.0;
        for j in 0..=k {
            acc += (-1f64).powi(j as i32) * fall * t.powi((k - j) as i32) / ix.powi(j as i32 + 1);
            fall *= (k - j) as f64;
        }
        acc * Complex64::from_polar(1.0, x * t)
    };
    antideriv(b) - antideriv(a)
}

/// `∫ f(ω) e^{iωx} dω` over the whole uniform grid, with `f` replaced by its
/// piecewise quadratic interpolant (Filon-type panels). An even number of
/// intervals uses three-node panels throughout; otherwise the last interval
/// reuses the final three nodes.
fn filon(grid: &[f64], f: &[f64], x: f64) -> Complex64 {
    let n = grid.len();
    let h = (grid[n - 1] - grid[0]) / (n - 1) as f64;
    let panel = |c: usize, lo: f64, hi: f64| {
        // quadratic through (−h, f[c−1]), (0, f[c]), (h, f[c+1]) in t = ω − ω_c
        let d1 = (f[c + 1] - f[c - 1]) / (2.0 * h);
        let d2 = (f[c + 1] - 2.0 * f[c] + f[c - 1]) / (2.0 * h * h);
        let m = moment(0, lo, hi, x) * f[c] + moment(1, lo, hi, x) * d1 + moment(2, lo, hi, x) * d2;
        m * Complex64::from_polar(1.0, x * grid[c])
    };
    let mut acc = Complex64::new(0.0, 0.0);
    let intervals = n - 1;
    let mut c = 1;
    while c + 1 < n {
        acc += panel(c, -h, h);
        c += 2;
    }
    if intervals % 2 == 1 {
        acc += if n >= 3 {
            panel(n - 2, 0.0, h)
        } else {
            // two nodes: linear
            let d1 = (f[1] - f[0]) / h;
            (moment(0, 0.0, h, x) * f[0] + moment(1, 0.0, h, x) * d1)
                * Complex64::from_polar(1.0, x * grid[0])
        };
    }
    acc
}

/// `∫ f(x) cos(ωx) dx` over the (uniform) grid of `f`, at each `ω`.
pub fn cos_transform(f: &SampledFunction, freqs: &[f64]) -> Result<Vec<f64>> {
    uniform_step(f.grid(), "sample")?;
    let vals = f.real_values();
    Ok(freqs.iter().map(|&w| filon(f.grid(), &vals, w).re).collect())
}

/// Splits `q̂` sampled on a uniform grid `0 = ω_0 < … < ω_max` (zero beyond)
/// into `q̂(0)·χ + ψ̂` with `χ` the smooth cutoff of half-width
/// `cutoff_halfwidth`, and synthesizes `q`, `ψ` and `W` on `x_grid`.
pub fn cos_transform_synthesize(
    qhat: &SampledFunction,
    cutoff_halfwidth: f64,
    x_grid: &[f64],
) -> Result<Synthesis> {
    if !(cutoff_halfwidth > 0.0 && cutoff_halfwidth.is_finite()) {
        return Err(Error::param(
            "cutoff_halfwidth",
            format!("must be positive, got {cutoff_halfwidth}"),
        ));
    }
    if !matches!(qhat.samples(), Samples::Real(_)) {
        return Err(Error::param("qhat", "cosine transform must be real"));
    }
    let omega = qhat.grid();
    if omega[0] != 0.0 {
        return Err(Error::InvalidGrid(
            "frequency grid must start at 0 so that q̂(0) is a sample".into(),
        ));
    }
    let h = uniform_step(omega, "frequency")?;
    // the blend occupies [h/2, h]; require at least eight samples across it
    if h > cutoff_halfwidth / 16.0 {
        return Err(Error::Undersampled(format!(
            "frequency step {h} cannot resolve a cutoff of half-width {cutoff_halfwidth}; need step <= {}",
            cutoff_halfwidth / 16.0
        )));
    }
    if *omega.last().unwrap() < cutoff_halfwidth {
        return Err(Error::Undersampled(format!(
            "frequency grid ends at {} inside the cutoff (half-width {cutoff_halfwidth})",
            omega.last().unwrap()
        )));
    }
    let qv = qhat.real_values();
    let qhat0 = qv[0];
    let psi_hat: Vec<f64> = omega
        .iter()
        .zip(&qv)
        .map(|(&w, &v)| v - qhat0 * smooth_cutoff(w, cutoff_halfwidth))
        .collect();
    // ψ̂(ω)/ω; the value at 0 is the one-sided derivative of ψ̂
    let mut ratio: Vec<f64> = omega
        .iter()
        .zip(&psi_hat)
        .map(|(&w, &p)| if w > 0.0 { p / w } else { 0.0 })
        .collect();
    if omega.len() >= 4 {
        ratio[0] = 3.0 * ratio[1] - 3.0 * ratio[2] + ratio[3];
    }
    let scale = 2.0 / PI;
    let mut q = Vec::with_capacity(x_grid.len());
    let mut psi = Vec::with_capacity(x_grid.len());
    let mut w = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        q.push(scale * filon(omega, &qv, x).re);
        psi.push(scale * filon(omega, &psi_hat, x).re);
        w.push(-scale * filon(omega, &ratio, x).im);
    }
    Ok(Synthesis {
        q: SampledFunction::new(x_grid.to_vec(), q, None)?,
        psi: SampledFunction::new(x_grid.to_vec(), psi, None)?,
        w: SampledFunction::new(x_grid.to_vec(), w, None)?,
        psi_hat: SampledFunction::new(omega.to_vec(), psi_hat, None)?,
        qhat0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::GridSpec;
    use crate::quad::gl16;
    use approx::assert_abs_diff_eq;

    #[test]
    fn moments_match_quadrature() {
        for &(a, b, x) in &[(-0.1, 0.1, 3.0), (-0.5, 0.5, 40.0), (0.0, 0.3, 7.0), (0.0, 2.0, 0.2)] {
            for k in 0..3 {
                let num: Complex64 = gl16().composite(a, b, 64, |t: f64| {
                    Complex64::from_polar(t.powi(k as i32), x * t)
                });
                assert_abs_diff_eq!((moment(k, a, b, x) - num).norm(), 0.0, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn cutoff_shape() {
        assert_eq!(smooth_cutoff(0.2, 1.0), 1.0);
        assert_eq!(smooth_cutoff(1.0, 1.0), 0.0);
        assert_abs_diff_eq!(smooth_cutoff(0.75, 1.0), 0.5, epsilon = 1e-15);
        let mut prev = 1.0;
        for i in 0..=100 {
            let v = smooth_cutoff(0.5 + i as f64 * 0.005, 1.0);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn gaussian_transform() {
        let omega = GridSpec::uniform(12.0, 0.005).nodes().unwrap();
        let qhat = SampledFunction::new(
            omega.clone(),
            omega.iter().map(|w| (-w * w).exp()).collect(),
            None,
        )
        .unwrap();
        let xs: Vec<f64> = (0..=40).map(|i| i as f64 * 0.5).collect();
        let s = cos_transform_synthesize(&qhat, 1.0, &xs).unwrap();
        for (&x, &v) in xs.iter().zip(&s.q.real_values()) {
            assert_abs_diff_eq!(v, (-x * x / 4.0).exp() / PI.sqrt(), epsilon = 1e-10);
        }
        assert_eq!(s.qhat0, 1.0);
    }

    #[test]
    fn cutoff_input_leaves_nothing() {
        let omega = GridSpec::uniform(3.0, 0.01).nodes().unwrap();
        let chi = omega.iter().map(|&w| smooth_cutoff(w, 2.0)).collect();
        let qhat = SampledFunction::new(omega, chi, None).unwrap();
        let s = cos_transform_synthesize(&qhat, 2.0, &[0.0, 1.0, 5.0]).unwrap();
        assert!(s.psi_hat.real_values().iter().all(|&v| v == 0.0));
        assert!(s.w.real_values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn coarse_frequency_grid_is_rejected() {
        let omega = GridSpec::uniform(3.0, 0.1).nodes().unwrap();
        let qhat = SampledFunction::new(omega.clone(), vec![1.0; omega.len()], None).unwrap();
        assert!(matches!(
            cos_transform_synthesize(&qhat, 1.0, &[0.0]),
            Err(Error::Undersampled(_))
        ));
    }
}
