use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

/// `∫_t^∞ sin(u)/u du` for `t >= 0`, i.e. `π/2 - Si(t)`, evaluated without
/// cancellation for large `t`.
pub fn sine_integral_tail(t: f64) -> f64 {
    if t < 0.0 {
        return std::f64::consts::PI - sine_integral_tail(-t);
    }
    if t <= 2.0 {
        FRAC_PI_2 - sine_integral_series(t)
    } else {
        -exponential_integral_imag_axis(t).im
    }
}

/// `Si(t)`.
pub fn sine_integral(t: f64) -> f64 {
    if t.abs() <= 2.0 {
        sine_integral_series(t)
    } else {
        t.signum() * (FRAC_PI_2 - sine_integral_tail(t.abs()))
    }
}

fn sine_integral_series(t: f64) -> f64 {
    let t2 = t * t;
    let mut term = t;
    let mut sum = t;
    let mut k = 1.0;
    loop {
        // term_k = (-1)^k t^{2k+1} / (2k+1)!
        term *= -t2 / ((2.0 * k) * (2.0 * k + 1.0));
        let contrib = term / (2.0 * k + 1.0);
        sum += contrib;
        if contrib.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
        k += 1.0;
    }
    sum
}

/// `E1(it) e^{it}`-type continued fraction (modified Lentz); returns `h` with
/// `Ci(t) = -Re h`, `Si(t) = π/2 + Im h`.
fn exponential_integral_imag_axis(t: f64) -> Complex64 {
    let tiny = 1e-300;
    let mut b = Complex64::new(1.0, t);
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = b.inv();
    let mut h = d;
    for i in 2..10_000 {
        let a = -((i - 1) as f64).powi(2);
        b += 2.0;
        d = (d * a + b).inv();
        c = b + c.inv() * a;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h * Complex64::new(t.cos(), -t.sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::gl16;
    use approx::assert_abs_diff_eq;

    #[test]
    fn matches_quadrature() {
        for &t in &[0.3, 1.0, 1.99, 2.01, 5.0, 17.0] {
            let numeric: f64 = gl16().composite(0.0, t, 64, |u: f64| {
                if u == 0.0 {
                    1.0
                } else {
                    u.sin() / u
                }
            });
            assert_abs_diff_eq!(sine_integral(t), numeric, epsilon = 1e-13);
        }
    }

    #[test]
    fn known_values() {
        assert_abs_diff_eq!(sine_integral(1.0), 0.946_083_070_367_183, epsilon = 1e-14);
        assert_abs_diff_eq!(sine_integral(f64::INFINITY.min(1e8)), FRAC_PI_2, epsilon = 1e-7);
        assert_abs_diff_eq!(sine_integral_tail(0.0), FRAC_PI_2, epsilon = 1e-15);
    }
}
