use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::coeffs::Profile;
use crate::error::{Error, Result};
use crate::krein::{options, transfer_matrix};
use crate::ode;

/// A dip is a local minimum of the tail ratio below this fraction of the
/// median ratio.
const DIP_FACTOR: f64 = 0.1;
const COARSE_ANGLES: usize = 64;
const GOLDEN_ITERATIONS: usize = 60;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScanPoint {
    pub energy: f64,
    /// Boundary angle minimizing the tail ratio, in `[0, π)`.
    pub alpha_star: f64,
    /// `min_α ∫_{X/2}^X u² / ∫_0^{X/2} u²`
    pub tail_ratio: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Dip {
    pub energy: f64,
    pub tail_ratio: f64,
    /// `tail_ratio / median`
    pub relative_depth: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EmbeddedScan {
    pub xmax: f64,
    pub points: Vec<ScanPoint>,
    pub median: f64,
    pub dips: Vec<Dip>,
}

impl EmbeddedScan {
    /// CSV `E,alpha_star,tail_ratio`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "E,alpha_star,tail_ratio")?;
        for p in &self.points {
            writeln!(w, "{:.10e},{:.10e},{:.10e}", p.energy, p.alpha_star, p.tail_ratio)?;
        }
        Ok(())
    }
}

/// Quadratic forms of the tail ratio, in the basis of solutions with
/// `(u, u') = (1, 0)` and `(0, 1)` at `X/2`, together with the Cauchy data of
/// that basis at 0.
///
/// Anchoring the basis at `X/2` keeps both forms well conditioned: over
/// `[X/2, X]` the propagator grows only by the ratio of the endpoints, and
/// over `[0, X/2]` a solution that decays forward is large, so its near-half
/// mass is computed without cancellation. A basis anchored at 0 instead
/// represents a decaying solution as a near-cancelling combination of two
/// growing ones.
struct TailForms {
    early: [f64; 3],
    late: [f64; 3],
    /// Columns are the two basis solutions' `(u, u')` at 0.
    at_origin: [[f64; 2]; 2],
}

fn tail_forms<P: Profile + ?Sized>(q: &P, energy: f64, xmax: f64, tol: f64) -> Result<TailForms> {
    let (opts, cap) = options(tol, q);
    let rhs = |x: f64, y: &[f64; 7]| {
        let k = q.eval(x) - energy;
        [y[1], k * y[0], y[3], k * y[2], y[0] * y[0], y[0] * y[2], y[2] * y[2]]
    };
    let start = [1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
    let mid = 0.5 * xmax;
    let (back, _) = ode::integrate_capped(rhs, &cap, mid, start, &[0.0], &opts)?;
    let (fwd, _) = ode::integrate_capped(rhs, &cap, mid, start, &[xmax], &opts)?;
    let (b, f) = (back[0], fwd[0]);
    Ok(TailForms {
        // integrated downward, so the accumulated integrals carry a minus sign
        early: [-b[4], -b[5], -b[6]],
        late: [f[4], f[5], f[6]],
        at_origin: [[b[0], b[2]], [b[1], b[3]]],
    })
}

fn form(g: &[f64; 3], beta: f64) -> f64 {
    let (s, c) = beta.sin_cos();
    (c * c * g[0] + 2.0 * c * s * g[1] + s * s * g[2]).max(0.0)
}

/// Minimizes `late/early` over the projective angle `β ∈ [0, π)` of the
/// coefficient vector by a coarse scan followed by golden-section
/// refinement around the best angle.
fn minimize_ratio(early: &[f64; 3], late: &[f64; 3]) -> (f64, f64) {
    let ratio = |a: f64| form(late, a) / form(early, a);
    let step = PI / COARSE_ANGLES as f64;
    let best = (0..COARSE_ANGLES)
        .map(|k| k as f64 * step)
        .min_by(|a, b| ratio(*a).total_cmp(&ratio(*b)))
        .unwrap();
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (best - step, best + step);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (ratio(c), ratio(d));
    for _ in 0..GOLDEN_ITERATIONS {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = ratio(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = ratio(d);
        }
    }
    let beta = 0.5 * (a + b);
    (beta.rem_euclid(PI), ratio(beta))
}

/// Boundary angle `α ∈ [0, π)` with `(u(0), u'(0)) ∝ (cos α, sin α)` of the
/// solution with coefficient angle `β`.
fn boundary_angle(forms: &TailForms, beta: f64) -> f64 {
    let (s, c) = beta.sin_cos();
    let m = &forms.at_origin;
    let u0 = m[0][0] * c + m[0][1] * s;
    let du0 = m[1][0] * c + m[1][1] * s;
    du0.atan2(u0).rem_euclid(PI)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// For each energy, the smallest ratio of the far-half to near-half `L²`
/// mass of `−u'' + qu = Eu` over boundary angles, found by a coarse angle
/// scan refined by golden-section search. A square-integrable
/// solution shows up as a sharp local minimum (a dip) of this profile.
pub fn embedded_scan<P: Profile + ?Sized>(q: &P, energies: &[f64], xmax: f64, tol: f64) -> Result<EmbeddedScan> {
    if let Some(&e) = energies.iter().find(|&&e| !(e > 0.0)) {
        return Err(Error::param("energies", format!("must be positive, got {e}")));
    }
    if !(xmax > 0.0) {
        return Err(Error::param("xmax", format!("must be positive, got {xmax}")));
    }
    let points = energies
        .par_iter()
        .map(|&energy| {
            let forms = tail_forms(q, energy, xmax, tol)?;
            let (beta, tail_ratio) = minimize_ratio(&forms.early, &forms.late);
            let alpha_star = boundary_angle(&forms, beta);
            Ok(ScanPoint {
                energy,
                alpha_star,
                tail_ratio,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = points.iter().map(|p| p.tail_ratio).collect();
    let median = median(&ratios);
    let n = points.len();
    let dips = (0..n)
        .filter(|&i| {
            let r = ratios[i];
            r < DIP_FACTOR * median
                && (i == 0 || r <= ratios[i - 1])
                && (i + 1 == n || r <= ratios[i + 1])
        })
        .map(|i| Dip {
            energy: points[i].energy,
            tail_ratio: ratios[i],
            relative_depth: ratios[i] / median,
        })
        .collect();
    Ok(EmbeddedScan {
        xmax,
        points,
        median,
        dips,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundSample {
    pub lambda: f64,
    /// Largest transfer-matrix norm over `[0, X/2]` and over `[0, X]`.
    pub sup_half: f64,
    pub sup_full: f64,
    pub bounded: bool,
}

/// Growth factor of the transfer-matrix norm over the second half of the
/// range above which a spectral parameter counts as unbounded.
const BOUND_GROWTH: f64 = 1.5;

/// Transfer-matrix norms of `−u'' + qu = λ²u` sampled every `step` up to
/// `xmax` for each `λ`; a parameter is bounded when the supremum over the
/// whole range is at most 1.5 times that over the first half.
pub fn transfer_bound_scan<P: Profile + ?Sized>(
    q: &P,
    lambdas: &[f64],
    xmax: f64,
    step: f64,
    tol: f64,
) -> Result<Vec<BoundSample>> {
    let n = (xmax / step).round().max(2.0) as usize;
    let positions: Vec<f64> = (0..=n).map(|i| xmax * i as f64 / n as f64).collect();
    lambdas
        .par_iter()
        .map(|&lambda| {
            let m = transfer_matrix(q, lambda, &positions, tol)?;
            let sup = |r: std::ops::Range<usize>| m[r].iter().map(|s| s.norm()).fold(0.0, f64::max);
            let sup_half = sup(0..n / 2 + 1);
            let sup_full = sup(0..n + 1);
            Ok(BoundSample {
                lambda,
                sup_half,
                sup_full,
                bounded: sup_full <= BOUND_GROWTH * sup_half,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::ClosedForm;
    use approx::assert_abs_diff_eq;

    #[test]
    fn golden_section_matches_generalized_eigenvalue() {
        let early = [2.0, 0.3, 1.0];
        let late = [0.5, -0.2, 3.0];
        let (_, r) = minimize_ratio(&early, &late);
        // smallest root of det(L − μE) = 0
        let a = early[0] * early[2] - early[1] * early[1];
        let b = -(late[0] * early[2] + late[2] * early[0] - 2.0 * late[1] * early[1]);
        let c = late[0] * late[2] - late[1] * late[1];
        let mu = (-b - (b * b - 4.0 * a * c).sqrt()) / (2.0 * a);
        assert_abs_diff_eq!(r, mu, epsilon = 1e-12);
    }

    #[test]
    fn boundary_angle_of_free_dirichlet_solution() {
        // the Dirichlet solution sin x has Cauchy data (sin 10, cos 10) at X/2
        let forms = tail_forms(&ClosedForm::Zero, 1.0, 20.0, 1e-12).unwrap();
        let beta = 10f64.cos().atan2(10f64.sin());
        assert_abs_diff_eq!(boundary_angle(&forms, beta), PI / 2.0, epsilon = 1e-9);
    }

    #[test]
    fn free_profile_is_flat() {
        let energies: Vec<f64> = (1..=20).map(|i| 0.2 * i as f64).collect();
        let s = embedded_scan(&ClosedForm::Zero, &energies, 100.0, 1e-10).unwrap();
        assert!(s.dips.is_empty());
        for p in &s.points {
            assert!(p.tail_ratio > 0.8 && p.tail_ratio < 1.2, "{p:?}");
        }
    }

    #[test]
    fn free_transfer_matrices_are_bounded() {
        let s = transfer_bound_scan(&ClosedForm::Zero, &[0.7, 1.9], 100.0, 0.1, 1e-10).unwrap();
        assert!(s.iter().all(|b| b.bounded));
    }
}
