use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DensityMethod, PointMass, SpectralDensityEstimate};
use crate::coeffs::Profile;
use crate::error::{Error, Result};
use crate::krein::options;
use crate::ode;
use crate::quad;

/// Log-log slope of the density against `ε` at or below which an energy is
/// flagged as an atom (an atom gives slope −1).
const ATOM_SLOPE: f64 = -0.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeylOptions {
    /// Smallest admissible energy.
    pub floor: f64,
    pub tol: f64,
    /// Length of the inward integration segments after which the state is
    /// renormalized.
    pub segment: f64,
}

impl Default for WeylOptions {
    fn default() -> Self {
        Self {
            floor: 0.05,
            tol: 1e-10,
            segment: 50.0,
        }
    }
}

/// `m(z) = u'(0)/u(0)` for the solution of `−u'' + qu = zu` seeded as the
/// free decaying wave `e^{i√z x}` at `xmax`.
fn weyl_m<P: Profile + ?Sized>(q: &P, z: Complex64, xmax: f64, opts: &WeylOptions) -> Result<Complex64> {
    let k = z.sqrt();
    let seed = Complex64::new(0.0, 1.0) * k;
    let (ode_opts, cap) = options(opts.tol, q);
    let mut state = [1.0, 0.0, seed.re, seed.im];
    let mut x = xmax;
    while x > 0.0 {
        let next = (x - opts.segment).max(0.0);
        let (ys, _) = ode::integrate_capped(
            |s, y: &[f64; 4]| {
                let u = Complex64::new(y[0], y[1]);
                let d2 = (q.eval(s) - z) * u;
                [y[2], y[3], d2.re, d2.im]
            },
            &cap,
            x,
            state,
            &[next],
            &ode_opts,
        )?;
        let y = ys[0];
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::Overflow { energy: z.re });
        }
        state = y.map(|v| v / norm);
        x = next;
    }
    let u = Complex64::new(state[0], state[1]);
    let du = Complex64::new(state[2], state[3]);
    let m = du / u;
    if !m.is_finite() {
        return Err(Error::Overflow { energy: z.re });
    }
    Ok(m)
}

struct EnergyResult {
    density: f64,
    atom: Option<PointMass>,
}

fn one_energy<P: Profile + ?Sized>(
    q: &P,
    energy: f64,
    eps: &[f64],
    xmax: f64,
    opts: &WeylOptions,
) -> Result<EnergyResult> {
    let rungs = eps
        .iter()
        .map(|&e| Ok(weyl_m(q, Complex64::new(energy, e), xmax, opts)?.im / std::f64::consts::PI))
        .collect::<Result<Vec<f64>>>()?;
    let last = rungs.len() - 1;
    let extrapolated = quad::extrapolate_to_zero(eps, &rungs);
    let density = if extrapolated > 0.0 && extrapolated.is_finite() {
        extrapolated
    } else {
        rungs[last]
    };
    let atom = rungs.iter().all(|&d| d > 0.0).then(|| {
        let le: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
        let ld: Vec<f64> = rungs.iter().map(|d| d.ln()).collect();
        quad::fit_line(&le, &ld).0
    });
    let atom = atom.filter(|&slope| slope <= ATOM_SLOPE).map(|_| PointMass {
        location: energy,
        weight: std::f64::consts::PI * eps[last] * rungs[last],
    });
    Ok(EnergyResult { density, atom })
}

/// Spectral density `Im m(E + i0)/π` of `−u'' + qu` with a Dirichlet
/// condition at 0. Each energy is evaluated at `E + iε` for every rung of
/// the decreasing ladder `eps`, and the rungs are extrapolated polynomially
/// to `ε = 0`; when that extrapolation is not positive the smallest-`ε` value
/// is kept. Energies whose density grows like `1/ε` are reported as
/// point-mass candidates.
pub fn weyl_density<P: Profile + ?Sized>(
    q: &P,
    energies: &[f64],
    eps: &[f64],
    xmax: f64,
    opts: &WeylOptions,
) -> Result<SpectralDensityEstimate> {
    if let Some(&e) = energies.iter().find(|&&e| !(e >= opts.floor)) {
        return Err(Error::param(
            "energies",
            format!("{e} lies below the floor {}", opts.floor),
        ));
    }
    if eps.len() < 3 {
        return Err(Error::param("eps_ladder", format!("need at least 3 rungs, got {}", eps.len())));
    }
    if eps.iter().any(|&e| !(e > 0.0)) || eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::param("eps_ladder", "must be positive and strictly decreasing"));
    }
    if !(xmax > 0.0) {
        return Err(Error::param("xmax", format!("must be positive, got {xmax}")));
    }
    let results = energies
        .par_iter()
        .map(|&e| one_energy(q, e, eps, xmax, opts))
        .collect::<Result<Vec<_>>>()?;
    let mut out = SpectralDensityEstimate::new(
        energies.to_vec(),
        results.iter().map(|r| r.density).collect(),
        DensityMethod::Weyl,
    )?;
    out.point_masses = results.iter().filter_map(|r| r.atom).collect();
    out.normalization_note = "Im m/π".into();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::ClosedForm;
    use std::f64::consts::PI;

    #[test]
    fn free_m_function() {
        let z = Complex64::new(4.0, 1e-3);
        let m = weyl_m(&ClosedForm::Zero, z, 120.0, &WeylOptions::default()).unwrap();
        assert!((m - Complex64::new(0.0, 1.0) * z.sqrt()).norm() < 1e-9);
    }

    #[test]
    fn free_density() {
        let energies: Vec<f64> = (0..=15).map(|i| 0.25 + 0.25 * i as f64).collect();
        let d = weyl_density(&ClosedForm::Zero, &energies, &[4e-3, 2e-3, 1e-3], 100.0, &WeylOptions::default())
            .unwrap();
        for (&e, &v) in energies.iter().zip(&d.density) {
            assert!((v - e.sqrt() / PI).abs() < 1e-6, "{e}: {v}");
        }
        assert!(d.point_masses.is_empty());
    }

    #[test]
    fn ladder_and_floor_are_validated() {
        let o = WeylOptions::default();
        assert!(weyl_density(&ClosedForm::Zero, &[0.01], &[3e-3, 2e-3, 1e-3], 10.0, &o).is_err());
        assert!(weyl_density(&ClosedForm::Zero, &[1.0], &[1e-3, 2e-3, 3e-3], 10.0, &o).is_err());
        assert!(weyl_density(&ClosedForm::Zero, &[1.0], &[2e-3, 1e-3], 10.0, &o).is_err());
    }

    #[test]
    fn bound_state_is_an_atom() {
        // −u'' − 2 sech²(x − 5) u on the half-line has a negative-energy
        // eigenvalue; the positive floor is lowered to reach it
        let well = crate::coeffs::FnProfile(|x: f64| -2.0 / (x - 5.0).cosh().powi(2));
        let opts = WeylOptions { floor: -10.0, ..WeylOptions::default() };
        let energies: Vec<f64> = (0..=400).map(|i| -1.2 + 0.001 * i as f64).collect();
        let d = weyl_density(&well, &energies, &[4e-3, 2e-3, 1e-3], 30.0, &opts).unwrap();
        assert!(!d.point_masses.is_empty());
        for p in &d.point_masses {
            assert!((p.location + 1.0).abs() < 0.01, "{p:?}");
        }
    }
}
