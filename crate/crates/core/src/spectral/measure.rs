use serde::Serialize;

use super::{PointMass, SpectralDensityEstimate};
use crate::error::{Error, Result};
use crate::quad;

/// Sturm-Liouville spectral measure `ρ(t) = 2∫_0^{√t} α² dσ̂(α)` built from a
/// Dirac-system density `σ̂′` and its atoms.
#[derive(Debug, Clone)]
pub struct MeasureTransfer {
    /// `ρ(t)` at each `t`, atoms included.
    pub cumulative: Vec<f64>,
    /// `ρ′(t) = √t·σ̂′(√t)`, with atoms moved to `t = α₀²` and weighted
    /// `2α₀²w`.
    pub density: SpectralDensityEstimate,
}

fn sigma_at(sigma: &SpectralDensityEstimate, alpha: f64) -> f64 {
    let p = &sigma.params;
    if alpha <= p[0] {
        return sigma.density[0];
    }
    let i = quad::locate(p, alpha);
    let u = (alpha - p[i]) / (p[i + 1] - p[i]);
    (1.0 - u) * sigma.density[i] + u * sigma.density[i + 1]
}

/// Transfers `σ̂` to the energy variable `t = α²`. `σ̂′` is interpolated
/// linearly between its nodes and held constant below the first node.
pub fn rho_from_sigma(sigma_hat: &SpectralDensityEstimate, t_grid: &[f64]) -> Result<MeasureTransfer> {
    let available = *sigma_hat.params.last().unwrap();
    if let Some(&t) = t_grid.iter().find(|&&t| t < 0.0) {
        return Err(Error::param("t_grid", format!("energies must be nonnegative, got {t}")));
    }
    if let Some(&t) = t_grid.iter().find(|&&t| t.sqrt() > available * (1.0 + 1e-12)) {
        return Err(Error::Coverage {
            requested: t.sqrt(),
            available,
        });
    }
    // ∫_0^α 2s²σ̂′(s) ds, accumulated over the σ̂ nodes in increasing α
    let rule = quad::gl8();
    let integrand = |s: f64| 2.0 * s * s * sigma_at(sigma_hat, s);
    let mut knots = vec![0.0];
    knots.extend(sigma_hat.params.iter().copied().filter(|&p| p > 0.0));
    let mut running = vec![0.0];
    for w in knots.windows(2) {
        let prev = *running.last().unwrap();
        running.push(prev + rule.integrate(w[0], w[1], integrand));
    }
    let continuous = |alpha: f64| {
        let i = quad::locate(&knots, alpha);
        running[i] + rule.integrate(knots[i], alpha, integrand)
    };
    let atoms: Vec<PointMass> = sigma_hat
        .point_masses
        .iter()
        .map(|p| PointMass {
            location: p.location * p.location,
            weight: 2.0 * p.location * p.location * p.weight,
        })
        .collect();
    let cumulative = t_grid
        .iter()
        .map(|&t| {
            let jumps: f64 = atoms.iter().filter(|a| a.location <= t).map(|a| a.weight).sum();
            continuous(t.sqrt()) + jumps
        })
        .collect();
    let mut density = SpectralDensityEstimate::new(
        t_grid.to_vec(),
        t_grid.iter().map(|&t| t.sqrt() * sigma_at(sigma_hat, t.sqrt())).collect(),
        sigma_hat.method,
    )?;
    density.point_masses = atoms;
    density.normalization = sigma_hat.normalization;
    density.normalization_note = format!("transferred from σ̂ ({})", sigma_hat.normalization_note);
    Ok(MeasureTransfer { cumulative, density })
}

/// Ratio `reference/estimate` over the nodes of `estimate`.
#[derive(Debug, Clone, Serialize)]
pub struct Normalization {
    /// Mean ratio.
    pub constant: f64,
    pub min: f64,
    pub max: f64,
    /// `(max − min)/|constant|`
    pub relative_spread: f64,
    pub nodes: usize,
}

/// Measures the constant `c` with `reference ≈ c·estimate`, interpolating
/// `reference` linearly onto the nodes of `estimate` that it covers.
pub fn measure_normalization(
    estimate: &SpectralDensityEstimate,
    reference: &SpectralDensityEstimate,
) -> Result<Normalization> {
    let (lo, hi) = (reference.params[0], *reference.params.last().unwrap());
    let ratios: Vec<f64> = estimate
        .params
        .iter()
        .zip(&estimate.density)
        .filter(|(p, _)| **p >= lo && **p <= hi)
        .map(|(&p, &d)| {
            if !(d > 0.0) {
                return Err(Error::DensityZeros { nodes: vec![p] });
            }
            Ok(sigma_at(reference, p) / d)
        })
        .collect::<Result<_>>()?;
    if ratios.is_empty() {
        return Err(Error::Coverage {
            requested: estimate.params[0],
            available: hi,
        });
    }
    let constant = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Normalization {
        constant,
        min,
        max,
        relative_spread: (max - min) / constant.abs(),
        nodes: ratios.len(),
    })
}

impl SpectralDensityEstimate {
    /// Constant Dirac-system density `σ̂′ ≡ s` on `[0, alpha_max]`.
    pub fn constant_sigma(s: f64, alpha_max: f64, nodes: usize) -> Result<Self> {
        let params = (0..nodes)
            .map(|i| alpha_max * i as f64 / (nodes - 1) as f64)
            .collect();
        Self::closed_form(params, |_| s)
    }
}
