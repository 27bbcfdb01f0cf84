//! Spectral-measure computations: the upper half-plane diagnostics behind
//! `Π(λ) = lim P*(r, λ)`, logarithmic integrals of densities, the map from
//! Dirac-system to Sturm-Liouville spectral measures, a Weyl-function density
//! estimator, and diagnostics for oscillating Krein coefficients.

mod conditions;
mod log_integral;
mod measure;
mod oscillating;
mod weyl;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use conditions::{limit_diagnostics, ConditionsDiagnostics, LambdaDiagnostics, Verdict};
pub use log_integral::{weighted_log_integral, LogIntegral, LogKind};
pub use measure::{measure_normalization, rho_from_sigma, MeasureTransfer, Normalization};
pub use oscillating::{oscillating_coefficient_check, OscillationDiagnostics, OscillationSample};
pub use weyl::{weyl_density, WeylOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMethod {
    Weyl,
    PiLimit,
    ClosedForm,
}

impl DensityMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            DensityMethod::Weyl => "weyl",
            DensityMethod::PiLimit => "pi_limit",
            DensityMethod::ClosedForm => "closed_form",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointMass {
    pub location: f64,
    pub weight: f64,
}

/// Density of a spectral measure on a parameter grid (spectral parameter λ
/// or energy t), with point-mass candidates and a normalization constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensityEstimate {
    pub params: Vec<f64>,
    pub density: Vec<f64>,
    pub point_masses: Vec<PointMass>,
    pub normalization: f64,
    pub normalization_note: String,
    pub method: DensityMethod,
}

impl SpectralDensityEstimate {
    /// Density given in closed form on `params`, normalization 1.
    pub fn closed_form<F: Fn(f64) -> f64>(params: Vec<f64>, f: F) -> Result<Self> {
        let density = params.iter().map(|&x| f(x)).collect();
        Self::new(params, density, DensityMethod::ClosedForm)
    }

    pub fn new(params: Vec<f64>, density: Vec<f64>, method: DensityMethod) -> Result<Self> {
        if params.len() != density.len() || params.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "{} parameters for {} density values (need at least 2)",
                params.len(),
                density.len()
            )));
        }
        if let Some(i) = params.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid(format!(
                "parameter grid not strictly increasing at index {}",
                i + 1
            )));
        }
        Ok(Self {
            params,
            density,
            point_masses: Vec::new(),
            normalization: 1.0,
            normalization_note: "unit".into(),
            method,
        })
    }

    /// Multiplies the density (and point masses) by `c` and records it.
    pub fn with_normalization(mut self, c: f64, note: impl Into<String>) -> Self {
        for d in &mut self.density {
            *d *= c;
        }
        for p in &mut self.point_masses {
            p.weight *= c;
        }
        self.normalization *= c;
        self.normalization_note = note.into();
        self
    }

    /// Nodes with `lo <= param <= hi`.
    pub fn restrict(&self, lo: f64, hi: f64) -> Result<Self> {
        let keep: Vec<usize> = (0..self.params.len())
            .filter(|&i| self.params[i] >= lo && self.params[i] <= hi)
            .collect();
        let mut out = Self::new(
            keep.iter().map(|&i| self.params[i]).collect(),
            keep.iter().map(|&i| self.density[i]).collect(),
            self.method,
        )?;
        out.point_masses = self
            .point_masses
            .iter()
            .filter(|p| p.location >= lo && p.location <= hi)
            .copied()
            .collect();
        out.normalization = self.normalization;
        out.normalization_note = self.normalization_note.clone();
        Ok(out)
    }

    /// CSV `param,density,method,normalization`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "param,density,method,normalization")?;
        for (p, d) in self.params.iter().zip(&self.density) {
            writeln!(
                w,
                "{p:.10e},{d:.10e},{},{:.10e}",
                self.method.as_str(),
                self.normalization
            )?;
        }
        Ok(())
    }
}
