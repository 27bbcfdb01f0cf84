use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use krein_core::coeffs::{make_family, GridSpec, SampledFunction, TailModel};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioKind {
    #[serde(rename = "free_baseline")]
    FreeBaseline,
    #[serde(rename = "thm1_regime")]
    DecayingRegime,
    #[serde(rename = "thm2_lp_tails")]
    SquareIntegrableTails,
    #[serde(rename = "thm3_smooth_qhat")]
    SmoothTransform,
    #[serde(rename = "vnw")]
    EmbeddedEigenvalue,
    #[serde(rename = "secC_example_grid")]
    OscillatingGrid,
    #[serde(rename = "accelerant_roundtrip")]
    AccelerantRoundTrip,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 7] = [
        ScenarioKind::FreeBaseline,
        ScenarioKind::DecayingRegime,
        ScenarioKind::SquareIntegrableTails,
        ScenarioKind::SmoothTransform,
        ScenarioKind::EmbeddedEigenvalue,
        ScenarioKind::OscillatingGrid,
        ScenarioKind::AccelerantRoundTrip,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::FreeBaseline => "free_baseline",
            ScenarioKind::DecayingRegime => "thm1_regime",
            ScenarioKind::SquareIntegrableTails => "thm2_lp_tails",
            ScenarioKind::SmoothTransform => "thm3_smooth_qhat",
            ScenarioKind::EmbeddedEigenvalue => "vnw",
            ScenarioKind::OscillatingGrid => "secC_example_grid",
            ScenarioKind::AccelerantRoundTrip => "accelerant_roundtrip",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// What the coefficient override of this scenario describes, if it
    /// accepts one.
    fn coefficient_role(self) -> Option<CoefficientRole> {
        match self {
            ScenarioKind::DecayingRegime => Some(CoefficientRole::W),
            ScenarioKind::SmoothTransform => Some(CoefficientRole::Qhat),
            ScenarioKind::EmbeddedEigenvalue => Some(CoefficientRole::Q),
            _ => None,
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CoefficientRole {
    /// Antiderivative tail `W`.
    W,
    /// Potential `q`.
    Q,
    /// Cosine transform `q̂`; a family supplies `q` and is transformed.
    Qhat,
}

/// A named family with parameters, or samples read from an `x,value` CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum CoefficientSpec {
    Family {
        family: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
    File {
        file: PathBuf,
        #[serde(default)]
        tail: Option<TailModel>,
    },
}

/// Lower end, upper end and spacing of a uniform grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Band {
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.lo + self.step * i as f64).collect()
    }
}

/// A scenario run. Every knob has a default; knobs marked `Option` default
/// per scenario kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    #[serde(default)]
    pub coefficient: Option<CoefficientSpec>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Integration range.
    #[serde(default)]
    pub xmax: Option<f64>,
    /// Spectral parameters checked individually.
    #[serde(default)]
    pub lambdas: Option<Vec<f64>>,
    /// Band from which random spectral parameters are drawn.
    #[serde(default = "default_lambda_band")]
    pub lambda_band: [f64; 2],
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Fraction of random parameters that must pass.
    #[serde(default = "default_pass_fraction")]
    pub pass_fraction: f64,
    /// Energy grid for scans.
    #[serde(default)]
    pub energies: Option<Band>,
    /// Energy at which a scan must find a dip.
    #[serde(default)]
    pub expected_dip: Option<f64>,
    /// Decay exponent `p` of `W = (x+1)^{-p}`.
    #[serde(default = "default_w_exponent")]
    pub w_exponent: f64,
    /// Cutoff half-width for splitting a cosine transform.
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
    /// Amplitude exponents of `(x²+1)^{-α} sin(x^β)`.
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_betas")]
    pub betas: Vec<f64>,
    /// Constant accelerant value.
    #[serde(default = "default_kernel_constant")]
    pub kernel_constant: f64,
    /// Discretization sizes, each doubling the last.
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_tol() -> f64 {
    1e-10
}
fn default_lambda_band() -> [f64; 2] {
    [0.5, 3.0]
}
fn default_samples() -> usize {
    64
}
fn default_pass_fraction() -> f64 {
    0.9
}
fn default_w_exponent() -> f64 {
    0.8
}
fn default_cutoff() -> f64 {
    1.0
}
fn default_alphas() -> Vec<f64> {
    vec![0.25, 0.3]
}
fn default_betas() -> Vec<f64> {
    vec![1.6, 2.0]
}
fn default_kernel_constant() -> f64 {
    1.0
}
fn default_sizes() -> Vec<usize> {
    vec![64, 128, 256]
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("krein-out")
}

impl ScenarioConfig {
    pub fn new(kind: ScenarioKind) -> Self {
        Self {
            kind,
            coefficient: None,
            tol: default_tol(),
            xmax: None,
            lambdas: None,
            lambda_band: default_lambda_band(),
            samples: default_samples(),
            pass_fraction: default_pass_fraction(),
            energies: None,
            expected_dip: None,
            w_exponent: default_w_exponent(),
            cutoff: default_cutoff(),
            alphas: default_alphas(),
            betas: default_betas(),
            kernel_constant: default_kernel_constant(),
            sizes: default_sizes(),
            seed: 0,
            out_dir: default_out_dir(),
            threads: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, Vec<String>> {
        serde_json::from_str(text).map_err(|e| vec![e.to_string()])
    }

    pub fn xmax(&self) -> f64 {
        self.xmax.unwrap_or(match self.kind {
            ScenarioKind::FreeBaseline => 100.0,
            ScenarioKind::SmoothTransform => 40.0,
            ScenarioKind::EmbeddedEigenvalue => 200.0,
            ScenarioKind::AccelerantRoundTrip => 1.0,
            _ => 400.0,
        })
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.lambdas.clone().unwrap_or(match self.kind {
            ScenarioKind::SquareIntegrableTails => vec![0.7, 1.3],
            ScenarioKind::AccelerantRoundTrip => vec![0.0, 1.0, 2.5],
            _ => vec![0.5, 1.0, 2.0],
        })
    }

    pub fn energies(&self) -> Band {
        self.energies.unwrap_or(match self.kind {
            ScenarioKind::DecayingRegime => Band { lo: 0.05, hi: 4.0, step: 0.05 },
            ScenarioKind::EmbeddedEigenvalue => Band { lo: 0.5, hi: 1.5, step: 0.01 },
            _ => Band { lo: 0.25, hi: 4.0, step: 0.25 },
        })
    }

    pub fn expected_dip(&self) -> Option<f64> {
        match (self.kind, self.expected_dip, &self.coefficient) {
            (_, Some(e), _) => Some(e),
            (ScenarioKind::EmbeddedEigenvalue, None, None) => Some(1.0),
            _ => None,
        }
    }

    /// Every problem with the configuration, not just the first. Relative
    /// coefficient files resolve against `base`.
    pub fn validate(&self, base: &Path) -> Vec<String> {
        let mut errs = Vec::new();
        let mut need = |ok: bool, msg: String| {
            if !ok {
                errs.push(msg);
            }
        };
        need(
            self.tol > 0.0 && self.tol <= 1e-3,
            format!("tol must lie in (0, 1e-3], got {}", self.tol),
        );
        let xmax = self.xmax();
        need(
            xmax > 0.0 && xmax.is_finite(),
            format!("xmax must be positive and finite, got {xmax}"),
        );
        let lambdas = self.lambdas();
        need(!lambdas.is_empty(), "lambdas must not be empty".into());
        let lambda_floor = if self.kind == ScenarioKind::AccelerantRoundTrip {
            f64::NEG_INFINITY
        } else {
            0.0
        };
        for &l in &lambdas {
            need(
                l.is_finite() && l > lambda_floor,
                format!("lambda {l} must be finite and positive"),
            );
        }
        let [lo, hi] = self.lambda_band;
        need(
            lo > 0.0 && hi > lo && hi.is_finite(),
            format!("lambda_band must satisfy 0 < lo < hi, got [{lo}, {hi}]"),
        );
        need(
            (1..=100_000).contains(&self.samples),
            format!("samples must lie in [1, 100000], got {}", self.samples),
        );
        need(
            self.pass_fraction > 0.0 && self.pass_fraction <= 1.0,
            format!("pass_fraction must lie in (0, 1], got {}", self.pass_fraction),
        );
        let e = self.energies();
        need(
            e.lo > 0.0 && e.hi >= e.lo && e.step > 0.0 && e.hi.is_finite(),
            format!("energies need 0 < lo <= hi and step > 0, got {e:?}"),
        );
        if e.step > 0.0 && e.hi.is_finite() {
            need(
                (e.hi - e.lo) / e.step <= 10_000.0,
                format!("energies span more than 10000 steps: {e:?}"),
            );
        }
        need(
            self.w_exponent > 0.5 && self.w_exponent <= 1.0,
            format!("w_exponent must lie in (1/2, 1] so that W is square integrable but not integrable, got {}", self.w_exponent),
        );
        need(
            self.cutoff > 0.0 && self.cutoff.is_finite(),
            format!("cutoff must be positive, got {}", self.cutoff),
        );
        need(!self.alphas.is_empty() && !self.betas.is_empty(), "alphas and betas must not be empty".into());
        for &a in &self.alphas {
            need(a >= 0.0 && a.is_finite(), format!("alpha {a} must be nonnegative"));
        }
        for &b in &self.betas {
            need(b > 0.0 && b.is_finite(), format!("beta {b} must be positive"));
        }
        need(
            self.kernel_constant > 0.0 && self.kernel_constant.is_finite(),
            format!("kernel_constant must be positive, got {}", self.kernel_constant),
        );
        need(
            self.sizes.len() >= 2 && self.sizes.windows(2).all(|w| w[1] == 2 * w[0]) && self.sizes[0] >= 8,
            format!("sizes must start at >= 8 and double at each step, got {:?}", self.sizes),
        );
        need(
            self.sizes.iter().all(|&n| n <= 4096),
            format!("sizes above 4096 are not supported, got {:?}", self.sizes),
        );
        if let Some(t) = self.threads {
            need(t >= 1, "threads must be at least 1".into());
        }
        if let Some(spec) = &self.coefficient {
            match self.kind.coefficient_role() {
                None => errs.push(format!("scenario `{}` does not take a coefficient", self.kind)),
                Some(role) => {
                    if let Err(e) = load_coefficient(spec, role, self.xmax(), (self.xmax().max(1.0) / 8.0, base)) {
                        errs.push(format!("coefficient: {e}"));
                    }
                }
            }
        }
        errs
    }

    /// `W` for the decaying-regime scenario on a grid of step `step`.
    pub fn w_coefficient(&self, step: f64, base: &Path) -> anyhow::Result<SampledFunction> {
        let spec = self.coefficient.clone().unwrap_or_else(|| CoefficientSpec::Family {
            family: "power_tail_W".into(),
            params: BTreeMap::from([("gamma".into(), 0.2)]),
        });
        load_coefficient(&spec, CoefficientRole::W, self.xmax(), (step, base))
    }

    /// `q` for the embedded-eigenvalue scenario, sampled out to `range`.
    pub fn q_coefficient(&self, range: f64, step: f64, base: &Path) -> anyhow::Result<SampledFunction> {
        let spec = self.coefficient.clone().unwrap_or_else(|| CoefficientSpec::Family {
            family: "vnw".into(),
            params: BTreeMap::new(),
        });
        load_coefficient(&spec, CoefficientRole::Q, range, (step, base))
    }

    /// Potential whose cosine transform feeds the synthesis, or the
    /// transform itself when read from a file (`is_transform`).
    pub fn qhat_source(&self, step: f64, base: &Path) -> anyhow::Result<(SampledFunction, bool)> {
        let spec = self.coefficient.clone().unwrap_or_else(|| CoefficientSpec::Family {
            family: "gaussian_qhat".into(),
            params: BTreeMap::new(),
        });
        let is_transform = matches!(spec, CoefficientSpec::File { .. });
        Ok((load_coefficient(&spec, CoefficientRole::Qhat, self.xmax(), (step, base))?, is_transform))
    }
}

fn load_coefficient(
    spec: &CoefficientSpec,
    role: CoefficientRole,
    xmax: f64,
    (step, base): (f64, &Path),
) -> anyhow::Result<SampledFunction> {
    match spec {
        CoefficientSpec::Family { family, params } => {
            let bundle = make_family(family, params, &GridSpec::uniform(xmax.max(step), step))?;
            let f = match role {
                CoefficientRole::W => bundle.w,
                CoefficientRole::Q | CoefficientRole::Qhat => Some(bundle.q),
            };
            f.ok_or_else(|| anyhow::anyhow!("family `{family}` has no closed-form W"))
        }
        CoefficientSpec::File { file, tail } => {
            let path = if file.is_relative() { base.join(file) } else { file.clone() };
            SampledFunction::load_csv(&path, *tail)
                .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
        }
    }
}
