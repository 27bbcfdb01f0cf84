use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{ClosedForm, GridSpec, Oscillation, Profile, SampledFunction, TailModel};
use crate::error::{Error, Result};
use crate::quad;

/// Names accepted by [`make_family`].
pub const FAMILIES: [&str; 6] = [
    "free",
    "power_tail_W",
    "vnw",
    "oscillatory_A",
    "gaussian_qhat",
    "constant_A",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub family: String,
    pub params: BTreeMap<String, f64>,
}

/// Potential `q`, its tail integral `W`, the Riccati representative `a`
/// (`q = a² + a'`), the Krein coefficient `A(x) = a(x/2)/2` and the
/// imaginary-part coefficient `b`, on one grid. Fields a family cannot give
/// in closed form are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientBundle {
    pub q: SampledFunction,
    pub w: Option<SampledFunction>,
    pub a: Option<SampledFunction>,
    pub big_a: Option<SampledFunction>,
    pub b: Option<SampledFunction>,
    pub provenance: Provenance,
}

/// Worst interior residuals of the bundle's defining relations, with
/// derivatives taken by five-point finite differences of the samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct BundleResiduals {
    /// `max |W' + q|`
    pub tail_derivative: Option<f64>,
    /// `max |a² + a' - q|`
    pub riccati: Option<f64>,
    /// `max |A(x) - a(x/2)/2|`
    pub krein_relation: Option<f64>,
}

impl BundleResiduals {
    pub fn max(&self) -> f64 {
        [self.tail_derivative, self.riccati, self.krein_relation]
            .into_iter()
            .flatten()
            .fold(0.0, f64::max)
    }
}

impl CoefficientBundle {
    /// Finite-difference residuals over interior nodes (two nodes trimmed at
    /// each end).
    pub fn residuals(&self) -> Result<BundleResiduals> {
        self.residuals_beyond(0.0)
    }

    /// As [`Self::residuals`], restricted to nodes at or beyond `x_min` (for
    /// coefficients that are not smooth at the origin).
    pub fn residuals_beyond(&self, x_min: f64) -> Result<BundleResiduals> {
        let grid = self.q.grid();
        let n = grid.len();
        let first = grid.partition_point(|&x| x < x_min).max(2);
        let interior = first..n.saturating_sub(2);
        let q = self.q.real_values();
        let mut out = BundleResiduals::default();
        if let Some(w) = &self.w {
            let dw = quad::derivative_5pt(w.grid(), &w.real_values())?;
            out.tail_derivative = Some(
                interior
                    .clone()
                    .map(|i| (dw[i] + q[i]).abs())
                    .fold(0.0, f64::max),
            );
        }
        if let Some(a) = &self.a {
            let av = a.real_values();
            let da = quad::derivative_5pt(a.grid(), &av)?;
            out.riccati = Some(
                interior
                    .clone()
                    .map(|i| (av[i] * av[i] + da[i] - q[i]).abs())
                    .fold(0.0, f64::max),
            );
            if let Some(big_a) = &self.big_a {
                out.krein_relation = Some(
                    big_a
                        .grid()
                        .iter()
                        .map(|&x| (big_a.eval(x) - 0.5 * a.eval(0.5 * x)).abs())
                        .fold(0.0, f64::max),
                );
            }
        }
        Ok(out)
    }
}

fn take(params: &mut BTreeMap<String, f64>, name: &str, default: Option<f64>) -> Result<f64> {
    match params.remove(name) {
        Some(v) if v.is_finite() => Ok(v),
        Some(v) => Err(Error::param(name, format!("must be finite, got {v}"))),
        None => default.ok_or_else(|| Error::param(name, "required")),
    }
}

/// Builds one of the named coefficient families on `grid`.
///
/// | family | parameters |
/// |---|---|
/// | `free` | none |
/// | `power_tail_W` | `gamma > 0`, `sign = ±1` (default -1), `strict` (nonzero rejects `gamma >= 1/4`) |
/// | `vnw` | `amplitude` (default 8) |
/// | `oscillatory_A` | `alpha` (default 0.25), `beta` (default 1.6) |
/// | `gaussian_qhat` | none |
/// | `constant_A` | `c` |
pub fn make_family(
    name: &str,
    params: &BTreeMap<String, f64>,
    grid: &GridSpec,
) -> Result<CoefficientBundle> {
    let nodes = grid.nodes()?;
    let mut p = params.clone();
    let mut used = BTreeMap::new();
    let mut get = |p: &mut BTreeMap<String, f64>, key: &str, default: Option<f64>| {
        let v = take(p, key, default)?;
        used.insert(key.to_string(), v);
        Ok::<f64, Error>(v)
    };
    let sample = |form: ClosedForm| SampledFunction::from_closed(nodes.clone(), form);
    let dilate = |form: &ClosedForm| form.clone().dilated(0.5, 0.5);

    let (q, w, a, big_a, b) = match name {
        "free" => {
            let z = sample(ClosedForm::Zero)?;
            (z.clone(), Some(z.clone()), Some(z.clone()), Some(z.clone()), Some(z))
        }
        "power_tail_W" => {
            let gamma = get(&mut p, "gamma", None)?;
            let sign = get(&mut p, "sign", Some(-1.0))?;
            let strict = get(&mut p, "strict", Some(0.0))? != 0.0;
            if gamma <= 0.0 {
                return Err(Error::param("gamma", format!("must be > 0, got {gamma}")));
            }
            if sign != 1.0 && sign != -1.0 {
                return Err(Error::param("sign", format!("must be +1 or -1, got {sign}")));
            }
            if strict && gamma >= 0.25 {
                return Err(Error::param(
                    "gamma",
                    format!("strict regime requires gamma < 1/4, got {gamma}"),
                ));
            }
            let w = ClosedForm::power(sign * gamma, 1.0, 1.0);
            let q = ClosedForm::power(sign * gamma, 2.0, 1.0);
            // c/(x+1) solves c = c² - sign·γ; small root, real while 1 + 4·sign·γ >= 0
            let disc = 1.0 + 4.0 * sign * gamma;
            let (a, big_a) = if disc >= 0.0 {
                let a = ClosedForm::power((1.0 - disc.sqrt()) / 2.0, 1.0, 1.0);
                (Some(sample(a.clone())?), Some(sample(dilate(&a))?))
            } else {
                (None, None)
            };
            (sample(q)?, Some(sample(w)?), a, big_a, Some(sample(ClosedForm::Zero)?))
        }
        "vnw" => {
            let amp = get(&mut p, "amplitude", Some(8.0))?;
            let q = ClosedForm::SinOverX {
                amplitude: amp,
                frequency: 2.0,
            };
            // ∫_x^∞ c sin(2s)/s ds ~ (c/2) cos(2x)/x
            let w_tail = TailModel {
                amplitude: amp / 2.0,
                exponent: 1.0,
                offset: 0.0,
                oscillation: Some(Oscillation {
                    frequency: 2.0,
                    phase: PI / 2.0,
                }),
            };
            let w = sample(ClosedForm::SineIntegralTail {
                amplitude: amp,
                frequency: 2.0,
            })?
            .with_tail(Some(w_tail))?;
            (sample(q)?, Some(w), None, None, None)
        }
        "oscillatory_A" => {
            let alpha = get(&mut p, "alpha", Some(0.25))?;
            let beta = get(&mut p, "beta", Some(1.6))?;
            if alpha < 0.0 || beta <= 0.0 {
                return Err(Error::param(
                    "alpha/beta",
                    format!("need alpha >= 0 and beta > 0, got {alpha}, {beta}"),
                ));
            }
            let big_a = ClosedForm::Chirp { alpha, beta };
            let a = big_a.clone().dilated(2.0, 2.0);
            let q = ClosedForm::RiccatiSum {
                a: Box::new(a.clone()),
                sign: 1.0,
            };
            (
                sample(q)?,
                None,
                Some(sample(a)?),
                Some(sample(big_a)?),
                Some(sample(ClosedForm::Zero)?),
            )
        }
        "gaussian_qhat" => {
            let q = ClosedForm::Gaussian {
                amplitude: 1.0 / PI.sqrt(),
                scale: 0.25,
            };
            let w = ClosedForm::Erfc {
                amplitude: 1.0,
                scale: 0.5,
            };
            (sample(q)?, Some(sample(w)?), None, None, None)
        }
        "constant_A" => {
            let c = get(&mut p, "c", None)?;
            (
                sample(ClosedForm::Constant {
                    value: 4.0 * c * c,
                })?,
                None,
                Some(sample(ClosedForm::Constant { value: 2.0 * c })?),
                Some(sample(ClosedForm::Constant { value: c })?),
                Some(sample(ClosedForm::Zero)?),
            )
        }
        other => return Err(Error::UnknownFamily(other.to_string())),
    };
    if let Some(extra) = p.keys().next() {
        return Err(Error::param(
            extra,
            format!("not a parameter of family `{name}`"),
        ));
    }
    Ok(CoefficientBundle {
        q,
        w,
        a,
        big_a,
        b,
        provenance: Provenance {
            family: name.to_string(),
            params: used,
        },
    })
}
