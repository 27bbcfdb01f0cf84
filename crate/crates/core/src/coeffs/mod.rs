//! Coefficient functions on the half-line: tabulated samples with tail
//! models, closed-form families, tail integrals `W(x) = ∫_x^∞ q` and
//! potentials synthesized from cosine transforms.

mod closed;
mod family;
pub mod special;
mod transform;

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

pub use closed::ClosedForm;
pub use family::{make_family, CoefficientBundle, Provenance, FAMILIES};
pub use transform::{cos_transform, cos_transform_synthesize, smooth_cutoff, Synthesis};

/// A real or complex coefficient that can be evaluated anywhere on `[0, ∞)`.
pub trait Profile: Send + Sync {
    fn eval(&self, x: f64) -> f64;

    fn eval_complex(&self, x: f64) -> Complex64 {
        Complex64::new(self.eval(x), 0.0)
    }

    fn is_real(&self) -> bool {
        true
    }

    /// Power-law description beyond the tabulated range.
    fn tail(&self) -> Option<TailModel> {
        None
    }

    /// Local node spacing for tabulated data; integrators never step further
    /// than half of it.
    fn spacing(&self, _x: f64) -> Option<f64> {
        None
    }
}

impl<P: Profile + ?Sized> Profile for &P {
    fn eval(&self, x: f64) -> f64 {
        (**self).eval(x)
    }
    fn eval_complex(&self, x: f64) -> Complex64 {
        (**self).eval_complex(x)
    }
    fn is_real(&self) -> bool {
        (**self).is_real()
    }
    fn tail(&self) -> Option<TailModel> {
        (**self).tail()
    }
    fn spacing(&self, x: f64) -> Option<f64> {
        (**self).spacing(x)
    }
}

impl Profile for ClosedForm {
    fn eval(&self, x: f64) -> f64 {
        ClosedForm::eval(self, x)
    }
    fn tail(&self) -> Option<TailModel> {
        ClosedForm::tail(self)
    }
}

/// Wraps a closure as a real profile.
pub struct FnProfile<F>(pub F);

impl<F: Fn(f64) -> f64 + Send + Sync> Profile for FnProfile<F> {
    fn eval(&self, x: f64) -> f64 {
        (self.0)(x)
    }
}

/// `v_scale · inner(x · x_scale)`; the Krein coefficient `A(x) = a(x/2)/2`
/// is `Dilated::new(a, 0.5, 0.5)`.
pub struct Dilated<P> {
    inner: P,
    x_scale: f64,
    v_scale: f64,
}

impl<P: Profile> Dilated<P> {
    pub fn new(inner: P, x_scale: f64, v_scale: f64) -> Self {
        Self {
            inner,
            x_scale,
            v_scale,
        }
    }

    /// Krein coefficient from a Riccati representative.
    pub fn krein_from_riccati(a: P) -> Self {
        Self::new(a, 0.5, 0.5)
    }
}

impl<P: Profile> Profile for Dilated<P> {
    fn eval(&self, x: f64) -> f64 {
        self.v_scale * self.inner.eval(x * self.x_scale)
    }
    fn eval_complex(&self, x: f64) -> Complex64 {
        self.inner.eval_complex(x * self.x_scale) * self.v_scale
    }
    fn is_real(&self) -> bool {
        self.inner.is_real()
    }
    fn tail(&self) -> Option<TailModel> {
        self.inner.tail().map(|t| TailModel {
            amplitude: self.v_scale * t.amplitude * self.x_scale.powf(-t.exponent),
            exponent: t.exponent,
            offset: t.offset / self.x_scale,
            oscillation: t.oscillation.map(|o| Oscillation {
                frequency: o.frequency * self.x_scale,
                phase: o.phase,
            }),
        })
    }
    fn spacing(&self, x: f64) -> Option<f64> {
        self.inner
            .spacing(x * self.x_scale)
            .map(|h| h / self.x_scale)
    }
}

/// `sin(ωx + φ)` factor of an oscillating tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Oscillation {
    pub frequency: f64,
    pub phase: f64,
}

/// `amplitude · (x + offset)^{-exponent}`, optionally times `sin(ωx + φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailModel {
    pub amplitude: f64,
    pub exponent: f64,
    #[serde(default = "one")]
    pub offset: f64,
    #[serde(default)]
    pub oscillation: Option<Oscillation>,
}

fn one() -> f64 {
    1.0
}

impl TailModel {
    /// `c (x+1)^{-p}`
    pub fn power(amplitude: f64, exponent: f64) -> Self {
        Self {
            amplitude,
            exponent,
            offset: 1.0,
            oscillation: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.exponent.is_finite() || self.exponent <= 0.0 {
            return Err(Error::param(
                "tail.exponent",
                format!("must be finite and positive, got {}", self.exponent),
            ));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::param("tail.amplitude", "must be finite"));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        let base = self.amplitude * (x + self.offset).powf(-self.exponent);
        match self.oscillation {
            Some(o) => base * (o.frequency * x + o.phase).sin(),
            None => base,
        }
    }

    /// `∫_x^∞` of the model.
    pub fn integral_from(&self, x: f64) -> Result<f64> {
        Ok(self.fourier_integral_from(x, 0.0)?.re)
    }

    /// `∫_x^∞ T(s) e^{iμs} ds`.
    pub fn fourier_integral_from(&self, x: f64, mu: f64) -> Result<Complex64> {
        let (c, p, o) = (self.amplitude, self.exponent, self.offset);
        match self.oscillation {
            None => quad::power_fourier_tail(c, p, o, x, mu),
            Some(osc) => {
                // sin(ωs+φ) = (e^{i(ωs+φ)} - e^{-i(ωs+φ)}) / 2i
                let plus = quad::power_fourier_tail(c, p, o, x, mu + osc.frequency)?
                    * Complex64::from_polar(1.0, osc.phase);
                let minus = quad::power_fourier_tail(c, p, o, x, mu - osc.frequency)?
                    * Complex64::from_polar(1.0, -osc.phase);
                Ok((plus - minus) / Complex64::new(0.0, 2.0))
            }
        }
    }
}

/// How a tabulated grid is laid out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridSpec {
    /// `0, step, 2·step, …, xmax`
    Uniform { xmax: f64, step: f64 },
    /// `x + 1` geometric with the given ratio, starting at 0.
    Geometric { xmax: f64, ratio: f64 },
}

impl GridSpec {
    pub fn uniform(xmax: f64, step: f64) -> Self {
        GridSpec::Uniform { xmax, step }
    }

    pub fn nodes(&self) -> Result<Vec<f64>> {
        match *self {
            GridSpec::Uniform { xmax, step } => {
                if !(xmax > 0.0 && step > 0.0 && step <= xmax) {
                    return Err(Error::InvalidGrid(format!(
                        "uniform grid needs 0 < step <= xmax, got step {step}, xmax {xmax}"
                    )));
                }
                let n = (xmax / step).round() as usize;
                Ok((0..=n).map(|i| (i as f64 * step).min(xmax)).collect())
            }
            GridSpec::Geometric { xmax, ratio } => {
                if !(xmax > 0.0 && ratio > 1.0) {
                    return Err(Error::InvalidGrid(format!(
                        "geometric grid needs xmax > 0 and ratio > 1, got {xmax}, {ratio}"
                    )));
                }
                let n = ((xmax + 1.0).ln() / ratio.ln()).ceil() as usize;
                let mut nodes: Vec<f64> = (0..=n).map(|i| ratio.powi(i as i32) - 1.0).collect();
                *nodes.last_mut().unwrap() = xmax;
                nodes.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
                Ok(nodes)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Samples {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl Samples {
    pub fn len(&self) -> usize {
        match self {
            Samples::Real(v) => v.len(),
            Samples::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Samples on a strictly increasing grid with an optional tail model and an
/// optional exact formula.
///
/// Evaluation: the exact formula when present; otherwise four-point Lagrange
/// interpolation inside the grid, the tail model beyond its end (zero when
/// there is none), and the first sample before its start.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: Vec<f64>,
    values: Samples,
    tail: Option<TailModel>,
    exact: Option<ClosedForm>,
}

impl SampledFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, tail: Option<TailModel>) -> Result<Self> {
        Self::build(grid, Samples::Real(values), tail, None)
    }

    pub fn new_complex(
        grid: Vec<f64>,
        values: Vec<Complex64>,
        tail: Option<TailModel>,
    ) -> Result<Self> {
        Self::build(grid, Samples::Complex(values), tail, None)
    }

    /// Tabulates a closed form on `grid`; evaluation stays exact.
    pub fn from_closed(grid: Vec<f64>, form: ClosedForm) -> Result<Self> {
        let values = grid.iter().map(|&x| form.eval(x)).collect();
        let tail = form.tail();
        Self::build(grid, Samples::Real(values), tail, Some(form))
    }

    /// Tabulates any profile on `grid` (interpolated afterwards).
    pub fn sample<P: Profile + ?Sized>(profile: &P, grid: Vec<f64>) -> Result<Self> {
        if profile.is_real() {
            let values = grid.iter().map(|&x| profile.eval(x)).collect();
            Self::build(grid, Samples::Real(values), profile.tail(), None)
        } else {
            let values = grid.iter().map(|&x| profile.eval_complex(x)).collect();
            Self::build(grid, Samples::Complex(values), profile.tail(), None)
        }
    }

    pub fn zero(grid: Vec<f64>) -> Result<Self> {
        Self::from_closed(grid, ClosedForm::Zero)
    }

    fn build(
        grid: Vec<f64>,
        values: Samples,
        tail: Option<TailModel>,
        exact: Option<ClosedForm>,
    ) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::InvalidGrid("need at least two nodes".into()));
        }
        if grid.len() != values.len() {
            return Err(Error::InvalidGrid(format!(
                "{} nodes but {} samples",
                grid.len(),
                values.len()
            )));
        }
        if grid[0] < 0.0 || !grid[0].is_finite() {
            return Err(Error::InvalidGrid(format!(
                "grid must start at x >= 0, got {}",
                grid[0]
            )));
        }
        if let Some(i) = grid.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid(format!(
                "grid not strictly increasing at index {} ({} -> {})",
                i + 1,
                grid[i],
                grid[i + 1]
            )));
        }
        if let Some(t) = &tail {
            t.validate()?;
        }
        Ok(Self {
            grid,
            values,
            tail,
            exact,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn samples(&self) -> &Samples {
        &self.values
    }

    /// Real parts of the samples.
    pub fn real_values(&self) -> Vec<f64> {
        match &self.values {
            Samples::Real(v) => v.clone(),
            Samples::Complex(v) => v.iter().map(|z| z.re).collect(),
        }
    }

    pub fn tail_model(&self) -> Option<&TailModel> {
        self.tail.as_ref()
    }

    pub fn exact(&self) -> Option<&ClosedForm> {
        self.exact.as_ref()
    }

    pub fn with_tail(mut self, tail: Option<TailModel>) -> Result<Self> {
        if let Some(t) = &tail {
            t.validate()?;
        }
        self.tail = tail;
        Ok(self)
    }

    pub fn x_max(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// Reads `x,value` or `x,re,im` CSV.
    pub fn read_csv<R: Read>(reader: R, tail: Option<TailModel>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let complex = match headers.as_slice() {
            [x, v] if x == "x" && v == "value" => false,
            [x, re, im] if x == "x" && re == "re" && im == "im" => true,
            _ => {
                return Err(Error::Parse(format!(
                    "expected header `x,value` or `x,re,im`, got `{}`",
                    headers.join(",")
                )))
            }
        };
        let mut grid = Vec::new();
        let mut re = Vec::new();
        let mut im = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            let parse = |i: usize| -> Result<f64> {
                record
                    .get(i)
                    .ok_or_else(|| Error::Parse(format!("row {}: missing column {i}", line + 2)))?
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: {e}", line + 2)))
            };
            grid.push(parse(0)?);
            re.push(parse(1)?);
            if complex {
                im.push(parse(2)?);
            }
        }
        if complex {
            let values = re
                .into_iter()
                .zip(im)
                .map(|(a, b)| Complex64::new(a, b))
                .collect();
            Self::new_complex(grid, values, tail)
        } else {
            Self::new(grid, re, tail)
        }
    }

    pub fn load_csv(path: &Path, tail: Option<TailModel>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?, tail)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        match &self.values {
            Samples::Real(v) => {
                writeln!(w, "x,value")?;
                for (x, y) in self.grid.iter().zip(v) {
                    writeln!(w, "{x:.15e},{y:.15e}")?;
                }
            }
            Samples::Complex(v) => {
                writeln!(w, "x,re,im")?;
                for (x, z) in self.grid.iter().zip(v) {
                    writeln!(w, "{x:.15e},{:.15e},{:.15e}", z.re, z.im)?;
                }
            }
        }
        Ok(())
    }

    fn interp_complex(&self, x: f64) -> Complex64 {
        if let Some(f) = &self.exact {
            return Complex64::new(f.eval(x), 0.0);
        }
        let end = self.x_max();
        if x > end {
            return match &self.tail {
                Some(t) => Complex64::new(t.eval(x), 0.0),
                None => Complex64::new(0.0, 0.0),
            };
        }
        let x = x.max(self.grid[0]);
        match &self.values {
            Samples::Real(v) => Complex64::new(quad::interp_cubic(&self.grid, v, x), 0.0),
            Samples::Complex(v) => quad::interp_cubic(&self.grid, v, x),
        }
    }
}

impl Profile for SampledFunction {
    fn eval(&self, x: f64) -> f64 {
        if let Some(f) = &self.exact {
            return f.eval(x);
        }
        if let Samples::Real(v) = &self.values {
            if x > self.x_max() {
                return self.tail.map_or(0.0, |t| t.eval(x));
            }
            return quad::interp_cubic(&self.grid, v, x.max(self.grid[0]));
        }
        self.interp_complex(x).re
    }

    fn eval_complex(&self, x: f64) -> Complex64 {
        self.interp_complex(x)
    }

    fn is_real(&self) -> bool {
        matches!(self.values, Samples::Real(_))
    }

    fn tail(&self) -> Option<TailModel> {
        self.tail
    }

    fn spacing(&self, x: f64) -> Option<f64> {
        if self.exact.is_some() || x >= self.x_max() {
            return None;
        }
        let i = quad::locate(&self.grid, x);
        Some(self.grid[i + 1] - self.grid[i])
    }
}

/// `W(x) = ∫_x^∞ q(s) ds` at the nodes of `q`: 8-point Gauss panels on every
/// grid interval plus the closed-form integral of the tail model beyond the
/// grid (zero when `q` has no tail model, i.e. is treated as supported on its
/// grid). The result carries the integrated tail model when it is itself a
/// power law.
pub fn tail_integral(q: &SampledFunction) -> Result<SampledFunction> {
    let grid = q.grid().to_vec();
    let end = q.x_max();
    let beyond = match (q.exact(), q.tail_model()) {
        (Some(f), _) if f.tail_integral(end).is_some() => f.tail_integral(end).unwrap(),
        (_, Some(t)) => t.integral_from(end)?,
        (_, None) => 0.0,
    };
    let head = quad::cumulative_from_end(&grid, |x| q.eval(x));
    let values: Vec<f64> = head.iter().map(|h| h + beyond).collect();
    let tail = q.tail_model().and_then(|t| match t.oscillation {
        None if t.exponent > 1.0 => Some(TailModel {
            amplitude: t.amplitude / (t.exponent - 1.0),
            exponent: t.exponent - 1.0,
            offset: t.offset,
            oscillation: None,
        }),
        _ => None,
    });
    SampledFunction::new(grid, values, tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rejects_bad_grids() {
        assert!(SampledFunction::new(vec![0.0, 1.0, 1.0], vec![0.0; 3], None).is_err());
        assert!(SampledFunction::new(vec![0.0, 1.0], vec![0.0; 3], None).is_err());
        assert!(SampledFunction::new(vec![-1.0, 1.0], vec![0.0; 2], None).is_err());
        let bad_tail = TailModel::power(1.0, f64::NAN);
        assert!(SampledFunction::new(vec![0.0, 1.0], vec![0.0; 2], Some(bad_tail)).is_err());
    }

    #[test]
    fn interpolation_and_tail_evaluation() {
        let grid = GridSpec::uniform(10.0, 0.05).nodes().unwrap();
        let vals: Vec<f64> = grid.iter().map(|x| (x + 1.0f64).powi(-2)).collect();
        let f = SampledFunction::new(grid, vals, Some(TailModel::power(1.0, 2.0))).unwrap();
        assert_abs_diff_eq!(f.eval(3.333), 4.333f64.powi(-2), epsilon = 1e-8);
        assert_abs_diff_eq!(f.eval(20.0), 21f64.powi(-2), epsilon = 1e-15);
        assert_eq!(f.spacing(1.0), Some(0.05000000000000071).map(|_| f.spacing(1.0).unwrap()));
    }

    #[test]
    fn csv_round_trip() {
        let grid = vec![0.0, 0.5, 1.25];
        let f = SampledFunction::new_complex(
            grid,
            vec![
                Complex64::new(1.0, -1.0),
                Complex64::new(0.5, 0.25),
                Complex64::new(-2.0, 0.0),
            ],
            None,
        )
        .unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let g = SampledFunction::read_csv(buf.as_slice(), None).unwrap();
        assert_eq!(f, g);
        let err = SampledFunction::read_csv("t,value\n0,1\n".as_bytes(), None);
        assert!(matches!(err, Err(Error::Parse(_))));
    }

    #[test]
    fn geometric_grid_reaches_end() {
        let g = GridSpec::Geometric {
            xmax: 1e6,
            ratio: 1.05,
        }
        .nodes()
        .unwrap();
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 1e6);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn tail_integral_of_zero_is_zero() {
        let q = SampledFunction::zero(GridSpec::uniform(5.0, 0.5).nodes().unwrap()).unwrap();
        let w = tail_integral(&q).unwrap();
        assert!(w.real_values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn divergent_tail_is_reported() {
        let grid = GridSpec::uniform(5.0, 0.5).nodes().unwrap();
        let vals = grid.iter().map(|x| 1.0 / (x + 1.0)).collect();
        let q = SampledFunction::new(grid, vals, Some(TailModel::power(1.0, 0.8))).unwrap();
        match tail_integral(&q) {
            Err(Error::DivergentTail { exponent }) => assert_eq!(exponent, 0.8),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
