//! Resolvent route: positivity of `I + H` on `[0, r]`, the resolvent
//! `Γ_r(t,s) + ∫₀^r H(t−u) Γ_r(u,s) du = H(t−s)`, the trace
//! `A(ρ) = Γ_ρ(0,ρ)`, and `P`, `P*` rebuilt from `Γ_r`.
//!
//! All integral operators use the composite trapezoid rule on `n` uniform
//! nodes (Nyström). Linear algebra goes through the symmetrised matrix
//! `I + W^{1/2} K W^{1/2}`, which is Hermitian for Hermitian kernels.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::coeffs::{Profile, SampledFunction};
use crate::error::{Error, Result};

/// Hermitian kernel `H(−t) = conj(H(t))` given on `t ≥ 0`.
pub struct AccelerantKernel<P> {
    h: P,
}

impl<P: Profile> AccelerantKernel<P> {
    pub fn new(h: P) -> Result<Self> {
        let h0 = h.eval_complex(0.0);
        if h0.im.abs() > 1e-12 * (1.0 + h0.re.abs()) {
            return Err(Error::param(
                "H",
                format!("H(0) must be real for a Hermitian kernel, got {h0}"),
            ));
        }
        Ok(Self { h })
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        if t >= 0.0 {
            self.h.eval_complex(t)
        } else {
            self.h.eval_complex(-t).conj()
        }
    }

    pub fn is_real(&self) -> bool {
        self.h.is_real()
    }
}

impl AccelerantKernel<SampledFunction> {
    /// Reads a `t,re,im` CSV on `[0, r]`.
    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        Self::new(SampledFunction::read_csv(reader, None)?)
    }
}

struct Discretization {
    nodes: Vec<f64>,
    sqrt_w: Vec<f64>,
    /// `I + W^{1/2} K W^{1/2}`
    system: DMatrix<Complex64>,
}

fn discretize<P: Profile>(h: &AccelerantKernel<P>, r: f64, n: usize) -> Discretization {
    let step = r / (n - 1) as f64;
    let nodes: Vec<f64> = (0..n).map(|i| i as f64 * step).collect();
    let sqrt_w: Vec<f64> = (0..n)
        .map(|i| {
            let w = if i == 0 || i == n - 1 { 0.5 * step } else { step };
            w.sqrt()
        })
        .collect();
    // K is Toeplitz: only 2n − 1 distinct kernel values
    let diffs: Vec<Complex64> = (0..n).map(|d| h.eval(d as f64 * step)).collect();
    let system = DMatrix::from_fn(n, n, |i, j| {
        let k = if i >= j { diffs[i - j] } else { diffs[j - i].conj() };
        let v = k * (sqrt_w[i] * sqrt_w[j]);
        if i == j {
            v + 1.0
        } else {
            v
        }
    });
    Discretization {
        nodes,
        sqrt_w,
        system,
    }
}

fn eigen_extremes(m: &DMatrix<Complex64>) -> (f64, f64) {
    let eig = m.clone().symmetric_eigenvalues();
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn check_n(n: usize) -> Result<()> {
    if n < 8 {
        return Err(Error::param("n", format!("need at least 8 nodes, got {n}")));
    }
    Ok(())
}

/// Smallest eigenvalue of the Nyström discretization of
/// `φ ↦ φ + ∫₀^r H(·−s) φ(s) ds`.
pub fn positivity_min_eig<P: Profile>(h: &AccelerantKernel<P>, r: f64, n: usize) -> Result<f64> {
    check_n(n)?;
    if !(r > 0.0) {
        return Err(Error::param("r", format!("must be positive, got {r}")));
    }
    Ok(eigen_extremes(&discretize(h, r, n).system).0)
}

/// Noise floor below which a discrete minimum eigenvalue is not taken as
/// evidence of positivity.
pub fn positivity_threshold(n: usize) -> f64 {
    1e-8 * n as f64
}

#[derive(Debug, Clone)]
pub struct ResolventSolution {
    pub n: usize,
    pub r: f64,
    /// Nodes of the final discretization on `[0, r]`.
    pub nodes: Vec<f64>,
    /// `Γ_r(t_i, t_j)`
    pub gamma: DMatrix<Complex64>,
    pub rho: Vec<f64>,
    /// `A(ρ) = Γ_ρ(0, ρ)` for each entry of `rho`.
    pub a_trace: Vec<Complex64>,
    /// Smallest eigenvalue of the symmetrised system at `ρ = r`.
    pub min_eig: f64,
    /// Spectral condition number of that system.
    pub condition: f64,
}

impl ResolventSolution {
    /// `A` on the ρ grid as a coefficient (real when all imaginary parts
    /// vanish).
    pub fn a_profile(&self) -> Result<SampledFunction> {
        if self.a_trace.iter().all(|a| a.im == 0.0) {
            SampledFunction::new(
                self.rho.clone(),
                self.a_trace.iter().map(|a| a.re).collect(),
                None,
            )
        } else {
            SampledFunction::new_complex(self.rho.clone(), self.a_trace.clone(), None)
        }
    }

    /// `max |Γ(t,s) − conj(Γ(s,t))|`
    pub fn hermitian_defect(&self) -> f64 {
        let g = &self.gamma;
        let mut worst: f64 = 0.0;
        for i in 0..g.nrows() {
            for j in 0..i {
                worst = worst.max((g[(i, j)] - g[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

struct Solved {
    min_eig: f64,
    condition: f64,
    /// requested columns of `Γ`
    gamma: DMatrix<Complex64>,
}

/// Solves `(I + KW)Γ = K` for the requested columns of `K`.
fn solve<P: Profile>(
    h: &AccelerantKernel<P>,
    rho: f64,
    n: usize,
    columns: &[usize],
) -> Result<(Discretization, Solved)> {
    let d = discretize(h, rho, n);
    let (lo, hi) = eigen_extremes(&d.system);
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if lo <= positivity_threshold(n) || condition > 1e12 {
        return Err(Error::IllConditioned { condition });
    }
    let chol = d
        .system
        .clone()
        .cholesky()
        .ok_or(Error::IllConditioned { condition })?;
    let mut rhs = DMatrix::<Complex64>::zeros(n, columns.len());
    for (c, &j) in columns.iter().enumerate() {
        for i in 0..n {
            rhs[(i, c)] = h.eval(d.nodes[i] - d.nodes[j]) * d.sqrt_w[i];
        }
    }
    let mut y = chol.solve(&rhs);
    for i in 0..n {
        let s = 1.0 / d.sqrt_w[i];
        for c in 0..columns.len() {
            y[(i, c)] *= s;
        }
    }
    Ok((
        d,
        Solved {
            min_eig: lo,
            condition,
            gamma: y,
        },
    ))
}

/// Solves the resolvent equation independently for each `ρ` in `rho_grid`
/// (`n` nodes on `[0, ρ]` each) and for the full matrix at `ρ = r`.
pub fn solve_resolvent<P: Profile>(
    h: &AccelerantKernel<P>,
    r: f64,
    n: usize,
    rho_grid: &[f64],
) -> Result<ResolventSolution> {
    check_n(n)?;
    if !(r > 0.0) {
        return Err(Error::param("r", format!("must be positive, got {r}")));
    }
    if let Some(bad) = rho_grid.iter().find(|&&p| !(0.0..=r).contains(&p)) {
        return Err(Error::InvalidGrid(format!("ρ = {bad} outside [0, {r}]")));
    }
    let a_trace = rho_grid
        .par_iter()
        .map(|&rho| {
            if rho == 0.0 {
                return Ok(h.eval(0.0));
            }
            let (_, s) = solve(h, rho, n, &[n - 1])?;
            Ok(s.gamma[(0, 0)])
        })
        .collect::<Result<Vec<_>>>()?;
    let all: Vec<usize> = (0..n).collect();
    let (d, s) = solve(h, r, n, &all)?;
    Ok(ResolventSolution {
        n,
        r,
        nodes: d.nodes,
        gamma: s.gamma,
        rho: rho_grid.to_vec(),
        a_trace,
        min_eig: s.min_eig,
        condition: s.condition,
    })
}

/// `P(r,λ) = e^{iλr}(1 − ∫₀^r Γ_r(s,0)e^{−iλs} ds)` and
/// `P*(r,λ) = 1 − ∫₀^r Γ_r(0,s)e^{iλs} ds` by the trapezoid rule.
pub fn pp_from_resolvent(sol: &ResolventSolution, lambda: Complex64) -> (Complex64, Complex64) {
    let n = sol.n;
    let step = sol.r / (n - 1) as f64;
    let i = Complex64::new(0.0, 1.0);
    let mut ip = Complex64::new(0.0, 0.0);
    let mut ips = Complex64::new(0.0, 0.0);
    for (j, &s) in sol.nodes.iter().enumerate() {
        let w = if j == 0 || j == n - 1 { 0.5 * step } else { step };
        ip += sol.gamma[(j, 0)] * (-i * lambda * s).exp() * w;
        ips += sol.gamma[(0, j)] * (i * lambda * s).exp() * w;
    }
    let p = (i * lambda * sol.r).exp() * (1.0 - ip);
    (p, 1.0 - ips)
}

/// Minimum eigenvalue of a Hermitian matrix; exposed for diagnostics.
pub fn min_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    eigen_extremes(m).0
}
