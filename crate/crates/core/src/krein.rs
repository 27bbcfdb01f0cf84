//! Integrators for the Krein system
//!
//! ```text
//! P'  = iλP − conj(A)·P*,   P(0)  = 1
//! P*' = −A·P,               P*(0) = 1
//! ```
//!
//! the Dirac-type system for `(Φ, Ψ)`, the phase-stripped equation
//! `Q' = −A e^{−iλx} conj(Q)`, and Sturm-Liouville transfer matrices.

use std::io::Write;

use num_complex::Complex64;

use crate::coeffs::Profile;
use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions, OdeStats};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn check_positions(positions: &[f64]) -> Result<()> {
    if positions.is_empty() {
        return Err(Error::InvalidGrid("no output positions".into()));
    }
    if positions[0] < 0.0 {
        return Err(Error::InvalidGrid(format!(
            "positions must be nonnegative, got {}",
            positions[0]
        )));
    }
    if let Some(i) = positions.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::InvalidGrid(format!(
            "positions decrease at index {}",
            i + 1
        )));
    }
    Ok(())
}

/// `n + 1` equally spaced positions on `[0, xmax]`.
pub fn uniform_positions(xmax: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| xmax * i as f64 / n as f64).collect()
}

pub(crate) fn options<P: Profile + ?Sized>(tol: f64, coefficient: &P) -> (OdeOptions, impl Fn(f64) -> f64 + '_) {
    let cap = move |x: f64| coefficient.spacing(x).map_or(f64::INFINITY, |h| 0.5 * h);
    (OdeOptions::with_tol(tol), cap)
}

/// Right-hand side of the Krein system with the state split into real parts
/// `[Re P, Im P, Re P*, Im P*]`.
pub(crate) fn krein_rhs<P: Profile + ?Sized>(a: &P, lambda: Complex64, x: f64, y: &[f64]) -> [f64; 4] {
    let p = Complex64::new(y[0], y[1]);
    let ps = Complex64::new(y[2], y[3]);
    let av = a.eval_complex(x);
    let dp = I * lambda * p - av.conj() * ps;
    let dps = -av * p;
    [dp.re, dp.im, dps.re, dps.im]
}

#[derive(Debug, Clone)]
pub struct KreinTrajectory {
    pub lambda: Complex64,
    pub positions: Vec<f64>,
    pub p: Vec<Complex64>,
    pub pstar: Vec<Complex64>,
    /// `e^{−iλx} P`
    pub q: Vec<Complex64>,
    /// `| |P|² − |P*|² |` per node; conserved (zero) for real λ.
    pub conserved_residuals: Vec<f64>,
    pub stats: OdeStats,
    pub tol: f64,
}

impl KreinTrajectory {
    pub fn max_conserved_residual(&self) -> f64 {
        self.conserved_residuals.iter().copied().fold(0.0, f64::max)
    }

    /// `max | |P| − |P*| |`
    pub fn max_modulus_gap(&self) -> f64 {
        self.p
            .iter()
            .zip(&self.pstar)
            .map(|(p, s)| (p.norm() - s.norm()).abs())
            .fold(0.0, f64::max)
    }

    /// CSV `x,re_P,im_P,re_Pstar,im_Pstar` preceded by a `# lambda=re,im` line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# lambda={:.12e},{:.12e}", self.lambda.re, self.lambda.im)?;
        writeln!(w, "x,re_P,im_P,re_Pstar,im_Pstar")?;
        for ((x, p), s) in self.positions.iter().zip(&self.p).zip(&self.pstar) {
            writeln!(w, "{x:.10e},{:.12e},{:.12e},{:.12e},{:.12e}", p.re, p.im, s.re, s.im)?;
        }
        Ok(())
    }
}

/// Integrates the Krein system from `P = P* = 1` at 0 and reports it at
/// `positions`.
pub fn integrate_krein<P: Profile + ?Sized>(
    a: &P,
    lambda: Complex64,
    positions: &[f64],
    tol: f64,
) -> Result<KreinTrajectory> {
    check_positions(positions)?;
    let (opts, cap) = options(tol, a);
    let (ys, stats) = ode::integrate_capped(
        |x, y: &[f64; 4]| krein_rhs(a, lambda, x, y),
        cap,
        0.0,
        [1.0, 0.0, 1.0, 0.0],
        positions,
        &opts,
    )?;
    let p: Vec<Complex64> = ys.iter().map(|y| Complex64::new(y[0], y[1])).collect();
    let pstar: Vec<Complex64> = ys.iter().map(|y| Complex64::new(y[2], y[3])).collect();
    let q = positions
        .iter()
        .zip(&p)
        .map(|(&x, &p)| (-I * lambda * x).exp() * p)
        .collect();
    let conserved_residuals = p
        .iter()
        .zip(&pstar)
        .map(|(p, s)| (p.norm_sqr() - s.norm_sqr()).abs())
        .collect();
    Ok(KreinTrajectory {
        lambda,
        positions: positions.to_vec(),
        p,
        pstar,
        q,
        conserved_residuals,
        stats,
        tol,
    })
}

#[derive(Debug, Clone)]
pub struct DiracTrajectory {
    pub lambda: f64,
    pub positions: Vec<f64>,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub stats: OdeStats,
}

/// `Φ' = −λΨ − aΦ + bΨ`, `Ψ' = λΦ + bΦ + aΨ` from `Φ = 1`, `Ψ = 0`.
pub fn integrate_dirac<P: Profile + ?Sized, B: Profile + ?Sized>(
    a: &P,
    b: &B,
    lambda: f64,
    positions: &[f64],
    tol: f64,
) -> Result<DiracTrajectory> {
    check_positions(positions)?;
    let opts = OdeOptions::with_tol(tol);
    let cap = |x: f64| {
        let h = [a.spacing(x), b.spacing(x)]
            .into_iter()
            .flatten()
            .fold(f64::INFINITY, f64::min);
        0.5 * h
    };
    let (ys, stats) = ode::integrate_capped(
        |x, y: &[f64; 2]| {
            let (av, bv) = (a.eval(x), b.eval(x));
            [
                -lambda * y[1] - av * y[0] + bv * y[1],
                lambda * y[0] + bv * y[0] + av * y[1],
            ]
        },
        cap,
        0.0,
        [1.0, 0.0],
        positions,
        &opts,
    )?;
    Ok(DiracTrajectory {
        lambda,
        positions: positions.to_vec(),
        phi: ys.iter().map(|y| y[0]).collect(),
        psi: ys.iter().map(|y| y[1]).collect(),
        stats,
    })
}

/// `max_x |P(x) − e^{iλx/2}(Φ(x/2) + iΨ(x/2))|`, for a Dirac trajectory whose
/// positions are half those of the Krein trajectory.
pub fn reduction_residual(krein: &KreinTrajectory, dirac: &DiracTrajectory) -> Result<f64> {
    if krein.positions.len() != dirac.positions.len()
        || krein
            .positions
            .iter()
            .zip(&dirac.positions)
            .any(|(k, d)| (k - 2.0 * d).abs() > 1e-12 * (1.0 + k))
    {
        return Err(Error::InvalidGrid(
            "Dirac positions must be half the Krein positions".into(),
        ));
    }
    let lambda = Complex64::new(dirac.lambda, 0.0);
    Ok(krein
        .positions
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let e = Complex64::new(dirac.phi[i], dirac.psi[i]);
            (krein.p[i] - (I * lambda * (x / 2.0)).exp() * e).norm()
        })
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone)]
pub struct QTrajectory {
    pub lambda: Complex64,
    pub positions: Vec<f64>,
    pub q: Vec<Complex64>,
    pub stats: OdeStats,
}

/// `Q' = −A e^{−iλx} conj(Q)`, `Q(0) = 1`, integrated as a real 2-system
/// since the right-hand side is not holomorphic.
pub fn integrate_q<P: Profile + ?Sized>(
    a: &P,
    lambda: Complex64,
    positions: &[f64],
    tol: f64,
) -> Result<QTrajectory> {
    check_positions(positions)?;
    let (opts, cap) = options(tol, a);
    let (ys, stats) = ode::integrate_capped(
        |x, y: &[f64; 2]| {
            let q = Complex64::new(y[0], y[1]);
            let d = -a.eval_complex(x) * (-I * lambda * x).exp() * q.conj();
            [d.re, d.im]
        },
        cap,
        0.0,
        [1.0, 0.0],
        positions,
        &opts,
    )?;
    Ok(QTrajectory {
        lambda,
        positions: positions.to_vec(),
        q: ys.iter().map(|y| Complex64::new(y[0], y[1])).collect(),
        stats,
    })
}

/// `max |Q − conj(P*)|` between the phase-stripped equation and the Krein
/// system. The identity is only claimed for real λ and real `A`, and other
/// inputs are rejected.
pub fn q_conjugate_gap<P: Profile + ?Sized>(
    a: &P,
    lambda: f64,
    positions: &[f64],
    tol: f64,
) -> Result<f64> {
    if !a.is_real() {
        return Err(Error::param("A", "Q = conj(P*) is only checked for real A"));
    }
    let lambda = Complex64::new(lambda, 0.0);
    let k = integrate_krein(a, lambda, positions, tol)?;
    let q = integrate_q(a, lambda, positions, tol)?;
    Ok(q.q
        .iter()
        .zip(&k.pstar)
        .map(|(q, s)| (q - s.conj()).norm())
        .fold(0.0, f64::max))
}

/// Propagator of `−u'' + qu = λ²u`: maps `(u(0), u'(0))` to `(u(x), u'(x))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrixSample {
    pub position: f64,
    /// Row-major `[[v, u], [v', u']]`, with `u` the Dirichlet (`u(0)=0,
    /// u'(0)=1`) and `v` the Neumann (`v(0)=1, v'(0)=0`) solution.
    pub m: [[f64; 2]; 2],
}

impl TransferMatrixSample {
    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dirichlet(&self) -> (f64, f64) {
        (self.m[0][1], self.m[1][1])
    }

    pub fn neumann(&self) -> (f64, f64) {
        (self.m[0][0], self.m[1][0])
    }
}

/// Largest tolerated `|det M − 1|`.
pub const DETERMINANT_DRIFT: f64 = 1e-6;

/// Transfer matrices at `positions` from simultaneous integration of the
/// Dirichlet and Neumann solutions. `λ = 0` integrates `−u'' + qu = 0`.
pub fn transfer_matrix<P: Profile + ?Sized>(
    q: &P,
    lambda: f64,
    positions: &[f64],
    tol: f64,
) -> Result<Vec<TransferMatrixSample>> {
    check_positions(positions)?;
    let energy = lambda * lambda;
    let (opts, cap) = options(tol, q);
    let (ys, _) = ode::integrate_capped(
        |x, y: &[f64; 4]| {
            let k = q.eval(x) - energy;
            [y[1], k * y[0], y[3], k * y[2]]
        },
        cap,
        0.0,
        [0.0, 1.0, 1.0, 0.0],
        positions,
        &opts,
    )?;
    let mut out = Vec::with_capacity(ys.len());
    for (&x, y) in positions.iter().zip(&ys) {
        let s = TransferMatrixSample {
            position: x,
            m: [[y[2], y[0]], [y[3], y[1]]],
        };
        let drift = (s.det() - 1.0).abs();
        if drift > DETERMINANT_DRIFT {
            return Err(Error::DeterminantDrift { position: x, drift });
        }
        out.push(s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{ClosedForm, FnProfile};
    use approx::assert_abs_diff_eq;

    fn zero() -> ClosedForm {
        ClosedForm::Zero
    }

    #[test]
    fn free_krein_system() {
        let xs = uniform_positions(50.0, 200);
        let t = integrate_krein(&zero(), Complex64::new(2.0, 0.0), &xs, 1e-12).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            assert_abs_diff_eq!((t.p[i] - (I * 2.0 * x).exp()).norm(), 0.0, epsilon = 1e-10);
            assert_eq!(t.pstar[i], Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn constant_coefficient_at_zero_lambda() {
        let c = 0.7;
        let a = ClosedForm::Constant { value: c };
        let xs = uniform_positions(5.0, 10);
        let t = integrate_krein(&a, Complex64::new(0.0, 0.0), &xs, 1e-12).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            assert_abs_diff_eq!(t.p[i].re, (-c * x).exp(), epsilon = 1e-12);
            assert_abs_diff_eq!(t.pstar[i].re, (-c * x).exp(), epsilon = 1e-12);
        }
    }

    #[test]
    fn free_dirac_system_and_zero_lambda() {
        let xs = uniform_positions(20.0, 100);
        let d = integrate_dirac(&zero(), &zero(), 3.0, &xs, 1e-12).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            assert_abs_diff_eq!(d.phi[i], (3.0 * x).cos(), epsilon = 1e-10);
            assert_abs_diff_eq!(d.psi[i], (3.0 * x).sin(), epsilon = 1e-10);
        }
        let a = ClosedForm::power(0.3, 1.0, 1.0);
        let d = integrate_dirac(&a, &zero(), 0.0, &xs, 1e-12).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            // exp(−∫ 0.3/(s+1)) = (x+1)^{−0.3}
            assert_abs_diff_eq!(d.phi[i], (x + 1.0).powf(-0.3), epsilon = 1e-11);
            assert_eq!(d.psi[i], 0.0);
        }
    }

    #[test]
    fn free_transfer_matrix() {
        let xs = uniform_positions(30.0, 60);
        let lambda = 1.7;
        let ms = transfer_matrix(&zero(), lambda, &xs, 1e-12).unwrap();
        for m in &ms {
            let x = m.position;
            let expect = [
                [(lambda * x).cos(), (lambda * x).sin() / lambda],
                [-lambda * (lambda * x).sin(), (lambda * x).cos()],
            ];
            for (row, want) in m.m.iter().zip(&expect) {
                for (got, want) in row.iter().zip(want) {
                    assert_abs_diff_eq!(*got, *want, epsilon = 1e-9);
                }
            }
            assert_abs_diff_eq!(m.det(), 1.0, epsilon = 1e-9);
        }
        // λ = 0: u = x, v = 1
        let ms = transfer_matrix(&zero(), 0.0, &[0.0, 2.0], 1e-12).unwrap();
        assert_abs_diff_eq!(ms[1].m[0][1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn q_is_one_for_zero_coefficient() {
        let q = integrate_q(&zero(), Complex64::new(1.0, 0.5), &[0.0, 3.0], 1e-10).unwrap();
        assert!(q.q.iter().all(|z| *z == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn complex_coefficient_identity_is_refused() {
        struct Complexish;
        impl Profile for Complexish {
            fn eval(&self, _: f64) -> f64 {
                0.0
            }
            fn is_real(&self) -> bool {
                false
            }
        }
        assert!(q_conjugate_gap(&Complexish, 1.0, &[0.0, 1.0], 1e-8).is_err());
        let g = q_conjugate_gap(&FnProfile(|x: f64| (-x).exp()), 1.0, &[0.0, 4.0], 1e-10);
        assert!(g.unwrap() < 1e-8);
    }

    #[test]
    fn bad_positions() {
        assert!(integrate_krein(&zero(), Complex64::new(1.0, 0.0), &[1.0, 0.5], 1e-8).is_err());
        assert!(integrate_krein(&zero(), Complex64::new(1.0, 0.0), &[-1.0], 1e-8).is_err());
    }

    #[test]
    fn csv_header() {
        let t = integrate_krein(&zero(), Complex64::new(1.0, 0.0), &[0.0, 1.0], 1e-8).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("# lambda=1.000000000000e0,0.000000000000e0\nx,re_P,im_P,re_Pstar,im_Pstar\n"));
    }
}
