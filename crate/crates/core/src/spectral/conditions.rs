use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::coeffs::Profile;
use crate::error::{Error, Result};
use crate::krein::{krein_rhs, options};
use crate::ode;

/// Relative drift between `r/2` and `r` below which a quantity counts as
/// settled.
const SETTLED: f64 = 1e-3;
/// Relative growth of `∫|P|²` over the second half that counts as failure to
/// converge.
const GROWING: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Hold,
    Fail,
    Undecided,
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaDiagnostics {
    pub lambda: [f64; 2],
    /// `P*(r/2)`, `P*(r)` and the first-order extrapolation `2P*(r) − P*(r/2)`.
    pub pstar_half: [f64; 2],
    pub pstar_end: [f64; 2],
    pub pi_estimate: [f64; 2],
    /// `|P*(r) − P*(r/2)| / max(1, |P*(r)|)`
    pub pstar_drift: f64,
    /// `∫₀^{r/2}|P|²` and `∫₀^r|P|²`
    pub p_l2_half: f64,
    pub p_l2_end: f64,
    /// `(∫₀^r − ∫₀^{r/2}) / max(1, ∫₀^r)`
    pub p_l2_drift: f64,
    pub pstar_sup: f64,
    /// `sup_{[0,r]}|P*| / sup_{[0,r/2]}|P*| − 1`
    pub pstar_sup_growth: f64,
    pub l2_converges: Verdict,
    pub pstar_bounded: Verdict,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionsDiagnostics {
    pub rmax: f64,
    pub per_lambda: Vec<LambdaDiagnostics>,
    /// Whether the `∫|P|²` and `P*`-boundedness verdicts agree wherever both
    /// are decisive.
    pub consistent: bool,
    pub verdict: Verdict,
}

fn combine(a: Verdict, b: Verdict) -> Verdict {
    match (a, b) {
        (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
        (Verdict::Hold, Verdict::Hold) => Verdict::Hold,
        _ => Verdict::Undecided,
    }
}

fn one_lambda<P: Profile + ?Sized>(
    a: &P,
    lambda: Complex64,
    rmax: f64,
    samples: usize,
    tol: f64,
) -> Result<LambdaDiagnostics> {
    let positions: Vec<f64> = (0..=samples).map(|i| rmax * i as f64 / samples as f64).collect();
    let (opts, cap) = options(tol, a);
    let (ys, _) = ode::integrate_capped(
        |x, y: &[f64; 5]| {
            let d = krein_rhs(a, lambda, x, &y[..4]);
            [d[0], d[1], d[2], d[3], y[0] * y[0] + y[1] * y[1]]
        },
        cap,
        0.0,
        [1.0, 0.0, 1.0, 0.0, 0.0],
        &positions,
        &opts,
    )?;
    let half = samples / 2;
    let pstar = |i: usize| Complex64::new(ys[i][2], ys[i][3]);
    let (ps_half, ps_end) = (pstar(half), pstar(samples));
    let pi = ps_end * 2.0 - ps_half;
    let pstar_drift = (ps_end - ps_half).norm() / ps_end.norm().max(1.0);
    let (l2_half, l2_end) = (ys[half][4], ys[samples][4]);
    let p_l2_drift = (l2_end - l2_half) / l2_end.max(1.0);
    let sup = |range: std::ops::Range<usize>| range.map(|i| pstar(i).norm()).fold(0.0, f64::max);
    let sup_half = sup(0..half + 1);
    let sup_all = sup(0..samples + 1);
    let growth = sup_all / sup_half - 1.0;

    let l2_converges = if p_l2_drift < SETTLED {
        Verdict::Hold
    } else if l2_end - l2_half >= GROWING * l2_half {
        Verdict::Fail
    } else {
        Verdict::Undecided
    };
    let pstar_bounded = if pstar_drift < SETTLED && growth < SETTLED {
        Verdict::Hold
    } else if growth >= GROWING {
        Verdict::Fail
    } else {
        Verdict::Undecided
    };
    Ok(LambdaDiagnostics {
        lambda: [lambda.re, lambda.im],
        pstar_half: [ps_half.re, ps_half.im],
        pstar_end: [ps_end.re, ps_end.im],
        pi_estimate: [pi.re, pi.im],
        pstar_drift,
        p_l2_half: l2_half,
        p_l2_end: l2_end,
        p_l2_drift,
        pstar_sup: sup_all,
        pstar_sup_growth: growth,
        l2_converges,
        pstar_bounded,
        verdict: combine(l2_converges, pstar_bounded),
    })
}

/// Integrates the Krein system to `rmax` for each `λ` in the open upper
/// half-plane and compares `P*` and `∫|P|²` at `rmax/2` and `rmax`. A
/// quantity still drifting at `rmax` yields [`Verdict::Undecided`], never a
/// pass.
pub fn limit_diagnostics<P: Profile + ?Sized>(
    a: &P,
    lambdas: &[Complex64],
    rmax: f64,
    tol: f64,
) -> Result<ConditionsDiagnostics> {
    if let Some(l) = lambdas.iter().find(|l| !(l.im > 0.0)) {
        return Err(Error::param(
            "lambda",
            format!("must lie in the open upper half-plane, got {l}"),
        ));
    }
    if !(rmax > 0.0) {
        return Err(Error::param("rmax", format!("must be positive, got {rmax}")));
    }
    let per_lambda = lambdas
        .par_iter()
        .map(|&l| one_lambda(a, l, rmax, 400, tol))
        .collect::<Result<Vec<_>>>()?;
    let consistent = per_lambda.iter().all(|d| {
        !matches!(
            (d.l2_converges, d.pstar_bounded),
            (Verdict::Hold, Verdict::Fail) | (Verdict::Fail, Verdict::Hold)
        )
    });
    let verdict = per_lambda
        .iter()
        .map(|d| d.verdict)
        .reduce(combine)
        .unwrap_or(Verdict::Undecided);
    Ok(ConditionsDiagnostics {
        rmax,
        per_lambda,
        consistent,
        verdict,
    })
}
