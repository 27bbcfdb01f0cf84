//! Randomized checks of the structural invariants of each module.

use std::collections::BTreeMap;

use krein_core::accelerant::{pp_from_resolvent, solve_resolvent, AccelerantKernel};
use krein_core::asympt::{ck_series_q, fit_sin, FitWindow};
use krein_core::coeffs::{make_family, tail_integral, ClosedForm, Dilated, FnProfile, GridSpec, Profile, SampledFunction, TailModel};
use krein_core::krein::{integrate_dirac, integrate_krein, reduction_residual, transfer_matrix, uniform_positions};
use krein_core::riccati::{kappa, potentials_from_a, solve_contraction};
use krein_core::spectral::{limit_diagnostics, weighted_log_integral, LogKind, SpectralDensityEstimate, Verdict};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn power_w(gamma: f64, sign: f64) -> krein_core::coeffs::CoefficientBundle {
    let mut p = BTreeMap::new();
    p.insert("gamma".into(), gamma);
    p.insert("sign".into(), sign);
    make_family("power_tail_W", &p, &GridSpec::uniform(60.0, 0.01)).unwrap()
}

/// `c₁e^{−dx} + c₂cos(ωx)/(1+x)`
fn random_coefficient(c1: f64, d: f64, c2: f64, w: f64) -> impl Profile {
    FnProfile(move |x: f64| c1 * (-d * x).exp() + c2 * (w * x).cos() / (1.0 + x))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn power_tail_bundle_relations(gamma in 0.01f64..0.24, sign in prop::sample::select(vec![-1.0, 1.0])) {
        let b = power_w(gamma, sign);
        let w = b.w.as_ref().unwrap();
        for (&x, v) in w.grid().iter().zip(w.real_values()) {
            prop_assert!(v.abs() * (x + 1.0) <= gamma * (1.0 + 1e-15));
        }
        let r = b.residuals().unwrap();
        prop_assert!(r.tail_derivative.unwrap() < 1e-7);
    }

    #[test]
    fn riccati_solution_invariants(gamma in 0.02f64..0.24, sign in prop::sample::select(vec![-1.0, 1.0])) {
        let w = power_w(gamma, sign).w.unwrap();
        let tol = 1e-10;
        let s = solve_contraction(&w, gamma, tol, 500).unwrap();
        let k = kappa(gamma);
        prop_assert!(s.weighted_sup() <= k + 1e-12);
        if let Some(r) = s.max_contraction_rate() {
            prop_assert!(r <= 2.0 * k + 0.05, "rate {r}");
        }
        // fixed-point residual with an independent tail quadrature of a²
        let a = &s.a;
        let c = a.tail_model().unwrap().amplitude;
        let sq = SampledFunction::new(
            a.grid().to_vec(),
            a.real_values().iter().map(|v| v * v).collect(),
            Some(TailModel::power(c * c, 2.0)),
        ).unwrap();
        let tail = tail_integral(&sq).unwrap();
        let worst = a.grid().iter().zip(a.real_values()).zip(tail.real_values())
            .filter(|((&x, _), _)| x <= 60.0)
            .map(|((&x, av), t)| (x + 1.0) * (av - (t - w.eval(x))).abs())
            .fold(0.0, f64::max);
        prop_assert!(worst <= 1e-8, "fixed-point residual {worst}");
        // ∫_x^∞ (a² + a') = W
        let pots = potentials_from_a(a).unwrap();
        let back = tail_integral(&pots.q).unwrap();
        let gap = back.grid().iter().zip(back.real_values())
            .filter(|(&x, _)| x <= 60.0)
            .map(|(&x, v)| (v - w.eval(x)).abs())
            .fold(0.0, f64::max);
        prop_assert!(gap <= 1e-6, "round trip {gap}");
    }

    #[test]
    fn krein_conservation_and_monotonicity(
        c1 in -1.0f64..1.0, d in 0.1f64..2.0, c2 in -1.0f64..1.0, w in 0.5f64..3.0,
        lam in 0.2f64..3.0, eta in 0.05f64..1.0,
    ) {
        let a = random_coefficient(c1, d, c2, w);
        let xs = uniform_positions(30.0, 300);
        let real = integrate_krein(&a, Complex64::new(lam, 0.0), &xs, 1e-11).unwrap();
        prop_assert!(real.max_modulus_gap() <= 1e-7);
        let upper = integrate_krein(&a, Complex64::new(lam, eta), &xs, 1e-11).unwrap();
        for (p, s) in upper.p.iter().zip(&upper.pstar) {
            prop_assert!(s.norm() >= p.norm() * (1.0 - 1e-9));
        }
    }

    #[test]
    fn reduction_and_factorization(gamma in 0.02f64..0.24, lam in 0.3f64..3.0) {
        let w = power_w(gamma, -1.0).w.unwrap();
        let a = solve_contraction(&w, gamma, 1e-10, 500).unwrap().a;
        let big_a = Dilated::krein_from_riccati(&a);
        let xs = uniform_positions(40.0, 200);
        let half: Vec<f64> = xs.iter().map(|x| x / 2.0).collect();
        let k = integrate_krein(&big_a, Complex64::new(lam, 0.0), &xs, 1e-11).unwrap();
        let dirac = integrate_dirac(&a, &ClosedForm::Zero, lam, &half, 1e-11).unwrap();
        prop_assert!(reduction_residual(&k, &dirac).unwrap() <= 1e-7);
        // u = Ψ/λ against the Dirichlet solution of −u'' + (a² + a')u = λ²u
        let q = potentials_from_a(&a).unwrap().q;
        let dirac = integrate_dirac(&a, &ClosedForm::Zero, lam, &xs, 1e-11).unwrap();
        let tm = transfer_matrix(&q, lam, &xs, 1e-11).unwrap();
        let gap = tm.iter().zip(&dirac.psi)
            .map(|(m, psi)| (m.dirichlet().0 - psi / lam).abs())
            .fold(0.0, f64::max);
        prop_assert!(gap <= 1e-6, "factorization gap {gap}");
    }

    #[test]
    fn resolvent_symmetry_and_routes(c in 0.1f64..2.0, d in 0.2f64..2.0, lam in -2.0f64..2.0) {
        // c·e^{−d|t|} is a positive definite kernel
        let h = AccelerantKernel::new(FnProfile(move |t: f64| c * (-d * t).exp())).unwrap();
        let n = 128;
        let rho: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let s = solve_resolvent(&h, 1.0, n, &rho).unwrap();
        prop_assert!(s.hermitian_defect() <= 1e-13 * c.max(1.0));
        let (p, ps) = pp_from_resolvent(&s, Complex64::new(lam, 0.0));
        let k = integrate_krein(&s.a_profile().unwrap(), Complex64::new(lam, 0.0), &[0.0, 1.0], 1e-12).unwrap();
        prop_assert!((p - k.p[1]).norm() <= 1e-4);
        prop_assert!((ps - k.pstar[1]).norm() <= 1e-4);
        prop_assert!((p.norm() - ps.norm()).abs() <= 1e-4);
    }

    #[test]
    fn log_integral_is_monotone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params: Vec<f64> = (0..60).map(|i| 0.05 * 1.1f64.powi(i)).collect();
        let low: Vec<f64> = params.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
        let high: Vec<f64> = low.iter().map(|&v| rng.gen_range(v..=1.0)).collect();
        for kind in [LogKind::Int2, LogKind::T1] {
            let a = SpectralDensityEstimate::new(params.clone(), low.clone(), krein_core::spectral::DensityMethod::ClosedForm).unwrap();
            let b = SpectralDensityEstimate::new(params.clone(), high.clone(), krein_core::spectral::DensityMethod::ClosedForm).unwrap();
            let va = weighted_log_integral(&a, kind).unwrap().window_value;
            let vb = weighted_log_integral(&b, kind).unwrap().window_value;
            prop_assert!(va <= vb + 1e-14);
        }
    }

    #[test]
    fn hold_verdicts_persist(c in -1.0f64..1.0, d in 0.5f64..2.0, lam_re in -2.0f64..2.0, lam_im in 0.3f64..2.0) {
        let a = FnProfile(move |x: f64| c * (-d * x).exp());
        let l = [Complex64::new(lam_re, lam_im)];
        let first = limit_diagnostics(&a, &l, 40.0, 1e-11).unwrap();
        if first.verdict == Verdict::Hold {
            let second = limit_diagnostics(&a, &l, 80.0, 1e-11).unwrap();
            prop_assert_eq!(second.verdict, Verdict::Hold);
        }
    }

    #[test]
    fn sine_fit_recovers_planted_parameters(
        c in 0.2f64..3.0, phi in 0.0f64..std::f64::consts::TAU, lam in 0.5f64..3.0, delta in 1e-4f64..0.05, seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..=20000).map(|i| i as f64 * 0.01).collect();
        let us: Vec<f64> = xs.iter().map(|&x| c * (lam * x + phi).sin() + delta * rng.gen_range(-1.0..1.0)).collect();
        let f = fit_sin(&xs, &us, lam, FitWindow { lo: 50.0, hi: 200.0, panels: 3 }).unwrap();
        prop_assert!((f.amplitude - c).abs() <= 3.0 * delta);
        let dphi = (f.phase - phi).rem_euclid(std::f64::consts::TAU);
        let dphi = dphi.min(std::f64::consts::TAU - dphi);
        prop_assert!(c * dphi <= 3.0 * delta, "phase {dphi}");
    }

    #[test]
    fn series_gap_decreases_with_order(scale in 0.005f64..0.05, lam in 0.5f64..2.0) {
        let a = ClosedForm::power(scale, 1.5, 1.0);
        let xs: Vec<f64> = (0..=50).map(|i| i as f64).collect();
        let mut prev = f64::INFINITY;
        for order in 1..=4 {
            let mut s = ck_series_q(&a, lam, order, &xs, 300.0, 0.02).unwrap();
            let gap = s.compare(&a, 1e-13).unwrap();
            prop_assert!(gap < prev || gap < 1e-11, "order {order}: {gap} vs {prev}");
            prev = gap;
        }
    }
}
