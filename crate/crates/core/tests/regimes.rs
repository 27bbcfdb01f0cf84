//! End-to-end behaviour of the pipelines on the model coefficient families.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use krein_core::asympt::{fit_sin, solution_pair, subordinacy_sandwich, transfer_bound_scan, FitWindow};
use krein_core::coeffs::{cos_transform, cos_transform_synthesize, make_family, ClosedForm, FnProfile, GridSpec, Profile, SampledFunction};
use krein_core::krein::uniform_positions;
use krein_core::riccati::{potentials_from_a, solve_contraction};
use krein_core::spectral::{limit_diagnostics, measure_normalization, rho_from_sigma, weyl_density, SpectralDensityEstimate, Verdict, WeylOptions};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn decaying_regime_potential() -> (SampledFunction, f64) {
    let mut p = BTreeMap::new();
    p.insert("gamma".to_string(), 0.2);
    let b = make_family("power_tail_W", &p, &GridSpec::uniform(400.0, 0.25)).unwrap();
    let sol = solve_contraction(b.w.as_ref().unwrap(), 0.2, 1e-10, 500).unwrap();
    (potentials_from_a(&sol.a).unwrap().q, sol.kappa)
}

#[test]
fn decaying_regime_solutions_are_asymptotically_sinusoidal() {
    let (q, kappa) = decaying_regime_potential();
    let xs = uniform_positions(400.0, 16000);
    for lam in [0.5, 1.0, 2.0] {
        let (n, d) = solution_pair(&q, lam, &xs, 1e-10).unwrap();
        for k in 0..4 {
            let alpha = k as f64 * PI / 4.0;
            let u: Vec<f64> = n.u.iter().zip(&d.u).map(|(a, b)| alpha.cos() * a + alpha.sin() * b).collect();
            let fit = fit_sin(&xs, &u, lam, FitWindow { lo: 50.0, hi: 400.0, panels: 4 }).unwrap();
            assert!(fit.decreasing, "λ {lam} α {alpha}: {:?}", fit.residual_curve);
            assert!(fit.amplitude > 0.1 && fit.amplitude < 10.0);
        }
        let s = subordinacy_sandwich(&n, &d, kappa).unwrap();
        assert_eq!(s.verdict, Verdict::Hold, "λ {lam}: {s:?}");
    }
}

#[test]
fn square_integrable_tails_keep_transfer_matrices_bounded() {
    // W = (x+1)^{-0.8} lies in L² but not L¹; q = W² − W'
    let q = ClosedForm::power(1.0, 1.6, 1.0);
    let q = FnProfile(move |x: f64| q.eval(x) + 0.8 * (x + 1.0).powf(-1.8));
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let lambdas: Vec<f64> = (0..64).map(|_| rng.gen_range(0.5..3.0)).collect();
    let samples = transfer_bound_scan(&q, &lambdas, 400.0, 0.5, 1e-9).unwrap();
    let bounded = samples.iter().filter(|s| s.bounded).count();
    assert!(bounded as f64 >= 0.9 * 64.0, "{bounded}/64 bounded");
}

#[test]
fn cosine_transform_round_trip() {
    let xs = GridSpec::uniform(40.0, 0.01).nodes().unwrap();
    let q = SampledFunction::new(xs.clone(), xs.iter().map(|x| (-x * x / 2.0).exp() * (1.0 + x * x)).collect(), None).unwrap();
    let omega = GridSpec::uniform(14.0, 0.005).nodes().unwrap();
    let qhat = SampledFunction::new(omega.clone(), cos_transform(&q, &omega).unwrap(), None).unwrap();
    let probe: Vec<f64> = (0..=40).map(|i| i as f64 * 0.2).collect();
    let s = cos_transform_synthesize(&qhat, 1.0, &probe).unwrap();
    for (&x, v) in probe.iter().zip(s.q.real_values()) {
        assert!((v - q.eval(x)).abs() < 1e-8, "x {x}: {v} vs {}", q.eval(x));
    }
}

#[test]
fn free_density_matches_transferred_constant_density() {
    let energies: Vec<f64> = (0..=15).map(|i| 0.25 + 0.25 * i as f64).collect();
    let weyl = weyl_density(&ClosedForm::Zero, &energies, &[4e-3, 2e-3, 1e-3], 400.0, &WeylOptions::default()).unwrap();
    for (&e, &d) in energies.iter().zip(&weyl.density) {
        assert!((d - e.sqrt() / PI).abs() < 1e-4, "E {e}: {d}");
    }
    let sigma = SpectralDensityEstimate::constant_sigma(1.0, 2.5, 101).unwrap();
    let rho = rho_from_sigma(&sigma, &energies).unwrap();
    let n = measure_normalization(&weyl, &rho.density).unwrap();
    assert!(n.relative_spread < 1e-3, "{n:?}");
    assert!((n.constant - PI).abs() < 1e-3);
}

#[test]
fn limit_verdicts_for_model_coefficients() {
    let l = [Complex64::new(0.0, 1.0), Complex64::new(1.0, 0.5)];
    let chirp = FnProfile(|x: f64| (x * x + 1.0).powf(-0.25) * x.powf(1.6).sin());
    for rmax in [100.0, 200.0] {
        let d = limit_diagnostics(&chirp, &l, rmax, 1e-10).unwrap();
        assert!(d.consistent);
        assert_eq!(d.verdict, Verdict::Hold, "rmax {rmax}");
    }
    let d = limit_diagnostics(&FnProfile(|x: f64| (-x).exp()), &l, 100.0, 1e-10).unwrap();
    assert_eq!(d.verdict, Verdict::Hold);
}
