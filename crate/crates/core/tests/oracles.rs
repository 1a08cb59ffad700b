//! Oracle checks: the sweep-based partial likelihood against brute-force
//! risk-set enumeration, analytic derivatives against finite differences, and
//! the closed-form conditional-CIF truth against an independent quadrature
//! route.

mod common;

use common::{brute_force_loglik, conditional_cif_by_quadrature, random_cp};
use lmpsh::fine_gray::{fit, partial_loglik, FitOptions};
use lmpsh::simulate::{Setting1Params, Setting2Params, SettingParams, true_conditional_cif};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

#[test]
fn partial_loglik_matches_brute_force_enumeration() {
    let mut rng = ChaCha12Rng::seed_from_u64(20_240_601);
    for case in 0..150 {
        let p = rng.gen_range(1..=3);
        let cp = random_cp(&mut rng, 8, p);
        let beta: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (ll, grad, hess) = partial_loglik(&cp, &beta).unwrap();
        let (ll0, grad0, hess0) = brute_force_loglik(&cp, &beta);
        assert!(rel_err(ll, ll0) < 1e-10, "case {case}: ll {ll} vs {ll0}");
        for j in 0..p {
            assert!(
                rel_err(grad[j], grad0[j]) < 1e-10,
                "case {case}: grad[{j}] {} vs {}",
                grad[j],
                grad0[j]
            );
            for k in 0..p {
                assert!(
                    rel_err(hess[j][k], hess0[j][k]) < 1e-10,
                    "case {case}: hess[{j}][{k}] {} vs {}",
                    hess[j][k],
                    hess0[j][k]
                );
            }
        }
    }
}

#[test]
fn analytic_gradient_matches_central_differences() {
    let mut rng = ChaCha12Rng::seed_from_u64(77);
    let h = 1e-5;
    for _ in 0..10 {
        let p = rng.gen_range(1..=3);
        let cp = random_cp(&mut rng, 50, p);
        let beta: Vec<f64> = (0..p).map(|_| rng.gen_range(-0.8..0.8)).collect();
        let (_, grad, _) = partial_loglik(&cp, &beta).unwrap();
        for j in 0..p {
            let mut hi = beta.clone();
            hi[j] += h;
            let mut lo = beta.clone();
            lo[j] -= h;
            let (ll_hi, _, _) = partial_loglik(&cp, &hi).unwrap();
            let (ll_lo, _, _) = partial_loglik(&cp, &lo).unwrap();
            let fd = (ll_hi - ll_lo) / (2.0 * h);
            assert!(
                rel_err(grad[j], fd) < 1e-6,
                "grad[{j}] {} vs fd {fd}",
                grad[j]
            );
        }
    }
}

#[test]
fn hessian_is_negative_semidefinite_at_the_maximum() {
    let mut rng = ChaCha12Rng::seed_from_u64(99);
    let mut checked = 0;
    while checked < 12 {
        let p = rng.gen_range(1..=2);
        let cp = random_cp(&mut rng, 30, p);
        let fitted = match fit(&cp, &FitOptions::default()) {
            Ok(f) if f.converged => f,
            _ => continue,
        };
        let (_, _, hess) = partial_loglik(&cp, &fitted.beta).unwrap();
        // Leading principal minors of −H alternate correctly for PSD.
        if p == 1 {
            assert!(-hess[0][0] >= -1e-12);
        } else {
            assert!(-hess[0][0] >= -1e-12);
            let det = hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0];
            assert!(det >= -1e-10, "det {det}");
        }
        checked += 1;
    }
}

#[test]
fn conditional_truth_agrees_with_quadrature_route() {
    let one = SettingParams::One(Setting1Params::default());
    let two = SettingParams::Two(Setting2Params::default());
    // The anchor point from the generator contract plus a spread of others.
    let cases = [
        (&one, 0.0, 2.0, 3.0),
        (&one, 1.0, 2.0, 3.0),
        (&one, 0.0, 0.5, 1.0),
        (&one, 1.0, 4.0, 2.0),
        (&two, 0.0, 1.0, 2.0),
        (&two, 1.0, 1.0, 2.0),
        (&two, 0.0, 2.5, 0.4),
        (&two, 1.0, 3.0, 0.4),
    ];
    for (setting, z, s, w) in cases {
        let ratio = true_conditional_cif(setting, z, s, w);
        let quad = conditional_cif_by_quadrature(setting, z, s, w);
        assert!(
            (ratio - quad).abs() < 1e-8,
            "z={z} s={s} w={w}: ratio {ratio} vs quadrature {quad}"
        );
    }
}
