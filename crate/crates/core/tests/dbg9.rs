use lmpsh::simulate::{sim_setting2, Censoring, Setting2Params};
use lmpsh::supermodel::{fit_supermodel_on, BasisSpec, PolyTerm, Variant};

#[test]
fn dbg9() {
    let params = Setting2Params {
        lambda2: 0.3,
        beta21: 0.0,
        beta22: 0.0,
        beta_c: 0.0,
        censoring: Censoring::TargetFraction(0.3),
        ..Setting2Params::default()
    };
    let fine_grid: Vec<f64> = (0..9).map(|i| 0.25 * i as f64).collect();
    let basis = BasisSpec {
        f_terms: vec![
            PolyTerm { shift: 0.0, exponent: 0 },
            PolyTerm { shift: 0.0, exponent: 1 },
        ],
        g_terms: vec![
            PolyTerm { shift: 0.0, exponent: 1 },
            PolyTerm { shift: 0.0, exponent: 2 },
        ],
        s0: 0.0,
    };
    for rep in 0..40u64 {
        let ds = sim_setting2(600, &params, 90_000 + rep).unwrap();
        match fit_supermodel_on(&ds, &fine_grid, 1.5, &basis, Variant::Psh) {
            Ok(sup) => {
                let d: Vec<f64> = (0..4).map(|j| sup.fit.cov_robust[j][j]).collect();
                let ok = sup.wald_test("z", &[1]).is_ok();
                println!(
                    "rep {rep}: conv={} iters={} diag={d:?} wald_ok={ok} beta={:?}",
                    sup.fit.converged, sup.fit.iterations, sup.fit.beta
                );
            }
            Err(e) => println!("rep {rep}: fit error {e}"),
        }
    }
}
