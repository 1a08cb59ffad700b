use lmpsh::dynpred::DynamicModelSpec;
use lmpsh::metrics::cross_validate;
use lmpsh::simulate::{sim_tdcov, Censoring, Setting2Params, TdCovParams};
use lmpsh::supermodel::{BasisSpec, Variant};

#[test]
fn timing_probe() {
    let base = Setting2Params {
        p: 0.15,
        lambda2: 0.16,
        beta22: 0.0,
        censoring: Censoring::UniformBound(8.0),
        ..Setting2Params::default()
    };
    let configs = vec![
        (
            "E",
            TdCovParams {
                base,
                onset_rate: 0.25,
                beta_td: 1.7,
                beta_td_competing: 1.0,
                competing_rate: 0.12,
            },
        ),
        (
            "F",
            TdCovParams {
                base,
                onset_rate: 0.25,
                beta_td: 1.5,
                beta_td_competing: 1.0,
                competing_rate: 0.12,
            },
        ),
    ];

    let grid2: Vec<f64> = (0..=40).map(|i| i as f64 * 0.1).collect();
    let landmarks: Vec<f64> = (0..7).map(|i| 2.4 + 0.2 * i as f64).collect();
    let reps = 5u64;

    for (name, params) in configs {
        println!("==== config {name} (mean over {reps} reps) ====");
        let mut oe = vec![[0.0f64; 2]; landmarks.len()];
        let mut auc_sum = vec![[0.0f64; 2]; landmarks.len()];
        for seed in 0..reps {
            let td = sim_tdcov(5000, &params, seed).unwrap();
            for (vi, variant) in [Variant::Psh, Variant::Cox].into_iter().enumerate() {
                let rows = cross_validate(
                    &td,
                    &DynamicModelSpec::Supermodel {
                        grid: grid2.clone(),
                        basis: BasisSpec::quadratic(0.0),
                        variant,
                    },
                    3,
                    &landmarks,
                    0.4,
                    seed,
                )
                .unwrap();
                for r in &rows {
                    let li = landmarks
                        .iter()
                        .position(|&s| (s - r.landmark).abs() < 1e-9)
                        .unwrap();
                    if r.metric == "oe_ratio" {
                        oe[li][vi] += r.estimate / reps as f64;
                    } else if r.metric == "auc" {
                        auc_sum[li][vi] += r.estimate / reps as f64;
                    }
                }
            }
        }
        for (li, &s) in landmarks.iter().enumerate() {
            println!(
                "  s={s}: oe_psh={:.4} oe_cox={:.4} auc_psh={:.4}",
                oe[li][0], oe[li][1], auc_sum[li][0]
            );
        }
    }
}
