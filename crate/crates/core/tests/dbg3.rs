use lmpsh::censoring::km_censoring;
use lmpsh::dataset::to_counting_process;
use lmpsh::fine_gray::{fit as fg_fit, FitOptions};
use lmpsh::landmark::{fit_landmark_psh, predict_conditional_cif, LandmarkSpec};
use lmpsh::simulate::*;
use lmpsh::supermodel::{fit_supermodel_on, BasisSpec, Variant};

#[test]
fn dbg3() {
    let reps = 40;
    let p2 = Setting2Params { censoring: Censoring::UniformBound(10.0), ..Setting2Params::default() };
    let setting = SettingParams::Two(p2);
    let plot: Vec<f64> = (0..=6).map(|i| 0.5 * i as f64).collect();
    let fine: Vec<f64> = (0..=40).map(|i| 0.1 * i as f64).collect();
    let w = 3.0;
    let cells = plot.len() * 2;
    let mut sums = vec![[0.0f64; 4]; cells]; // lm, super, cox, count-less
    let mut counts = vec![[0usize; 3]; cells];
    for rep in 0..reps {
        let ds = sim_setting2(1000, &p2, 32_000 + rep).unwrap();
        for (si, &s) in plot.iter().enumerate() {
            if let Ok(f) = fit_landmark_psh(&ds, LandmarkSpec::new(s, w).unwrap()) {
                for (ai, z) in [0.0, 1.0].into_iter().enumerate() {
                    sums[si*2+ai][0] += predict_conditional_cif(&f, &[z], LandmarkSpec{s,w}).unwrap();
                    counts[si*2+ai][0] += 1;
                }
            }
        }
        for (mi, variant) in [(1usize, Variant::Psh), (2usize, Variant::Cox)] {
            if let Ok(sup) = fit_supermodel_on(&ds, &fine, w, &BasisSpec::quadratic(0.0), variant) {
                for (si, &s) in plot.iter().enumerate() {
                    for (ai, z) in [0.0, 1.0].into_iter().enumerate() {
                        sums[si*2+ai][mi] += sup.predict(&[z], s, w).unwrap();
                        counts[si*2+ai][mi] += 1;
                    }
                }
            }
        }
        let _ = (km_censoring(&ds), to_counting_process, fg_fit, FitOptions::default());
    }
    println!("setting 2, w=3 (mean over {reps} reps)");
    for (si, &s) in plot.iter().enumerate() {
        for (ai, z) in [0.0, 1.0].into_iter().enumerate() {
            let c = si*2+ai;
            let truth = true_conditional_cif(&setting, z, s, w);
            println!(
                "s={s:3} z={z}: truth={truth:.4} lm={:.4} super={:.4} cox={:.4} (cox-truth {:+.4})",
                sums[c][0]/counts[c][0] as f64,
                sums[c][1]/counts[c][1] as f64,
                sums[c][2]/counts[c][2] as f64,
                sums[c][2]/counts[c][2] as f64 - truth,
            );
        }
    }
}
