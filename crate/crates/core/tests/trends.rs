//! Qualitative behaviour along the regularization path.

use kronfilter::alo::solve_path;
use kronfilter::experiment::config::{ExperimentConfig, IrSource};
use kronfilter::experiment::{make_true_filter, nuclear_norm, synthesize_dataset};
use kronfilter::ridge::empirical_moments;
use kronfilter::search::log_grid;
use kronfilter::KroneckerShape;

#[test]
fn nuclear_norm_shrinks_as_alpha_grows() {
    let cfg = ExperimentConfig {
        shape: KroneckerShape::new(8, 10, 8).unwrap(),
        ir_source: IrSource::SyntheticLowrank { rank: 3, decay: 0.5 },
        ..ExperimentConfig::default()
    };
    let tf = make_true_filter(&cfg.ir_source, &cfg.shape, cfg.seed).unwrap();
    let grid = log_grid(1e-8, 1e2, 25).unwrap();
    for k in 0..3 {
        let d = synthesize_dataset(&cfg, &tf, k).unwrap();
        let m = empirical_moments(&d);
        for warm in [true, false] {
            let norms: Vec<f64> = solve_path(&d, &m, &cfg.shape, &grid, &cfg.als_config(), warm)
                .into_iter()
                .map(|r| nuclear_norm(&r.unwrap().filter_matrix()))
                .collect();
            for (i, pair) in norms.windows(2).enumerate() {
                assert!(
                    pair[1] <= pair[0] * 1.05,
                    "realization {k}, warm {warm}: step {i} grew {} -> {}",
                    pair[0],
                    pair[1]
                );
            }
        }
    }
}
