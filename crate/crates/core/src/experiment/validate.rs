//! Oracle suites behind the `validate` subcommand: closed-form PRESS against
//! explicit leave-one-out re-solves, and the ALO metric against exact
//! leave-one-out ALS.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use super::config::{ExperimentConfig, IrSource};
use super::filter::make_true_filter;
use super::signal::synthesize_dataset;
use crate::alo;
use crate::error::{Error, Result};
use crate::ridge::{self, DataSet};
use crate::tensor_ops::KroneckerShape;

pub const PRESS_REL_TOL: f64 = 1e-9;
pub const ALO_REL_TOL: f64 = 0.10;

#[derive(Debug, Clone, PartialEq)]
pub struct CaseReport {
    pub label: String,
    pub reference: f64,
    pub estimate: f64,
    pub rel_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub tolerance: f64,
    pub cases: Vec<CaseReport>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        !self.cases.is_empty() && self.cases.iter().all(|c| c.passed)
    }

    pub fn worst(&self) -> f64 {
        self.cases.iter().map(|c| c.rel_error).fold(0.0, f64::max)
    }
}

fn case(label: String, reference: f64, estimate: f64, tol: f64) -> CaseReport {
    let rel_error = (estimate - reference).abs() / reference.abs();
    CaseReport {
        label,
        reference,
        estimate,
        rel_error,
        passed: rel_error <= tol,
    }
}

/// Leave-one-out error from `N` explicit ridge solves on `N − 1` samples,
/// each with penalty `Nα` on the unnormalized sum of squares.
pub fn brute_force_loo(d: &DataSet, alpha: f64) -> Result<f64> {
    let n = d.n();
    let mut acc = 0.0;
    for i in 0..n {
        let sub = d.without(i)?;
        let mut a = sub.x() * sub.x().transpose();
        for k in 0..a.nrows() {
            a[(k, k)] += n as f64 * alpha;
        }
        let b = sub.x() * sub.y();
        let w = a.lu().solve(&b).ok_or(Error::Singular)?;
        let e = d.y()[i] - d.x().column(i).dot(&w);
        acc += e * e;
    }
    Ok(acc / n as f64)
}

/// PRESS against [`brute_force_loo`] on `instances` random problems with
/// `M ≤ 10`, `N ≤ 50` and α cycling through `{1e-3, 1e-1, 10}`.
pub fn press_suite(instances: usize, seed: u64) -> Result<SuiteReport> {
    const ALPHAS: [f64; 3] = [1e-3, 1e-1, 10.0];
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(instances);
    for k in 0..instances {
        let m = rng.random_range(1..=10);
        let n = rng.random_range(2..=50);
        let alpha = ALPHAS[k % ALPHAS.len()];
        let x = DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let d = DataSet::new(x, y)?;
        let reference = brute_force_loo(&d, alpha)?;
        let estimate = ridge::press_loocv(&d, alpha)?;
        cases.push(case(format!("M={m} N={n} alpha={alpha:e}"), reference, estimate, PRESS_REL_TOL));
    }
    Ok(SuiteReport {
        name: "PRESS vs brute-force leave-one-out",
        tolerance: PRESS_REL_TOL,
        cases,
    })
}

/// The small configuration on which the ALO metric is checked against the
/// exact leave-one-out oracle.
pub fn alo_desk_config() -> ExperimentConfig {
    ExperimentConfig {
        shape: KroneckerShape { m1: 3, m2: 4, r: 2 },
        n_samples: 120,
        snr_db: 5.0,
        ir_source: IrSource::SyntheticLowrank { rank: 2, decay: 0.5 },
        ..ExperimentConfig::default()
    }
}

/// ALO at the ALO-selected α against `N` warm-started ALS re-solves at that
/// α, one case per realization `0..seeds`.
pub fn alo_suite(cfg: &ExperimentConfig, seeds: u64) -> Result<SuiteReport> {
    cfg.validate()?;
    let tf = make_true_filter(&cfg.ir_source, &cfg.shape, cfg.seed)?;
    let als_cfg = cfg.als_config();
    let opts = cfg.search_options()?;
    let mut cases = Vec::with_capacity(seeds as usize);
    for k in 0..seeds {
        let d = synthesize_dataset(cfg, &tf, k)?;
        let sel = alo::select_alpha_alo_with(&d, &cfg.shape, &als_cfg, &opts)?;
        let reference =
            alo::exact_lo_metric_from(&d, &cfg.shape, sel.alpha_hat, &als_cfg, &sel.final_solution.factors)?;
        cases.push(case(
            format!("realization {k} alpha={:e}", sel.alpha_hat),
            reference,
            sel.j_alo_at_min,
            ALO_REL_TOL,
        ));
    }
    Ok(SuiteReport {
        name: "ALO vs exact leave-one-out",
        tolerance: ALO_REL_TOL,
        cases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn press_suite_passes() {
        let report = press_suite(20, 5).unwrap();
        assert_eq!(report.cases.len(), 20);
        assert!(report.passed(), "worst {}", report.worst());
    }

    #[test]
    fn brute_force_matches_closed_form_single_feature() {
        // M = 1: the held-out fit is Σ_{j≠i} x_j y_j / (Σ_{j≠i} x_j² + Nα).
        let x = [1.0, 2.0, -1.0];
        let y = [0.5, 1.0, 2.0];
        let alpha = 0.2;
        let mut expected = 0.0;
        for i in 0..3 {
            let sxy: f64 = (0..3).filter(|&j| j != i).map(|j| x[j] * y[j]).sum();
            let sxx: f64 = (0..3).filter(|&j| j != i).map(|j| x[j] * x[j]).sum();
            let e = y[i] - x[i] * sxy / (sxx + 3.0 * alpha);
            expected += e * e / 3.0;
        }
        let d = DataSet::new(DMatrix::from_row_slice(1, 3, &x), DVector::from_row_slice(&y)).unwrap();
        assert!((brute_force_loo(&d, alpha).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn empty_suite_does_not_pass() {
        let r = SuiteReport {
            name: "empty",
            tolerance: 0.0,
            cases: vec![],
        };
        assert!(!r.passed());
    }
}
