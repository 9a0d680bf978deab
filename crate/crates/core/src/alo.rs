//! Approximate leave-one-out (ALO) selection of the regularization parameter.
//!
//! Leaving sample `n` out of the factor problem and taking one Newton step
//! from the full-data solution `û` gives, after Sherman–Morrison and dropping
//! the curvature of the bilinear map (which averages out for zero-mean
//! inputs), the closed form
//!
//! ```text
//! J_ALO(α) = (1/N) Σₙ [(yₙ − xₙᵀŵ) / (1 − zₙ)]²
//! zₙ       = xₙᵀ Â F⁻¹ Âᵀ xₙ
//! F        = Σᵢ Âᵀxᵢxᵢᵀ Â + NαI
//! ```
//!
//! where `Â = [A⁽¹⁾ A⁽²⁾]` is the Jacobian of `vec(W)` at `û`. The quadratic
//! term of the expansion is ignored.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::als::{self, AlsConfig, AlsResult};
use crate::error::{Error, Result};
use crate::ridge::{self, DataSet, Moments};
use crate::search;
use crate::tensor_ops::{self, FactorPair, KroneckerShape};

/// ALO metric at one α, with its per-sample ingredients.
#[derive(Debug, Clone, PartialEq)]
pub struct AloEvaluation {
    pub alpha: f64,
    pub j_alo: f64,
    /// `zₙ`, all strictly below one.
    pub leverages: DVector<f64>,
    /// `yₙ − xₙᵀŵ`.
    pub residuals: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct AlphaSearchResult {
    pub alpha_hat: f64,
    pub j_alo_at_min: f64,
    /// Successful evaluations in the order they were made.
    pub evaluations: Vec<AloEvaluation>,
    pub final_solution: AlsResult,
}

/// How the α bracket is explored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    GoldenSection,
    /// Fixed log-spaced grid with this many points.
    Grid(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaSearchOptions {
    pub bracket: (f64, f64),
    pub mode: SearchMode,
    /// Start each ALS run from the factors of the nearest α already solved.
    pub warm_start: bool,
    /// Golden-section stopping width in log₁₀ units.
    pub log_tol: f64,
}

impl Default for AlphaSearchOptions {
    fn default() -> Self {
        Self {
            bracket: search::DEFAULT_BRACKET,
            mode: SearchMode::GoldenSection,
            warm_start: true,
            log_tol: search::DEFAULT_LOG_TOL,
        }
    }
}

/// `F = (ÂᵀX)(ÂᵀX)ᵀ + NαI`.
pub fn build_hessian_approx(d: &DataSet, a_hat: &DMatrix<f64>, alpha: f64) -> Result<DMatrix<f64>> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must be > 0")));
    }
    if a_hat.nrows() != d.m() {
        return Err(Error::Dimension(format!(
            "Jacobian has {} rows, data dimension is {}",
            a_hat.nrows(),
            d.m()
        )));
    }
    let g = a_hat.tr_mul(d.x());
    hessian_from_projected(&g, d.n(), alpha)
}

fn hessian_from_projected(g: &DMatrix<f64>, n: usize, alpha: f64) -> Result<DMatrix<f64>> {
    let mut f = g * g.transpose();
    let shift = n as f64 * alpha;
    for i in 0..f.nrows() {
        f[(i, i)] += shift;
    }
    if !f.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("Hessian approximation"));
    }
    Ok(f)
}

/// The ALO metric for an arbitrary Jacobian `jac` (`M × P`) around the fitted
/// filter `w_hat`.
///
/// With `jac = I` this is exactly the ridge PRESS criterion.
pub fn alo_from_jacobian(
    d: &DataSet,
    jac: &DMatrix<f64>,
    w_hat: &DVector<f64>,
    alpha: f64,
) -> Result<AloEvaluation> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must be > 0")));
    }
    if jac.nrows() != d.m() || w_hat.len() != d.m() {
        return Err(Error::Dimension(format!(
            "Jacobian {}×{} / filter {} vs data dimension {}",
            jac.nrows(),
            jac.ncols(),
            w_hat.len(),
            d.m()
        )));
    }
    let g = jac.tr_mul(d.x());
    let f = hessian_from_projected(&g, d.n(), alpha)?;
    // One factorization serves every sample: zₙ = ‖L⁻¹gₙ‖².
    let chol = f.cholesky().ok_or(Error::NonFinite("Hessian approximation"))?;
    let whitened = chol
        .l()
        .solve_lower_triangular(&g)
        .ok_or(Error::NonFinite("Hessian approximation"))?;
    let leverages = DVector::from_iterator(d.n(), whitened.column_iter().map(|c| c.norm_squared()));
    let residuals = d.residuals(w_hat);

    let mut acc = 0.0;
    for (i, (&z, &r)) in leverages.iter().zip(residuals.iter()).enumerate() {
        if !(z < 1.0) {
            return Err(Error::AloLeverage { index: i, value: z });
        }
        let e = r / (1.0 - z);
        acc += e * e;
    }
    Ok(AloEvaluation {
        alpha,
        j_alo: acc / d.n() as f64,
        leverages,
        residuals,
    })
}

fn shape_of(fp: &FactorPair) -> Result<KroneckerShape> {
    KroneckerShape::new(fp.u1.nrows(), fp.u2.nrows(), fp.rank())
}

/// ALO metric of an ALS solution obtained on `d`.
pub fn alo_metric(d: &DataSet, result: &AlsResult) -> Result<AloEvaluation> {
    let shape = shape_of(&result.factors)?;
    let jac = tensor_ops::jacobian(&result.factors, &shape)?;
    let (_, w) = tensor_ops::reconstruct(&result.factors);
    alo_from_jacobian(d, &jac, &w, result.alpha)
}

/// Exact leave-one-out error: `N` ALS re-solves, each warm-started from the
/// full-data solution at the same α.
pub fn exact_lo_metric(d: &DataSet, shape: &KroneckerShape, alpha: f64, cfg: &AlsConfig) -> Result<f64> {
    let full = als::als_run(d, shape, alpha, cfg, None)?;
    exact_lo_metric_from(d, shape, alpha, cfg, &full.factors)
}

/// [`exact_lo_metric`] warm-started from a given full-data solution.
///
/// Each held-out problem keeps the full-data scaling `(1/N)‖·‖² + α‖U‖²`,
/// which on `N − 1` samples is the standard objective at `α·N/(N − 1)`.
pub fn exact_lo_metric_from(
    d: &DataSet,
    shape: &KroneckerShape,
    alpha: f64,
    cfg: &AlsConfig,
    full: &FactorPair,
) -> Result<f64> {
    let n = d.n();
    if n < 2 {
        return Err(Error::InvalidArgument("leave-one-out needs N ≥ 2".into()));
    }
    let sub_alpha = alpha * n as f64 / (n - 1) as f64;
    let errors = (0..n)
        .into_par_iter()
        .map(|i| {
            let sub = d.without(i)?;
            let res = als::als_run(&sub, shape, sub_alpha, cfg, Some(full))?;
            let e = d.y()[i] - d.x().column(i).dot(&res.filter());
            Ok(e * e)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(errors.iter().sum::<f64>() / n as f64)
}

fn nearest(solved: &[(f64, AlsResult)], alpha: f64) -> Option<&FactorPair> {
    solved
        .iter()
        .min_by(|a, b| {
            let da = (a.0.log10() - alpha.log10()).abs();
            let db = (b.0.log10() - alpha.log10()).abs();
            da.total_cmp(&db)
        })
        .map(|(_, r)| &r.factors)
}

/// ALS solutions along a list of α values.
///
/// With `warm_start` the list is solved in order, each run starting from the
/// nearest α solved so far; otherwise every point is cold-started from the
/// SVD split and the points run concurrently.
pub fn solve_path(
    d: &DataSet,
    moments: &Moments,
    shape: &KroneckerShape,
    alphas: &[f64],
    cfg: &AlsConfig,
    warm_start: bool,
) -> Vec<Result<AlsResult>> {
    if warm_start {
        let mut solved: Vec<(f64, AlsResult)> = Vec::new();
        let mut out = Vec::with_capacity(alphas.len());
        for &a in alphas {
            let res = als::als_run_with_moments(d, moments, shape, a, cfg, nearest(&solved, a));
            if let Ok(r) = &res {
                solved.push((a, r.clone()));
            }
            out.push(res);
        }
        out
    } else {
        alphas
            .par_iter()
            .map(|&a| als::als_run_with_moments(d, moments, shape, a, cfg, None))
            .collect()
    }
}

/// Chooses α by minimizing the ALO metric with the default search options
/// and the given bracket.
pub fn select_alpha_alo(
    d: &DataSet,
    shape: &KroneckerShape,
    cfg: &AlsConfig,
    bracket: (f64, f64),
) -> Result<AlphaSearchResult> {
    let opts = AlphaSearchOptions {
        bracket,
        ..AlphaSearchOptions::default()
    };
    select_alpha_alo_with(d, shape, cfg, &opts)
}

pub fn select_alpha_alo_with(
    d: &DataSet,
    shape: &KroneckerShape,
    cfg: &AlsConfig,
    opts: &AlphaSearchOptions,
) -> Result<AlphaSearchResult> {
    let (lo, hi) = opts.bracket;
    search::check_bracket(lo, hi)?;
    let moments = ridge::empirical_moments(d);

    let mut evaluations = Vec::new();
    let mut solved: Vec<(f64, AlsResult)> = Vec::new();
    let mut best: Option<(f64, usize)> = None;

    let mut record = |res: AlsResult, evaluations: &mut Vec<AloEvaluation>, solved: &mut Vec<(f64, AlsResult)>| -> Result<f64> {
        let alpha = res.alpha;
        let value = match alo_metric(d, &res) {
            Ok(ev) => {
                let v = ev.j_alo;
                evaluations.push(ev);
                v
            }
            Err(Error::AloLeverage { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        solved.push((alpha, res));
        if value.is_finite() && best.is_none_or(|(b, _)| value < b) {
            best = Some((value, solved.len() - 1));
        }
        Ok(value)
    };

    match opts.mode {
        SearchMode::GoldenSection => {
            search::golden_section_log(lo, hi, opts.log_tol, |a| {
                let init = if opts.warm_start { nearest(&solved, a).cloned() } else { None };
                let res = als::als_run_with_moments(d, &moments, shape, a, cfg, init.as_ref())?;
                record(res, &mut evaluations, &mut solved)
            })?;
        }
        SearchMode::Grid(points) => {
            let grid = search::log_grid(lo, hi, points)?;
            for res in solve_path(d, &moments, shape, &grid, cfg, opts.warm_start) {
                record(res?, &mut evaluations, &mut solved)?;
            }
        }
    }

    let (value, idx) = best.ok_or(Error::SearchFailed { lo, hi })?;
    let (alpha_hat, final_solution) = solved.swap_remove(idx);
    Ok(AlphaSearchResult {
        alpha_hat,
        j_alo_at_min: value,
        evaluations,
        final_solution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ridge::press_loocv;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gauss(rng: &mut ChaCha8Rng) -> f64 {
        rng.sample(StandardNormal)
    }

    fn planted(shape: &KroneckerShape, n: usize, noise: f64, seed: u64) -> DataSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u1 = DMatrix::from_fn(shape.m1, shape.r, |_, _| gauss(&mut rng));
        let u2 = DMatrix::from_fn(shape.m2, shape.r, |_, _| gauss(&mut rng));
        let h = tensor_ops::vec(&(u1 * u2.transpose()));
        let x = DMatrix::from_fn(shape.m(), n, |_, _| gauss(&mut rng));
        let y = x.tr_mul(&h) + DVector::from_fn(n, |_, _| noise * gauss(&mut rng));
        DataSet::new(x, y).unwrap()
    }

    #[test]
    fn hessian_identity_case() {
        let d = DataSet::new(DMatrix::identity(3, 3), DVector::from_element(3, 1.0)).unwrap();
        let f = build_hessian_approx(&d, &DMatrix::identity(3, 3), 1.0).unwrap();
        assert_eq!(f, DMatrix::identity(3, 3) * 4.0);
    }

    #[test]
    fn hessian_alpha_dominant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = DMatrix::from_fn(4, 10, |_, _| gauss(&mut rng));
        let d = DataSet::new(x, DVector::zeros(10)).unwrap();
        let a = DMatrix::from_fn(4, 6, |_, _| gauss(&mut rng) * 0.3);
        let f = build_hessian_approx(&d, &a, 1e6).unwrap();
        let target = DMatrix::identity(6, 6) * 1e7;
        assert!((&f - &target).norm() / target.norm() < 1e-4);
    }

    #[test]
    fn hessian_matches_sample_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = DMatrix::from_fn(5, 12, |_, _| gauss(&mut rng));
        let d = DataSet::new(x, DVector::zeros(12)).unwrap();
        let a = DMatrix::from_fn(5, 7, |_, _| gauss(&mut rng));
        let f = build_hessian_approx(&d, &a, 0.2).unwrap();
        let mut naive = DMatrix::identity(7, 7) * (12.0 * 0.2);
        for i in 0..12 {
            let v = a.transpose() * d.x().column(i);
            naive += &v * v.transpose();
        }
        assert!((f - naive).amax() < 1e-11);
    }

    #[test]
    fn identity_jacobian_reduces_to_press() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = DMatrix::from_fn(4, 30, |_, _| gauss(&mut rng));
        let y = DVector::from_fn(30, |_, _| gauss(&mut rng));
        let d = DataSet::new(x, y).unwrap();
        let alpha = 0.05;
        let w = ridge::ridge_solve(&ridge::empirical_moments(&d), alpha).unwrap();
        let ev = alo_from_jacobian(&d, &DMatrix::identity(4, 4), &w, alpha).unwrap();
        let press = press_loocv(&d, alpha).unwrap();
        assert!((ev.j_alo - press).abs() <= 1e-6 * press);
    }

    #[test]
    fn large_alpha_limit() {
        let shape = KroneckerShape::new(3, 4, 2).unwrap();
        let d = planted(&shape, 40, 0.5, 4);
        let res = als::als_run(&d, &shape, 1e6, &AlsConfig::default(), None).unwrap();
        let ev = alo_metric(&d, &res).unwrap();
        let limit = d.y().norm_squared() / 40.0;
        assert!((ev.j_alo - limit).abs() < 1e-4 * limit);
        assert!(ev.leverages.amax() < 1e-4);
    }

    #[test]
    fn leverage_bounds() {
        let shape = KroneckerShape::new(3, 4, 2).unwrap();
        let d = planted(&shape, 60, 0.5, 5);
        let res = als::als_run(&d, &shape, 1e-3, &AlsConfig::default(), None).unwrap();
        let ev = alo_metric(&d, &res).unwrap();
        assert!(ev.leverages.iter().all(|z| (0.0..1.0).contains(z)));
        assert!(ev.leverages.sum() <= shape.n_params() as f64 + 1e-9);
        let direct: f64 = ev
            .residuals
            .iter()
            .zip(ev.leverages.iter())
            .map(|(r, z)| (r / (1.0 - z)).powi(2))
            .sum::<f64>()
            / 60.0;
        assert_eq!(direct, ev.j_alo);
    }

    #[test]
    fn degenerate_leverage_is_rejected() {
        // A single sample carries all the information along its direction.
        let mut x = DMatrix::zeros(4, 3);
        x[(0, 0)] = 1e4;
        x[(1, 1)] = 1e-4;
        x[(2, 2)] = 1e-4;
        let d = DataSet::new(x, DVector::from_vec(vec![1.0, 0.0, 0.0])).unwrap();
        let r = alo_from_jacobian(&d, &DMatrix::identity(4, 4), &DVector::zeros(4), 1e-12);
        match r {
            Err(Error::AloLeverage { index, .. }) => assert_eq!(index, 0),
            Ok(ev) => assert!(ev.leverages[0] > 1.0 - 1e-6),
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn exact_lo_scalar_problem() {
        // M1 = M2 = R = 1: w = u₁u₂ with penalty α(u₁² + u₂²), i.e. 2α|w|.
        // With one sample left, the minimizer is soft-thresholding:
        // w = sign(xy)·max(|xy| − Nα, 0) / x² in unnormalized units.
        let x = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let y = DVector::from_vec(vec![2.0, 3.0]);
        let d = DataSet::new(x, y).unwrap();
        let shape = KroneckerShape::new(1, 1, 1).unwrap();
        let alpha = 0.25;
        let cfg = AlsConfig {
            iterations: 2000,
            rel_tol: 0.0,
            record_trace: false,
        };
        let lo = exact_lo_metric(&d, &shape, alpha, &cfg).unwrap();
        let soft = |xv: f64, yv: f64| {
            let c = xv * yv;
            c.signum() * (c.abs() - 2.0 * alpha).max(0.0) / (xv * xv)
        };
        let e0 = 2.0 - 1.0 * soft(2.0, 3.0);
        let e1 = 3.0 - 2.0 * soft(1.0, 2.0);
        let expected = (e0 * e0 + e1 * e1) / 2.0;
        assert!((lo - expected).abs() < 1e-6, "{lo} vs {expected}");
    }

    #[test]
    fn exact_lo_limits_and_permutation() {
        let shape = KroneckerShape::new(2, 3, 1).unwrap();
        let d = planted(&shape, 12, 0.3, 6);
        let cfg = AlsConfig::default();
        let big = exact_lo_metric(&d, &shape, 1e8, &cfg).unwrap();
        let limit = d.y().norm_squared() / 12.0;
        assert!((big - limit).abs() < 1e-5 * limit);

        let perm: Vec<usize> = (0..12).rev().collect();
        let x = DMatrix::from_fn(6, 12, |i, j| d.x()[(i, perm[j])]);
        let y = DVector::from_fn(12, |j, _| d.y()[perm[j]]);
        let dp = DataSet::new(x, y).unwrap();
        let a = exact_lo_metric(&d, &shape, 0.01, &cfg).unwrap();
        let b = exact_lo_metric(&dp, &shape, 0.01, &cfg).unwrap();
        assert!((a - b).abs() <= 1e-9 * a);
    }

    #[test]
    fn alo_close_to_exact_lo() {
        let shape = KroneckerShape::new(3, 4, 2).unwrap();
        let d = planted(&shape, 60, 1.0, 7);
        let cfg = AlsConfig::default();
        let res = als::als_run(&d, &shape, 1e-2, &cfg, None).unwrap();
        let alo = alo_metric(&d, &res).unwrap().j_alo;
        let lo = exact_lo_metric_from(&d, &shape, 1e-2, &cfg, &res.factors).unwrap();
        assert!((alo - lo).abs() / lo <= 0.1, "{alo} vs {lo}");
    }

    fn grid_argmin(d: &DataSet, shape: &KroneckerShape, points: usize) -> f64 {
        let opts = AlphaSearchOptions {
            mode: SearchMode::Grid(points),
            ..AlphaSearchOptions::default()
        };
        select_alpha_alo_with(d, shape, &AlsConfig::default(), &opts).unwrap().alpha_hat
    }

    #[test]
    fn pure_noise_selects_strong_shrinkage() {
        let shape = KroneckerShape::new(3, 4, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = DMatrix::from_fn(12, 80, |_, _| gauss(&mut rng));
        let y = DVector::from_fn(80, |_, _| gauss(&mut rng));
        let d = DataSet::new(x, y).unwrap();
        let res = select_alpha_alo(&d, &shape, &AlsConfig::default(), search::DEFAULT_BRACKET).unwrap();
        let mid = -3.0;
        assert!(res.alpha_hat.log10() > mid, "{}", res.alpha_hat);
        assert!(grid_argmin(&d, &shape, 50).log10() > mid);
        for ev in &res.evaluations {
            assert!(res.j_alo_at_min <= ev.j_alo + 1e-12);
        }
    }

    #[test]
    fn noiseless_selects_weak_shrinkage() {
        let shape = KroneckerShape::new(3, 4, 2).unwrap();
        let d = planted(&shape, 200, 0.0, 9);
        let res = select_alpha_alo(&d, &shape, &AlsConfig::default(), search::DEFAULT_BRACKET).unwrap();
        assert!(res.alpha_hat.log10() < -3.0, "{}", res.alpha_hat);
        assert!(grid_argmin(&d, &shape, 50).log10() < -3.0);
    }

    #[test]
    fn degenerate_bracket_and_determinism() {
        let shape = KroneckerShape::new(3, 4, 2).unwrap();
        let d = planted(&shape, 50, 0.5, 10);
        let res = select_alpha_alo(&d, &shape, &AlsConfig::default(), (1e-2 / 1.0001, 1e-2)).unwrap();
        assert_eq!(res.evaluations.len(), 1);
        assert!((res.alpha_hat - 1e-2).abs() < 1e-5);

        let a = select_alpha_alo(&d, &shape, &AlsConfig::default(), search::DEFAULT_BRACKET).unwrap();
        let b = select_alpha_alo(&d, &shape, &AlsConfig::default(), search::DEFAULT_BRACKET).unwrap();
        assert_eq!(a.alpha_hat.to_bits(), b.alpha_hat.to_bits());
    }
}
