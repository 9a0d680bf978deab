//! Alternating least squares for the equal-penalty factor problem
//!
//! ```text
//! min  (1/N)‖y − Xᵀ vec(U⁽¹⁾U⁽²⁾ᵀ)‖² + α‖U⁽¹⁾‖_F² + α‖U⁽²⁾‖_F²
//! ```
//!
//! With one factor held fixed the problem is a ridge regression in the other,
//! `u⁽ᵏ⁾ = (Aᵀ R_x A + αI)⁻¹ Aᵀ r_xy` with `A = A⁽ᵏ⁾` built from the fixed
//! factor. Each half-iteration is an exact minimization, so the objective
//! never increases.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::ridge::{self, DataSet, Moments};
use crate::tensor_ops::{self, FactorPair, KroneckerShape, Side};

/// Smallest α accepted by the solver; the subproblems need `αI` to be
/// positive definite.
pub const MIN_ALPHA: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlsConfig {
    /// Maximum number of outer iterations (each updates both factors).
    pub iterations: usize,
    /// Stop once the relative objective decrease over an outer iteration
    /// falls below this.
    pub rel_tol: f64,
    /// Keep the objective after every half-iteration.
    pub record_trace: bool,
}

impl Default for AlsConfig {
    fn default() -> Self {
        Self {
            iterations: 20,
            rel_tol: 1e-8,
            record_trace: false,
        }
    }
}

impl AlsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("ALS needs at least one iteration".into()));
        }
        if !(self.rel_tol >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "rel_tol = {} must be ≥ 0",
                self.rel_tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlsResult {
    pub factors: FactorPair,
    /// Objective after each half-iteration, when requested.
    pub objective_trace: Vec<f64>,
    pub alpha: f64,
    /// `true` when the relative-decrease test stopped the loop early.
    pub converged: bool,
    pub iterations_run: usize,
}

impl AlsResult {
    /// `vec(Ŵ)`.
    pub fn filter(&self) -> DVector<f64> {
        tensor_ops::reconstruct(&self.factors).1
    }

    pub fn filter_matrix(&self) -> DMatrix<f64> {
        tensor_ops::reconstruct(&self.factors).0
    }
}

/// Objective with separate penalties on the two factors.
pub fn objective_split(d: &DataSet, fp: &FactorPair, alpha1: f64, alpha2: f64) -> f64 {
    let (_, w) = tensor_ops::reconstruct(fp);
    assert_eq!(w.len(), d.m(), "factor pair does not match the data dimension");
    let fit = d.residuals(&w).norm_squared() / d.n() as f64;
    fit + alpha1 * fp.u1.norm_squared() + alpha2 * fp.u2.norm_squared()
}

/// The equal-penalty objective.
pub fn objective(d: &DataSet, fp: &FactorPair, alpha: f64) -> f64 {
    objective_split(d, fp, alpha, alpha)
}

/// Balanced rank-`r` split of `mat(w_full)`: with the truncated SVD
/// `Q diag(s) Vᵀ`, returns `U⁽¹⁾ = Q diag(√s)` and `U⁽²⁾ = V diag(√s)`.
pub fn svd_init(w_full: &DVector<f64>, shape: &KroneckerShape) -> Result<FactorPair> {
    shape.validate()?;
    let w = tensor_ops::mat(w_full, shape.m1, shape.m2)?;
    let svd = w.svd(true, true);
    let (q, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => unreachable!("SVD requested with both singular-vector sets"),
    };
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|a, b| s[*b].total_cmp(&s[*a]));

    let mut u1 = DMatrix::zeros(shape.m1, shape.r);
    let mut u2 = DMatrix::zeros(shape.m2, shape.r);
    for (col, &idx) in order.iter().take(shape.r).enumerate() {
        let root = s[idx].max(0.0).sqrt();
        u1.set_column(col, &(q.column(idx) * root));
        u2.set_column(col, &(vt.row(idx).transpose() * root));
    }
    FactorPair::new(u1, u2)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= MIN_ALPHA && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "ALS needs alpha ≥ {MIN_ALPHA:e}, got {alpha:e}"
        )));
    }
    Ok(())
}

fn check_data(d: &DataSet, shape: &KroneckerShape) -> Result<()> {
    shape.validate()?;
    if d.m() != shape.m() {
        return Err(Error::Dimension(format!(
            "data dimension {} differs from m1·m2 = {}",
            d.m(),
            shape.m()
        )));
    }
    Ok(())
}

/// Exact minimizer over factor `side` with the other one held fixed.
pub(crate) fn update_factor(
    moments: &Moments,
    fp: &mut FactorPair,
    side: Side,
    shape: &KroneckerShape,
    alpha: f64,
) -> Result<()> {
    let a = tensor_ops::build_factor_matrix(side, fp, shape)?.into_matrix();
    let ra = &moments.rxx * &a;
    let mut lhs = a.tr_mul(&ra);
    // Symmetrize before factorizing; the product is only symmetric up to rounding.
    lhs = (&lhs + lhs.transpose()) * 0.5;
    for i in 0..lhs.nrows() {
        lhs[(i, i)] += alpha;
    }
    let rhs = a.tr_mul(&moments.rxy);
    let err = || Error::AlsSolve {
        k: side.index(),
        alpha,
    };
    let u = ridge::solve_symmetric(lhs, &rhs).ok_or_else(err)?;
    let rows = match side {
        Side::One => shape.m1,
        Side::Two => shape.m2,
    };
    let updated = tensor_ops::mat(&u, rows, shape.r)?;
    match side {
        Side::One => fp.u1 = updated,
        Side::Two => fp.u2 = updated,
    }
    Ok(())
}

/// One exact update of factor `side`.
pub fn als_subproblem(
    d: &DataSet,
    fp: &FactorPair,
    side: Side,
    shape: &KroneckerShape,
    alpha: f64,
) -> Result<FactorPair> {
    check_alpha(alpha)?;
    check_data(d, shape)?;
    fp.check_shape(shape)?;
    let moments = ridge::empirical_moments(d);
    let mut out = fp.clone();
    update_factor(&moments, &mut out, side, shape, alpha)?;
    Ok(out)
}

/// Runs ALS from `init`, or from the balanced SVD split of the full-rank
/// ridge filter at the same α when `init` is `None`.
pub fn als_run(
    d: &DataSet,
    shape: &KroneckerShape,
    alpha: f64,
    cfg: &AlsConfig,
    init: Option<&FactorPair>,
) -> Result<AlsResult> {
    let moments = ridge::empirical_moments(d);
    als_run_with_moments(d, &moments, shape, alpha, cfg, init)
}

/// [`als_run`] with the moments of `d` supplied by the caller.
pub fn als_run_with_moments(
    d: &DataSet,
    moments: &Moments,
    shape: &KroneckerShape,
    alpha: f64,
    cfg: &AlsConfig,
    init: Option<&FactorPair>,
) -> Result<AlsResult> {
    check_alpha(alpha)?;
    cfg.validate()?;
    check_data(d, shape)?;

    let mut fp = match init {
        Some(fp) => {
            fp.check_shape(shape)?;
            fp.clone()
        }
        None => svd_init(&ridge::ridge_solve(moments, alpha)?, shape)?,
    };

    let mut trace = Vec::new();
    let mut prev = objective(d, &fp, alpha);
    let mut converged = false;
    let mut iterations_run = 0;
    for _ in 0..cfg.iterations {
        iterations_run += 1;
        update_factor(moments, &mut fp, Side::One, shape, alpha)?;
        if cfg.record_trace {
            trace.push(objective(d, &fp, alpha));
        }
        update_factor(moments, &mut fp, Side::Two, shape, alpha)?;
        let current = objective(d, &fp, alpha);
        if cfg.record_trace {
            trace.push(current);
        }
        let decrease = (prev - current) / prev.abs().max(f64::MIN_POSITIVE);
        prev = current;
        if decrease < cfg.rel_tol {
            converged = true;
            break;
        }
    }

    Ok(AlsResult {
        factors: fp,
        objective_trace: trace,
        alpha,
        converged,
        iterations_run,
    })
}
