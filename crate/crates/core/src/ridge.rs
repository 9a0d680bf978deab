//! Empirical moments, the full-rank ridge filter and its exact leave-one-out
//! (PRESS) criterion.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::search::{self, Minimum};

/// Input matrix `X` (`M × N`, one sample per column) and outputs `y` (`N`).
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl DataSet {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.ncols() == 0 {
            return Err(Error::InvalidArgument("data set needs at least one sample".into()));
        }
        if x.ncols() != y.len() {
            return Err(Error::Dimension(format!(
                "X has {} columns but y has {} entries",
                x.ncols(),
                y.len()
            )));
        }
        if !x.iter().chain(y.iter()).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("data set"));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    /// Number of samples `N`.
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Input dimension `M`.
    pub fn m(&self) -> usize {
        self.x.nrows()
    }

    /// The data set with sample `index` removed.
    pub fn without(&self, index: usize) -> Result<DataSet> {
        if self.n() < 2 || index >= self.n() {
            return Err(Error::InvalidArgument(format!(
                "cannot remove sample {index} from a set of {}",
                self.n()
            )));
        }
        Ok(Self {
            x: self.x.clone().remove_column(index),
            y: self.y.clone().remove_row(index),
        })
    }

    /// Residuals `y − Xᵀw`.
    pub fn residuals(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.y - self.x.tr_mul(w)
    }
}

/// Time-averaged second-order statistics `R_x = XXᵀ/N`, `r_xy = Xy/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub rxx: DMatrix<f64>,
    pub rxy: DVector<f64>,
}

pub fn empirical_moments(d: &DataSet) -> Moments {
    let n = d.n() as f64;
    let x = d.x();
    Moments {
        rxx: (x * x.transpose()) / n,
        rxy: (x * d.y()) / n,
    }
}

/// Pivots below this fraction of the largest diagonal entry count as zero.
const PIVOT_RTOL: f64 = 1e-13;

/// Solves `a v = b` for symmetric `a`, by Cholesky when `a` is positive
/// definite and by partially pivoted LU otherwise. Returns `None` when `a` is
/// numerically singular or the result is not finite.
pub(crate) fn solve_symmetric(a: DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = a.diagonal().amax();
    if !(scale > 0.0) {
        return None;
    }
    let v = match a.clone().cholesky() {
        Some(ch) => {
            let min_pivot = ch.l_dirty().diagonal().iter().fold(f64::INFINITY, |m, l| m.min(l * l));
            if min_pivot <= PIVOT_RTOL * scale {
                return None;
            }
            ch.solve(b)
        }
        None => {
            let lu = a.lu();
            let min_pivot = lu.u().diagonal().amin();
            if min_pivot <= PIVOT_RTOL * scale {
                return None;
            }
            lu.solve(b)?
        }
    };
    v.iter().all(|x| x.is_finite()).then_some(v)
}

fn regularized(rxx: &DMatrix<f64>, alpha: f64) -> DMatrix<f64> {
    let mut a = rxx.clone();
    for i in 0..a.nrows() {
        a[(i, i)] += alpha;
    }
    a
}

/// Full-rank ridge filter `(R_x + αI)⁻¹ r_xy`.
pub fn ridge_solve(m: &Moments, alpha: f64) -> Result<DVector<f64>> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must be ≥ 0")));
    }
    solve_symmetric(regularized(&m.rxx, alpha), &m.rxy).ok_or(Error::Singular)
}

/// Exact leave-one-out error of the ridge filter, via leverages.
///
/// Leaving sample `n` out keeps the penalty `Nα` on the unnormalized sum of
/// squares, so the result equals `N` independent ridge re-solves exactly.
pub fn press_loocv(d: &DataSet, alpha: f64) -> Result<f64> {
    press_with_moments(d, &empirical_moments(d), alpha)
}

fn press_with_moments(d: &DataSet, m: &Moments, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must be > 0")));
    }
    let n = d.n() as f64;
    let chol = regularized(&m.rxx, alpha).cholesky().ok_or(Error::Singular)?;
    let w = chol.solve(&m.rxy);
    let resid = d.residuals(&w);
    let whitened = chol.l().solve_lower_triangular(d.x()).ok_or(Error::Singular)?;
    let mut acc = 0.0;
    for (i, col) in whitened.column_iter().enumerate() {
        let h = col.norm_squared() / n;
        if h >= 1.0 {
            return Err(Error::DegenerateLeverage { index: i, value: h });
        }
        let e = resid[i] / (1.0 - h);
        acc += e * e;
    }
    Ok(acc / n)
}

/// Picks α minimizing PRESS by golden-section search over `log₁₀ α`.
pub fn select_alpha_ridge(d: &DataSet, bracket: (f64, f64)) -> Result<(f64, f64)> {
    select_alpha_ridge_with_tol(d, bracket, search::DEFAULT_LOG_TOL)
}

pub fn select_alpha_ridge_with_tol(d: &DataSet, bracket: (f64, f64), log_tol: f64) -> Result<(f64, f64)> {
    let m = empirical_moments(d);
    let Minimum { alpha, value, .. } = search::golden_section_log(bracket.0, bracket.1, log_tol, |a| {
        let v = press_with_moments(d, &m, a)?;
        if !v.is_finite() {
            return Err(Error::NonFinitePress { alpha: a });
        }
        Ok(v)
    })?;
    Ok((alpha, value))
}
