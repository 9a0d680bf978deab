//! One-dimensional searches over a regularization parameter on a log scale.

use crate::error::{Error, Result};

/// Default search bracket for α.
pub const DEFAULT_BRACKET: (f64, f64) = (1e-8, 1e2);

/// Golden-section stopping width, in log₁₀ units.
pub const DEFAULT_LOG_TOL: f64 = 1e-3;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

pub fn check_bracket(lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < hi) {
        return Err(Error::InvalidArgument(format!(
            "bracket [{lo:e}, {hi:e}] must satisfy 0 < lo < hi"
        )));
    }
    Ok(())
}

/// Point returned by [`golden_section_log`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub alpha: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Minimizes `f(α)` over `log₁₀ α ∈ [log₁₀ lo, log₁₀ hi]` by golden-section
/// search, stopping once the log-bracket is narrower than `log_tol`.
///
/// The returned point is the best one evaluated. NaN values compare as
/// `+∞`, so callers may map failed evaluations to `f64::INFINITY`.
pub fn golden_section_log<F, E>(lo: f64, hi: f64, log_tol: f64, mut f: F) -> Result<Minimum, E>
where
    F: FnMut(f64) -> Result<f64, E>,
    E: From<Error>,
{
    check_bracket(lo, hi)?;
    let mut a = lo.log10();
    let mut b = hi.log10();
    let mut evaluations = 0;
    let mut best = Minimum {
        alpha: f64::NAN,
        value: f64::INFINITY,
        evaluations: 0,
    };
    let mut eval = |t: f64, evaluations: &mut usize, best: &mut Minimum| -> Result<f64, E> {
        let alpha = 10f64.powf(t).clamp(lo, hi);
        let v = f(alpha)?;
        let v = if v.is_nan() { f64::INFINITY } else { v };
        *evaluations += 1;
        if v < best.value || best.alpha.is_nan() {
            best.alpha = alpha;
            best.value = v;
        }
        Ok(v)
    };

    if b - a <= log_tol {
        eval(0.5 * (a + b), &mut evaluations, &mut best)?;
        best.evaluations = evaluations;
        return Ok(best);
    }

    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = eval(x1, &mut evaluations, &mut best)?;
    let mut f2 = eval(x2, &mut evaluations, &mut best)?;
    while b - a > log_tol {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = eval(x1, &mut evaluations, &mut best)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = eval(x2, &mut evaluations, &mut best)?;
        }
    }
    best.evaluations = evaluations;
    Ok(best)
}

/// `n` log-spaced points from `lo` to `hi`, endpoints included.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    check_bracket(lo, hi)?;
    if n == 0 {
        return Err(Error::InvalidArgument("grid needs at least one point".into()));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.log10(), hi.log10());
    let step = (b - a) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                10f64.powf(a + step * i as f64)
            }
        })
        .collect())
}
