//! True impulse responses: loaded from text files or synthesized.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::config::IrSource;
use super::stream_rng;
use crate::error::{Error, Result};
use crate::tensor_ops::{self, KroneckerShape};

/// The system being identified, as a vector `h` and as `H = mat(h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueFilter {
    pub h: DVector<f64>,
    pub h_mat: DMatrix<f64>,
}

impl TrueFilter {
    pub fn from_matrix(h_mat: DMatrix<f64>) -> Result<Self> {
        if !h_mat.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("impulse response"));
        }
        if !(h_mat.norm() > 0.0) {
            return Err(Error::InvalidArgument("impulse response must be non-zero".into()));
        }
        Ok(Self {
            h: tensor_ops::vec(&h_mat),
            h_mat,
        })
    }

    pub fn from_vector(h: &DVector<f64>, shape: &KroneckerShape) -> Result<Self> {
        Self::from_matrix(tensor_ops::mat(h, shape.m1, shape.m2)?)
    }
}

/// Reads one coefficient per line; `#` comment lines and blank lines are skipped.
pub fn read_ir_file(path: &Path, expected: usize) -> Result<DVector<f64>> {
    let text = fs::read_to_string(path)?;
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut values = Vec::with_capacity(expected);
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        last_line = idx + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| parse_err(idx + 1, format!("not a number: {line:?}")))?;
        if !v.is_finite() {
            return Err(parse_err(idx + 1, format!("non-finite coefficient {line}")));
        }
        if values.len() == expected {
            return Err(parse_err(idx + 1, format!("more than {expected} coefficients")));
        }
        values.push(v);
    }
    if values.len() != expected {
        return Err(parse_err(
            last_line,
            format!("expected {expected} coefficients, found {}", values.len()),
        ));
    }
    Ok(DVector::from_vec(values))
}

/// First `k` columns of the Q factor of a Gaussian `rows × k` matrix.
fn random_orthonormal(rows: usize, k: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(rows, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    g.qr().q().columns(0, k).into_owned()
}

pub fn make_true_filter(src: &IrSource, shape: &KroneckerShape, seed: u64) -> Result<TrueFilter> {
    let m = shape.m();
    match src {
        IrSource::File(path) => TrueFilter::from_vector(&read_ir_file(path, m)?, shape),
        IrSource::SyntheticLowrank { rank, decay } => {
            if *rank == 0 || *rank > shape.max_rank() {
                return Err(Error::InvalidArgument(format!(
                    "synthetic rank {rank} outside 1..={}",
                    shape.max_rank()
                )));
            }
            if !(*decay > 0.0 && decay.is_finite()) {
                return Err(Error::InvalidArgument(format!("decay {decay} must be > 0")));
            }
            let mut rng = stream_rng(seed, 0);
            let q = random_orthonormal(shape.m1, *rank, &mut rng);
            let v = random_orthonormal(shape.m2, *rank, &mut rng);
            let s = DVector::from_fn(*rank, |i, _| decay.powi(i as i32));
            let h = q * DMatrix::from_diagonal(&s) * v.transpose();
            let norm = h.norm();
            TrueFilter::from_matrix(h / norm)
        }
        IrSource::SyntheticSparseExponential { delay, decay } => {
            if *delay >= m {
                return Err(Error::InvalidArgument(format!(
                    "delay {delay} leaves no taps in a length-{m} response"
                )));
            }
            if !(*decay >= 0.0 && decay.is_finite()) {
                return Err(Error::InvalidArgument(format!("decay {decay} must be ≥ 0")));
            }
            let mut rng = stream_rng(seed, 0);
            let h = DVector::from_fn(m, |i, _| {
                if i < *delay {
                    0.0
                } else {
                    let g: f64 = rng.sample(StandardNormal);
                    g * (-decay * (i - delay) as f64).exp()
                }
            });
            let norm = h.norm();
            TrueFilter::from_vector(&(h / norm), shape)
        }
    }
}
