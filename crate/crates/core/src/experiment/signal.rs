//! Input signals and the noisy system output.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use super::config::ExperimentConfig;
use super::filter::TrueFilter;
use super::stream_rng;
use crate::error::{Error, Result};
use crate::ridge::DataSet;

/// About ten time constants of the AR(1) recursion.
pub fn default_burn_in(a: f64) -> usize {
    10 * (1.0 / (1.0 - a.abs())).ceil() as usize
}

fn ar1_from_rng(length: usize, a: f64, burn_in: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    if !(a.abs() < 1.0) {
        return Err(Error::NonStationary(a));
    }
    let mut state = 0.0;
    let mut out = Vec::with_capacity(length);
    for i in 0..burn_in + length {
        let u: f64 = rng.sample(StandardNormal);
        state = a * state + u;
        if i >= burn_in {
            out.push(state);
        }
    }
    Ok(out)
}

/// `x(n) = a·x(n−1) + u(n)` with unit-variance Gaussian `u`, dropping the
/// first `burn_in` samples.
pub fn ar1_generate(length: usize, a: f64, seed: u64, burn_in: usize) -> Result<Vec<f64>> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    ar1_from_rng(length, a, burn_in, &mut rng)
}

/// Tapped-delay-line embedding of the last `n + m − 1` samples of `stream`.
///
/// Column `j` is `[x(t), x(t−1), …, x(t−m+1)]` with `t` the `j`-th of the
/// final `n` time indices.
pub fn embed_delay_line(stream: &[f64], m: usize, n: usize) -> Result<DMatrix<f64>> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument("delay line needs m ≥ 1 and n ≥ 1".into()));
    }
    let need = n + m - 1;
    if stream.len() < need {
        return Err(Error::InvalidArgument(format!(
            "stream of {} samples is shorter than n + m − 1 = {need}",
            stream.len()
        )));
    }
    let offset = stream.len() - n;
    Ok(DMatrix::from_fn(m, n, |i, j| stream[offset + j - i]))
}

/// One realization of `y(n) = hᵀx(n) + e(n)`.
///
/// The noise variance is the realized clean-output power divided by
/// `10^(SNR/10)`; an infinite SNR disables the noise.
pub fn synthesize_dataset(cfg: &ExperimentConfig, tf: &TrueFilter, realization_seed: u64) -> Result<DataSet> {
    let m = tf.h.len();
    let n = cfg.n_samples;
    let mut input_rng = stream_rng(cfg.seed, 2 * realization_seed + 1);
    let stream = ar1_from_rng(n + m - 1, cfg.ar_coeff, default_burn_in(cfg.ar_coeff), &mut input_rng)?;
    let x = embed_delay_line(&stream, m, n)?;
    let clean = x.tr_mul(&tf.h);
    let y = if cfg.snr_db == f64::INFINITY {
        clean
    } else {
        let power = clean.norm_squared() / n as f64;
        let sigma = (power / 10f64.powf(cfg.snr_db / 10.0)).sqrt();
        let mut noise_rng = stream_rng(cfg.seed, 2 * realization_seed + 2);
        let noise = DVector::from_fn(n, |_, _| sigma * noise_rng.sample::<f64, _>(StandardNormal));
        clean + noise
    };
    DataSet::new(x, y)
}
