//! System-identification experiments: synthetic data, true filters, quality
//! metrics and Monte Carlo sweeps.

pub mod config;
pub mod filter;
pub mod metrics;
pub mod signal;
pub mod sweep;
pub mod validate;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub use config::{ExperimentConfig, IrSource, MethodSpec};
pub use filter::{make_true_filter, TrueFilter};
pub use metrics::{misalignment, nuclear_norm, rank_estimate};
pub use signal::{ar1_generate, embed_delay_line, synthesize_dataset};
pub use sweep::{run_sweep, SummaryRow, SweepOutput, SweepRecord};

/// Generator for one independent stream of a seeded experiment.
///
/// Stream 0 draws the true filter; realization `k` uses streams `2k + 1`
/// (input signal) and `2k + 2` (noise).
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
