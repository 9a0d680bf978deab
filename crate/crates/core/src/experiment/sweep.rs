//! Monte Carlo sweeps and their CSV output.

use std::io::Write;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::config::{ExperimentConfig, MethodSpec};
use super::filter::{make_true_filter, TrueFilter};
use super::metrics::{misalignment, nuclear_norm, rank_estimate};
use super::signal::synthesize_dataset;
use crate::alo::{self, AlphaSearchOptions};
use crate::als::{self, AlsConfig};
use crate::error::{Error, Result};
use crate::ridge::{self, DataSet, Moments};
use crate::search;
use crate::tensor_ops::{self, KroneckerShape};

/// Environment variable capping realization parallelism.
pub const THREADS_ENV: &str = "KRONFILTER_THREADS";

pub const CSV_HEADER: [&str; 10] = [
    "kind",
    "method",
    "r",
    "alpha",
    "misalignment_db",
    "rank_hat",
    "nuclear_norm",
    "seed",
    "wall_time_s",
    "error",
];

/// One method applied to one realization.
///
/// When `error` is set the numeric fields are meaningless and are left blank
/// in the CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub method: String,
    pub r: usize,
    pub alpha: f64,
    pub misalignment_db: f64,
    pub rank_hat: usize,
    pub nuclear_norm: f64,
    pub realization_seed: u64,
    pub wall_time_s: f64,
    pub error: Option<String>,
}

/// Means over the successful realizations of one method spec.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub r: usize,
    pub alpha: f64,
    pub misalignment_db: f64,
    pub rank_hat: f64,
    pub nuclear_norm: f64,
    pub wall_time_s: f64,
    pub n_ok: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    /// Ordered by method spec, then realization.
    pub records: Vec<SweepRecord>,
    /// One row per method spec, in configuration order.
    pub summary: Vec<SummaryRow>,
}

struct Estimate {
    alpha: f64,
    w: DMatrix<f64>,
}

fn threads_from_env() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

fn full_rank_matrix(w: &nalgebra::DVector<f64>, shape: &KroneckerShape) -> Result<DMatrix<f64>> {
    tensor_ops::mat(w, shape.m1, shape.m2)
}

fn estimate(
    method: &MethodSpec,
    cfg: &ExperimentConfig,
    d: &DataSet,
    moments: &Moments,
    tf: &TrueFilter,
    als_cfg: &AlsConfig,
    opts: &AlphaSearchOptions,
) -> Result<Estimate> {
    match *method {
        MethodSpec::FullRankPress => {
            let (alpha, _) = ridge::select_alpha_ridge(d, cfg.bracket)?;
            let w = full_rank_matrix(&ridge::ridge_solve(moments, alpha)?, &cfg.shape)?;
            Ok(Estimate { alpha, w })
        }
        MethodSpec::FullRankFixedAlpha { alpha } => {
            let w = full_rank_matrix(&ridge::ridge_solve(moments, alpha)?, &cfg.shape)?;
            Ok(Estimate { alpha, w })
        }
        MethodSpec::KronAlo { r } => {
            let shape = cfg.shape.with_rank(r)?;
            let res = alo::select_alpha_alo_with(d, &shape, als_cfg, opts)?;
            Ok(Estimate {
                alpha: res.alpha_hat,
                w: res.final_solution.filter_matrix(),
            })
        }
        MethodSpec::KronFixedAlpha { r, alpha } => {
            let shape = cfg.shape.with_rank(r)?;
            let res = als::als_run_with_moments(d, moments, &shape, alpha, als_cfg, None)?;
            Ok(Estimate {
                alpha,
                w: res.filter_matrix(),
            })
        }
        MethodSpec::KronOracle { r, grid } => {
            let shape = cfg.shape.with_rank(r)?;
            let alphas = search::log_grid(cfg.bracket.0, cfg.bracket.1, grid)?;
            let mut best: Option<(f64, Estimate)> = None;
            for res in alo::solve_path(d, moments, &shape, &alphas, als_cfg, opts.warm_start)
                .into_iter()
                .flatten()
            {
                let w = res.filter_matrix();
                let m = misalignment(&w, tf);
                if best.as_ref().is_none_or(|(b, _)| m < *b) {
                    best = Some((m, Estimate { alpha: res.alpha, w }));
                }
            }
            best.map(|(_, e)| e).ok_or(Error::SearchFailed {
                lo: cfg.bracket.0,
                hi: cfg.bracket.1,
            })
        }
    }
}

fn run_realization(cfg: &ExperimentConfig, tf: &TrueFilter, realization: u64) -> Vec<SweepRecord> {
    let als_cfg = cfg.als_config();
    let opts = cfg.search_options();
    let data = synthesize_dataset(cfg, tf, realization);
    let moments = data.as_ref().ok().map(ridge::empirical_moments);

    cfg.methods
        .iter()
        .map(|method| {
            let start = Instant::now();
            let outcome = match (&data, &moments, &opts) {
                (Ok(d), Some(mo), Ok(o)) => estimate(method, cfg, d, mo, tf, &als_cfg, o),
                (Err(e), _, _) | (_, _, Err(e)) => Err(Error::Config(e.to_string())),
                _ => unreachable!("moments exist whenever the dataset does"),
            };
            let wall_time_s = if cfg.record_timing { start.elapsed().as_secs_f64() } else { 0.0 };
            let mut rec = SweepRecord {
                method: method.name().to_string(),
                r: method.rank(),
                alpha: f64::NAN,
                misalignment_db: f64::NAN,
                rank_hat: 0,
                nuclear_norm: f64::NAN,
                realization_seed: realization,
                wall_time_s,
                error: None,
            };
            match outcome {
                Ok(est) if est.w.iter().all(|v| v.is_finite()) => {
                    rec.alpha = est.alpha;
                    rec.misalignment_db = misalignment(&est.w, tf);
                    rec.rank_hat = rank_estimate(&est.w, cfg.rank_tol);
                    rec.nuclear_norm = nuclear_norm(&est.w);
                }
                Ok(_) => rec.error = Some(Error::NonFinite("estimated filter").to_string()),
                Err(e) => rec.error = Some(e.to_string()),
            }
            rec
        })
        .collect()
}

fn summarize(method: &MethodSpec, rows: &[&SweepRecord]) -> SummaryRow {
    let ok: Vec<&&SweepRecord> = rows.iter().filter(|r| r.error.is_none()).collect();
    let mean = |f: &dyn Fn(&SweepRecord) -> f64| {
        if ok.is_empty() {
            f64::NAN
        } else {
            ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64
        }
    };
    let failed = rows.len() - ok.len();
    SummaryRow {
        method: method.name().to_string(),
        r: method.rank(),
        // Fixed-α cells report the exact α rather than a rounded mean.
        alpha: match ok.first() {
            Some(f) if ok.iter().all(|r| r.alpha == f.alpha) => f.alpha,
            _ => mean(&|r| r.alpha),
        },
        misalignment_db: mean(&|r| r.misalignment_db),
        rank_hat: mean(&|r| r.rank_hat as f64),
        nuclear_norm: mean(&|r| r.nuclear_norm),
        wall_time_s: mean(&|r| r.wall_time_s),
        n_ok: ok.len(),
        error: (failed > 0).then(|| {
            let first = rows.iter().find_map(|r| r.error.as_deref()).unwrap_or("");
            format!("{failed} of {} realizations failed: {first}", rows.len())
        }),
    }
}

/// Runs every method on every realization.
///
/// Realizations run concurrently on a pool sized by `KRONFILTER_THREADS`
/// (0 or unset uses all cores). Failures inside a cell are recorded on the
/// row; only an invalid configuration or true filter aborts the sweep.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let tf = make_true_filter(&cfg.ir_source, &cfg.shape, cfg.seed)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads_from_env())
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    let per_realization: Vec<Vec<SweepRecord>> = pool.install(|| {
        (0..cfg.n_realizations as u64)
            .into_par_iter()
            .map(|k| run_realization(cfg, &tf, k))
            .collect()
    });

    let mut records = Vec::with_capacity(cfg.methods.len() * cfg.n_realizations);
    let mut summary = Vec::with_capacity(cfg.methods.len());
    for (i, method) in cfg.methods.iter().enumerate() {
        let cell: Vec<&SweepRecord> = per_realization.iter().map(|rows| &rows[i]).collect();
        summary.push(summarize(method, &cell));
        records.extend(cell.into_iter().cloned());
    }
    Ok(SweepOutput { records, summary })
}

/// Full-rank and rank-`r` curves over a log-spaced α grid.
pub fn sweep_alpha_methods(ranks: &[usize], alphas: &[f64]) -> Vec<MethodSpec> {
    let mut out = Vec::with_capacity((ranks.len() + 1) * alphas.len());
    for &alpha in alphas {
        out.push(MethodSpec::FullRankFixedAlpha { alpha });
    }
    for &r in ranks {
        for &alpha in alphas {
            out.push(MethodSpec::KronFixedAlpha { r, alpha });
        }
    }
    out
}

/// The PRESS baseline plus ALO, near-zero α and oracle for every rank.
pub fn sweep_rank_methods(shape: &KroneckerShape, near_zero_alpha: f64, oracle_grid: usize) -> Vec<MethodSpec> {
    let mut out = vec![MethodSpec::FullRankPress];
    for r in 1..=shape.max_rank() {
        out.push(MethodSpec::KronAlo { r });
        out.push(MethodSpec::KronFixedAlpha { r, alpha: near_zero_alpha });
        out.push(MethodSpec::KronOracle { r, grid: oracle_grid });
    }
    out
}

/// 17 significant digits; blank for NaN.
fn float_field(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:.16e}")
    }
}

impl SweepOutput {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.into());
        w.write_record(CSV_HEADER).map_err(io)?;
        for r in &self.records {
            let ok = r.error.is_none();
            let num = |v: f64| if ok { float_field(v) } else { String::new() };
            w.write_record([
                "detail".to_string(),
                r.method.clone(),
                r.r.to_string(),
                num(r.alpha),
                num(r.misalignment_db),
                if ok { r.rank_hat.to_string() } else { String::new() },
                num(r.nuclear_norm),
                r.realization_seed.to_string(),
                float_field(r.wall_time_s),
                r.error.clone().unwrap_or_default(),
            ])
            .map_err(io)?;
        }
        for s in &self.summary {
            w.write_record([
                "summary".to_string(),
                s.method.clone(),
                s.r.to_string(),
                float_field(s.alpha),
                float_field(s.misalignment_db),
                float_field(s.rank_hat),
                float_field(s.nuclear_norm),
                String::new(),
                float_field(s.wall_time_s),
                s.error.clone().unwrap_or_default(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }

    /// First summary row with this method name and rank.
    pub fn summary_for(&self, method: &str, r: usize) -> Option<&SummaryRow> {
        self.summary.iter().find(|s| s.method == method && s.r == r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::config::IrSource;

    fn small(methods: Vec<MethodSpec>, n_realizations: usize) -> ExperimentConfig {
        ExperimentConfig {
            shape: KroneckerShape::new(3, 4, 2).unwrap(),
            n_samples: 60,
            n_realizations,
            ir_source: IrSource::SyntheticLowrank { rank: 2, decay: 0.5 },
            methods,
            seed: 11,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn one_realization_one_method() {
        let out = run_sweep(&small(vec![MethodSpec::KronAlo { r: 2 }], 1)).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.summary.len(), 1);
        let csv = out.to_csv_string().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert!(lines[1].starts_with("detail,kron_alo,2,"));
        assert!(lines[2].starts_with("summary,kron_alo,2,"));
        let rec = &out.records[0];
        assert!(rec.misalignment_db.is_finite() && rec.rank_hat <= 3);
        assert_eq!(out.summary[0].misalignment_db, rec.misalignment_db);
    }

    #[test]
    fn identical_configs_give_identical_bytes() {
        let cfg = small(
            vec![
                MethodSpec::FullRankPress,
                MethodSpec::KronAlo { r: 1 },
                MethodSpec::KronOracle { r: 2, grid: 7 },
            ],
            3,
        );
        let a = run_sweep(&cfg).unwrap().to_csv_string().unwrap();
        let b = run_sweep(&cfg).unwrap().to_csv_string().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cell_failures_are_recorded_not_fatal() {
        // α = 0 with fewer samples than taps leaves the ridge system singular.
        let mut cfg = small(
            vec![MethodSpec::FullRankFixedAlpha { alpha: 0.0 }, MethodSpec::KronAlo { r: 1 }],
            2,
        );
        cfg.n_samples = 5;
        let out = run_sweep(&cfg).unwrap();
        assert!(out.records[0].error.is_some());
        assert!(out.summary[0].error.as_deref().unwrap().starts_with("2 of 2"));
        let csv = out.to_csv_string().unwrap();
        let row = csv.lines().nth(1).unwrap();
        assert!(row.starts_with("detail,full_rank_fixed_alpha,0,,,,,0,"), "{row}");
    }

    #[test]
    fn oracle_not_worse_than_alo_on_matched_grid() {
        let mut cfg = small(
            vec![MethodSpec::KronAlo { r: 2 }, MethodSpec::KronOracle { r: 2, grid: 50 }],
            3,
        );
        cfg.search = "grid:50".into();
        let out = run_sweep(&cfg).unwrap();
        for k in 0..3 {
            let alo = &out.records[k];
            let oracle = &out.records[3 + k];
            assert!(oracle.misalignment_db <= alo.misalignment_db + 1e-9);
        }
    }

    #[test]
    fn method_lists() {
        let shape = KroneckerShape::new(3, 4, 1).unwrap();
        let m = sweep_rank_methods(&shape, 1e-8, 50);
        assert_eq!(m.len(), 1 + 3 * 3);
        assert_eq!(m[0], MethodSpec::FullRankPress);
        assert_eq!(sweep_alpha_methods(&[1, 2], &[1e-3, 1.0]).len(), 6);
    }

    #[test]
    fn float_format_has_seventeen_digits() {
        assert_eq!(float_field(0.1), "1.0000000000000001e-1");
        assert_eq!(float_field(f64::NAN), "");
        assert_eq!(float_field(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
