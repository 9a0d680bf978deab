//! Command-line front end: Monte Carlo sweeps to CSV and the oracle checks.
//!
//! ```text
//! kronfilter sweep-alpha --config desk.toml --ranks 2,8 --out alpha.csv
//! kronfilter sweep-rank --snr-db 20 --n-samples 400 --out rank.csv
//! kronfilter sweep --methods full_rank_press,kron_alo:4
//! kronfilter validate
//! ```

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

use kronfilter::experiment::config::{ExperimentConfig, IrSource, MethodSpec};
use kronfilter::experiment::sweep::{run_sweep, sweep_alpha_methods, sweep_rank_methods};
use kronfilter::experiment::validate::{alo_desk_config, alo_suite, press_suite, SuiteReport};
use kronfilter::search::log_grid;
use kronfilter::{Error, Result};

#[derive(Parser)]
#[command(name = "kronfilter", version, about = "Low-rank Kronecker filter estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fixed-α estimates over a log grid for a set of ranks.
    SweepAlpha {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Construction ranks (default: the configured `r`).
        #[arg(long, value_delimiter = ',')]
        ranks: Vec<usize>,
        /// Grid points across the bracket.
        #[arg(long, default_value_t = 25)]
        alpha_points: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// PRESS baseline plus ALO, near-zero α and oracle for R = 1..min(M1, M2).
    SweepRank {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 50)]
        oracle_grid: usize,
        #[arg(long, default_value_t = 1e-8)]
        near_zero_alpha: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Runs the configured `methods` as given.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// PRESS and ALO oracle suites; exits non-zero on any failure.
    Validate {
        /// Overrides apply on top of the small ALO check configuration.
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 20)]
        press_instances: usize,
        #[arg(long, default_value_t = 10)]
        alo_seeds: u64,
        /// Print every case, not only the summary line.
        #[arg(long)]
        verbose: bool,
    },
}

#[derive(Args)]
struct OutArgs {
    /// CSV destination (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A TOML file plus one override flag per configuration field.
#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m1: Option<usize>,
    #[arg(long)]
    m2: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    n_samples: Option<usize>,
    /// `inf` disables the noise.
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    ar_coeff: Option<f64>,
    #[arg(long)]
    n_realizations: Option<usize>,
    /// `lowrank:RANK:DECAY`, `sparse:DELAY:DECAY` or `file:PATH`.
    #[arg(long)]
    ir_source: Option<IrSource>,
    /// Comma-separated, e.g. `full_rank_press,kron_alo:8,kron_oracle:8:50`.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<MethodSpec>>,
    #[arg(long)]
    seed: Option<u64>,
    /// `LO,HI`
    #[arg(long, value_parser = parse_bracket)]
    bracket: Option<(f64, f64)>,
    #[arg(long)]
    als_iterations: Option<usize>,
    #[arg(long)]
    als_rel_tol: Option<f64>,
    #[arg(long, action = ArgAction::Set)]
    warm_start: Option<bool>,
    /// `golden` or `grid:POINTS`.
    #[arg(long)]
    search: Option<String>,
    #[arg(long)]
    rank_tol: Option<f64>,
    #[arg(long, action = ArgAction::Set)]
    record_timing: Option<bool>,
}

fn parse_bracket(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected LO,HI")?;
    let lo = lo.trim().parse().map_err(|_| format!("bad lower bound {lo:?}"))?;
    let hi = hi.trim().parse().map_err(|_| format!("bad upper bound {hi:?}"))?;
    Ok((lo, hi))
}

impl ConfigArgs {
    fn resolve(&self, base: ExperimentConfig) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => base,
        };
        macro_rules! set {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = &self.$field { $target = v.clone(); })*
            };
        }
        set! {
            m1 => c.shape.m1,
            m2 => c.shape.m2,
            r => c.shape.r,
            n_samples => c.n_samples,
            snr_db => c.snr_db,
            ar_coeff => c.ar_coeff,
            n_realizations => c.n_realizations,
            ir_source => c.ir_source,
            methods => c.methods,
            seed => c.seed,
            bracket => c.bracket,
            als_iterations => c.als_iterations,
            als_rel_tol => c.als_rel_tol,
            warm_start => c.warm_start,
            search => c.search,
            rank_tol => c.rank_tol,
            record_timing => c.record_timing,
        }
        Ok(c)
    }
}

fn write_sweep(cfg: &ExperimentConfig, out: &OutArgs) -> Result<()> {
    let result = run_sweep(cfg)?;
    match &out.out {
        Some(path) => {
            let mut f = BufWriter::new(File::create(path)?);
            result.write_csv(&mut f)?;
            f.flush()?;
        }
        None => result.write_csv(io::stdout().lock())?,
    }
    let failed = result.records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} of {} cells failed; see the error column", result.records.len());
    }
    Ok(())
}

fn report(suite: &SuiteReport, verbose: bool) -> bool {
    if verbose {
        for c in &suite.cases {
            println!(
                "  {} {}: reference {:.6e}, estimate {:.6e}, rel error {:.3e}",
                if c.passed { "ok  " } else { "FAIL" },
                c.label,
                c.reference,
                c.estimate,
                c.rel_error
            );
        }
    }
    let passed = suite.passed();
    println!(
        "{} {}: {} cases, worst rel error {:.3e} (tol {:.1e})",
        if passed { "PASS" } else { "FAIL" },
        suite.name,
        suite.cases.len(),
        suite.worst(),
        suite.tolerance
    );
    passed
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::SweepAlpha {
            cfg,
            ranks,
            alpha_points,
            out,
        } => {
            let mut c = cfg.resolve(ExperimentConfig::default())?;
            let ranks = if ranks.is_empty() {
                vec![c.shape.r]
            } else {
                c.shape.r = c.shape.max_rank();
                ranks
            };
            let alphas = log_grid(c.bracket.0, c.bracket.1, alpha_points)?;
            c.methods = sweep_alpha_methods(&ranks, &alphas);
            write_sweep(&c, &out)?;
        }
        Command::SweepRank {
            cfg,
            oracle_grid,
            near_zero_alpha,
            out,
        } => {
            let mut c = cfg.resolve(ExperimentConfig::default())?;
            // Every rank is swept, so the configured one only needs to be valid.
            c.shape.r = c.shape.max_rank();
            c.methods = sweep_rank_methods(&c.shape, near_zero_alpha, oracle_grid);
            write_sweep(&c, &out)?;
        }
        Command::Sweep { cfg, out } => {
            let c = cfg.resolve(ExperimentConfig::default())?;
            if c.methods.is_empty() {
                return Err(Error::Config("no methods configured".into()));
            }
            write_sweep(&c, &out)?;
        }
        Command::Validate {
            cfg,
            press_instances,
            alo_seeds,
            verbose,
        } => {
            let c = cfg.resolve(alo_desk_config())?;
            let press_ok = report(&press_suite(press_instances, c.seed)?, verbose);
            let alo_ok = report(&alo_suite(&c, alo_seeds)?, verbose);
            return Ok(press_ok && alo_ok);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
