//! Experiment configuration and its TOML / command-line string forms.
//!
//! Impulse-response sources and method specs share one compact syntax in
//! both places:
//!
//! ```text
//! ir_source = "lowrank:3:0.5"          # synthetic rank-3, decay 0.5
//! ir_source = "sparse:10:0.05"         # zero up to tap 10, exponential tail
//! ir_source = "file:echo_path.txt"
//! methods = ["full_rank_press", "kron_alo:8", "kron_fixed_alpha:8:1e-8", "kron_oracle:8:50"]
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::alo::{AlphaSearchOptions, SearchMode};
use crate::als::AlsConfig;
use crate::error::{Error, Result};
use crate::search;
use crate::tensor_ops::KroneckerShape;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum IrSource {
    File(PathBuf),
    SyntheticLowrank { rank: usize, decay: f64 },
    SyntheticSparseExponential { delay: usize, decay: f64 },
}

fn field<T: FromStr>(s: Option<&str>, what: &str, spec: &str) -> Result<T> {
    s.ok_or_else(|| Error::Config(format!("{spec:?}: missing {what}")))?
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{spec:?}: invalid {what}")))
}

impl FromStr for IrSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut parts = rest.split(':');
        match kind.trim() {
            "file" if !rest.is_empty() => Ok(IrSource::File(PathBuf::from(rest))),
            "lowrank" | "synthetic_lowrank" => Ok(IrSource::SyntheticLowrank {
                rank: field(parts.next(), "rank", s)?,
                decay: field(parts.next(), "decay", s)?,
            }),
            "sparse" | "synthetic_sparse_exponential" => Ok(IrSource::SyntheticSparseExponential {
                delay: field(parts.next(), "delay", s)?,
                decay: field(parts.next(), "decay", s)?,
            }),
            _ => Err(Error::Config(format!("unknown impulse-response source {s:?}"))),
        }
    }
}

impl fmt::Display for IrSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IrSource::File(p) => write!(f, "file:{}", p.display()),
            IrSource::SyntheticLowrank { rank, decay } => write!(f, "lowrank:{rank}:{decay}"),
            IrSource::SyntheticSparseExponential { delay, decay } => write!(f, "sparse:{delay}:{decay}"),
        }
    }
}

impl TryFrom<String> for IrSource {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<IrSource> for String {
    fn from(s: IrSource) -> String {
        s.to_string()
    }
}

/// One estimator in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MethodSpec {
    /// Full-rank ridge with α chosen by PRESS.
    FullRankPress,
    /// Full-rank ridge at a fixed α.
    FullRankFixedAlpha { alpha: f64 },
    /// Factor model with α chosen by the ALO search.
    KronAlo { r: usize },
    KronFixedAlpha { r: usize, alpha: f64 },
    /// Factor model with the misalignment-minimizing α on a log grid.
    KronOracle { r: usize, grid: usize },
}

impl MethodSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MethodSpec::FullRankPress => "full_rank_press",
            MethodSpec::FullRankFixedAlpha { .. } => "full_rank_fixed_alpha",
            MethodSpec::KronAlo { .. } => "kron_alo",
            MethodSpec::KronFixedAlpha { .. } => "kron_fixed_alpha",
            MethodSpec::KronOracle { .. } => "kron_oracle",
        }
    }

    /// Construction rank; 0 for the unstructured full-rank filter.
    pub fn rank(&self) -> usize {
        match self {
            MethodSpec::FullRankPress | MethodSpec::FullRankFixedAlpha { .. } => 0,
            MethodSpec::KronAlo { r } | MethodSpec::KronFixedAlpha { r, .. } | MethodSpec::KronOracle { r, .. } => *r,
        }
    }
}

impl FromStr for MethodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let kind = parts.next().unwrap_or("").trim();
        let spec = match kind {
            "full_rank_press" => MethodSpec::FullRankPress,
            "full_rank_fixed_alpha" => MethodSpec::FullRankFixedAlpha {
                alpha: field(parts.next(), "alpha", s)?,
            },
            "kron_alo" => MethodSpec::KronAlo {
                r: field(parts.next(), "rank", s)?,
            },
            "kron_fixed_alpha" => MethodSpec::KronFixedAlpha {
                r: field(parts.next(), "rank", s)?,
                alpha: field(parts.next(), "alpha", s)?,
            },
            "kron_oracle" => MethodSpec::KronOracle {
                r: field(parts.next(), "rank", s)?,
                grid: field(parts.next(), "grid size", s)?,
            },
            _ => return Err(Error::Config(format!("unknown method {s:?}"))),
        };
        if parts.next().is_some() {
            return Err(Error::Config(format!("{s:?}: too many fields")));
        }
        Ok(spec)
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodSpec::FullRankPress => write!(f, "full_rank_press"),
            MethodSpec::FullRankFixedAlpha { alpha } => write!(f, "full_rank_fixed_alpha:{alpha:e}"),
            MethodSpec::KronAlo { r } => write!(f, "kron_alo:{r}"),
            MethodSpec::KronFixedAlpha { r, alpha } => write!(f, "kron_fixed_alpha:{r}:{alpha:e}"),
            MethodSpec::KronOracle { r, grid } => write!(f, "kron_oracle:{r}:{grid}"),
        }
    }
}

impl TryFrom<String> for MethodSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MethodSpec> for String {
    fn from(m: MethodSpec) -> String {
        m.to_string()
    }
}

/// `"golden"` or `"grid:<points>"`.
pub fn parse_search_mode(s: &str) -> Result<SearchMode> {
    match s.split_once(':') {
        None if s == "golden" => Ok(SearchMode::GoldenSection),
        Some(("grid", n)) => Ok(SearchMode::Grid(field(Some(n), "grid size", s)?)),
        _ => Err(Error::Config(format!("unknown search mode {s:?}"))),
    }
}

pub fn format_search_mode(mode: SearchMode) -> String {
    match mode {
        SearchMode::GoldenSection => "golden".into(),
        SearchMode::Grid(n) => format!("grid:{n}"),
    }
}

/// Top-level `m1`, `m2`, `r` keys, each falling back to the default shape.
fn shape_keys<'de, D: serde::Deserializer<'de>>(de: D) -> std::result::Result<KroneckerShape, D::Error> {
    #[derive(Deserialize)]
    struct Keys {
        m1: Option<usize>,
        m2: Option<usize>,
        r: Option<usize>,
    }
    let k = Keys::deserialize(de)?;
    let d = ExperimentConfig::default().shape;
    Ok(KroneckerShape {
        m1: k.m1.unwrap_or(d.m1),
        m2: k.m2.unwrap_or(d.m2),
        r: k.r.unwrap_or(d.r),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    #[serde(flatten, deserialize_with = "shape_keys")]
    pub shape: KroneckerShape,
    pub n_samples: usize,
    /// `inf` disables the noise.
    pub snr_db: f64,
    pub ar_coeff: f64,
    pub n_realizations: usize,
    pub ir_source: IrSource,
    pub methods: Vec<MethodSpec>,
    pub seed: u64,
    pub bracket: (f64, f64),
    pub als_iterations: usize,
    pub als_rel_tol: f64,
    pub warm_start: bool,
    /// ALO search strategy, `"golden"` or `"grid:<points>"`.
    pub search: String,
    pub rank_tol: f64,
    /// Write measured wall times; off by default so the CSV is reproducible.
    pub record_timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            shape: KroneckerShape { m1: 8, m2: 10, r: 8 },
            n_samples: 200,
            snr_db: 5.0,
            ar_coeff: 0.9,
            n_realizations: 8,
            ir_source: IrSource::SyntheticLowrank { rank: 3, decay: 0.5 },
            methods: Vec::new(),
            seed: 1,
            bracket: search::DEFAULT_BRACKET,
            als_iterations: 20,
            als_rel_tol: 1e-8,
            warm_start: true,
            search: "golden".into(),
            rank_tol: super::metrics::DEFAULT_RANK_TOL,
            record_timing: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        let known = toml::Table::try_from(Self::default()).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(key) = table.keys().find(|k| !known.contains_key(*k)) {
            return Err(Error::Config(format!("unknown configuration key {key:?}")));
        }
        table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.shape.validate()?;
        if self.n_samples == 0 || self.n_realizations == 0 {
            return Err(Error::Config("n_samples and n_realizations must be ≥ 1".into()));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::Config(format!("snr_db = {} is not usable", self.snr_db)));
        }
        if !(self.ar_coeff.abs() < 1.0) {
            return Err(Error::NonStationary(self.ar_coeff));
        }
        search::check_bracket(self.bracket.0, self.bracket.1)?;
        self.als_config().validate()?;
        parse_search_mode(&self.search)?;
        if !(self.rank_tol > 0.0) {
            return Err(Error::Config("rank_tol must be > 0".into()));
        }
        for m in &self.methods {
            if let MethodSpec::KronAlo { r } | MethodSpec::KronFixedAlpha { r, .. } | MethodSpec::KronOracle { r, .. } = m {
                self.shape.with_rank(*r)?;
            }
            if let MethodSpec::KronOracle { grid: 0, .. } = m {
                return Err(Error::Config("oracle grid needs at least one point".into()));
            }
        }
        Ok(())
    }

    pub fn als_config(&self) -> AlsConfig {
        AlsConfig {
            iterations: self.als_iterations,
            rel_tol: self.als_rel_tol,
            record_trace: false,
        }
    }

    pub fn search_options(&self) -> Result<AlphaSearchOptions> {
        Ok(AlphaSearchOptions {
            bracket: self.bracket,
            mode: parse_search_mode(&self.search)?,
            warm_start: self.warm_start,
            log_tol: search::DEFAULT_LOG_TOL,
        })
    }
}
