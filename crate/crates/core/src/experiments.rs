//! Monte Carlo experiment harness.
//!
//! An experiment is a grid of `(n, length rule)` cells. Each cell runs
//! `trials` independent word pairs, and trial `t` of cell `k` draws from the
//! ChaCha stream `(seed, k << 32 | t)`. The result therefore does not
//! depend on how many worker threads ran it.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    bin_statistics, corner_probe, count_type_i_configurations, full_step_status, is_abelian,
    supercommutes, FullStep, GroupSample,
};
use crate::dist::{
    big_rational_to_f64, dp_distribution, quadrature_zero_probability, LazyWalkParams, K,
};
use crate::error::{Error, Result};
use crate::oracle::ExhaustiveResult;
use crate::words::WalkSampler;

pub const DEFAULT_TRIALS: u64 = 10_000;
pub const DEFAULT_EXACT_STEP_CEILING: usize = 12;

/// JSON schema for [`emit`]'s JSON output.
pub const SUMMARY_SCHEMA: &str = include_str!("../schema/summary.schema.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    AbelianCurve,
    SupercommuteGap,
    ZeroConstant,
    DStatistic,
    FullStepScan,
    EmptyBins,
    TypeICensus,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::AbelianCurve,
        ExperimentKind::SupercommuteGap,
        ExperimentKind::ZeroConstant,
        ExperimentKind::DStatistic,
        ExperimentKind::FullStepScan,
        ExperimentKind::EmptyBins,
        ExperimentKind::TypeICensus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::AbelianCurve => "abelian-curve",
            ExperimentKind::SupercommuteGap => "supercommute-gap",
            ExperimentKind::ZeroConstant => "zero-constant",
            ExperimentKind::DStatistic => "d-statistic",
            ExperimentKind::FullStepScan => "full-step-scan",
            ExperimentKind::EmptyBins => "empty-bins",
            ExperimentKind::TypeICensus => "type-i-census",
        }
    }

    /// Length rules used when a config names none.
    pub fn default_rules(self) -> Vec<LengthRule> {
        use LengthRule::*;
        match self {
            ExperimentKind::AbelianCurve
            | ExperimentKind::SupercommuteGap
            | ExperimentKind::DStatistic => vec![Sqrt { c: 1.0 }],
            ExperimentKind::ZeroConstant => vec![Quadratic { c: 1.0 }],
            ExperimentKind::FullStepScan => vec![
                Sqrt { c: 1.0 },
                Linear { c: 1.0 },
                Quadratic { c: 1.0 },
                Cubic { c: 1.0 },
            ],
            ExperimentKind::EmptyBins | ExperimentKind::TypeICensus => vec![Linear { c: 1.0 }],
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::parse("experiment", s, "unknown experiment name"))
    }
}

/// How the word length is derived from `n`. Non-explicit rules round up:
/// `len = ceil(c * n^e)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum LengthRule {
    Explicit { ell: u64 },
    Sqrt { c: f64 },
    Linear { c: f64 },
    Quadratic { c: f64 },
    Cubic { c: f64 },
}

impl LengthRule {
    pub fn constant(&self) -> Option<f64> {
        match *self {
            LengthRule::Explicit { .. } => None,
            LengthRule::Sqrt { c }
            | LengthRule::Linear { c }
            | LengthRule::Quadratic { c }
            | LengthRule::Cubic { c } => Some(c),
        }
    }

    pub fn exponent(&self) -> Option<f64> {
        match self {
            LengthRule::Explicit { .. } => None,
            LengthRule::Sqrt { .. } => Some(0.5),
            LengthRule::Linear { .. } => Some(1.0),
            LengthRule::Quadratic { .. } => Some(2.0),
            LengthRule::Cubic { .. } => Some(3.0),
        }
    }

    pub fn length(&self, n: usize) -> u64 {
        match (*self, self.exponent()) {
            (LengthRule::Explicit { ell }, _) => ell,
            (_, Some(e)) => {
                let c = self.constant().expect("non-explicit rule");
                // The small offset keeps exact products such as 1 * sqrt(2500)
                // from rounding up past the integer.
                (c * (n as f64).powf(e) - 1e-9).ceil().max(0.0) as u64
            }
            _ => unreachable!(),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            LengthRule::Explicit { ell } => format!("ell={ell}"),
            LengthRule::Sqrt { c } => format!("ceil({c}*sqrt(n))"),
            LengthRule::Linear { c } => format!("ceil({c}*n)"),
            LengthRule::Quadratic { c } => format!("ceil({c}*n^2)"),
            LengthRule::Cubic { c } => format!("ceil({c}*n^3)"),
        }
    }
}

impl FromStr for LengthRule {
    type Err = Error;

    /// `sqrt:1`, `linear:0.5`, `quadratic:1`, `cubic:2`, `explicit:200` or a
    /// bare integer length.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::parse("length rule", s, reason.to_string());
        if let Ok(ell) = s.trim().parse::<u64>() {
            return Ok(LengthRule::Explicit { ell });
        }
        let (name, value) = s
            .split_once(':')
            .ok_or_else(|| bad("expected rule:value"))?;
        if name == "explicit" {
            let ell = value
                .parse()
                .map_err(|_| bad("length must be an integer"))?;
            return Ok(LengthRule::Explicit { ell });
        }
        let c: f64 = value
            .parse()
            .map_err(|_| bad("constant must be a number"))?;
        if !(c.is_finite() && c > 0.0) {
            return Err(bad("constant must be positive"));
        }
        match name {
            "sqrt" => Ok(LengthRule::Sqrt { c }),
            "linear" => Ok(LengthRule::Linear { c }),
            "quadratic" => Ok(LengthRule::Quadratic { c }),
            "cubic" => Ok(LengthRule::Cubic { c }),
            _ => Err(bad(
                "rule must be explicit, sqrt, linear, quadratic or cubic",
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::parse("format", s, "expected csv or json")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub path: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
    /// Also write per-trial records.
    #[serde(default)]
    pub records: bool,
}

fn default_trials() -> u64 {
    DEFAULT_TRIALS
}

fn default_exact_step_ceiling() -> usize {
    DEFAULT_EXACT_STEP_CEILING
}

fn default_ratio_bounds() -> (f64, f64) {
    (0.1, 10.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n_values: Vec<usize>,
    /// Empty means [`ExperimentKind::default_rules`].
    #[serde(default)]
    pub length_rules: Vec<LengthRule>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; `None` uses all available cores.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Largest `n` for which full-step falls back to exact enumeration.
    #[serde(default = "default_exact_step_ceiling")]
    pub exact_step_ceiling: usize,
    /// Superdiagonal coordinate tracked by zero-constant; `None` picks `ceil(n/2)`.
    #[serde(default)]
    pub coordinate: Option<usize>,
    /// `len / n` range outside of which type-i-census warns.
    #[serde(default = "default_ratio_bounds")]
    pub type_i_ratio_bounds: (f64, f64),
    #[serde(default)]
    pub output: Option<OutputSpec>,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind, n_values: Vec<usize>) -> Self {
        ExperimentConfig {
            experiment,
            n_values,
            length_rules: Vec::new(),
            trials: DEFAULT_TRIALS,
            seed: 0,
            workers: None,
            exact_step_ceiling: DEFAULT_EXACT_STEP_CEILING,
            coordinate: None,
            type_i_ratio_bounds: default_ratio_bounds(),
            output: None,
        }
    }

    pub fn with_rules(mut self, rules: Vec<LengthRule>) -> Self {
        self.length_rules = rules;
        self
    }

    pub fn with_trials(mut self, trials: u64) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn rules(&self) -> Vec<LengthRule> {
        if self.length_rules.is_empty() {
            self.experiment.default_rules()
        } else {
            self.length_rules.clone()
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.n_values.is_empty() {
            return Err(Error::Config("n_values is empty".into()));
        }
        if let Some(&bad) = self.n_values.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidDimension(bad));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        for rule in self.rules() {
            if let Some(c) = rule.constant() {
                if !(c.is_finite() && c > 0.0) {
                    return Err(Error::Config(format!("bad constant in {}", rule.label())));
                }
            }
        }
        if let Some(k) = self.coordinate {
            if let Some(&n) = self.n_values.iter().find(|&&n| k == 0 || k >= n) {
                return Err(Error::IndexOutOfRange {
                    index: k,
                    max: n - 1,
                });
            }
        }
        Ok(())
    }
}

/// Everything measured about one word pair. Fields an experiment does not
/// need are left `None`; evaluating them at large `n` is expensive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub n: usize,
    pub ell: u64,
    pub abelian: Option<bool>,
    pub supercommute: bool,
    pub f: u64,
    pub b: u64,
    pub d: u64,
    pub empty_bins: u64,
    pub full_step: Option<FullStep>,
    /// Number of odd `i` with a type-`i` configuration.
    pub type_i: u64,
    pub corner_probe_zero: Option<bool>,
    /// `v_k` for the tracked coordinate, zero-constant only.
    pub coordinate_value: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    /// `<experiment>.<metric>`.
    pub experiment: String,
    pub n: usize,
    pub ell: u64,
    pub c: Option<f64>,
    pub trials: u64,
    pub estimate: f64,
    pub stderr: f64,
    pub theory: Option<f64>,
    pub seed: u64,
    /// Exact value as a rational string, oracle rows only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rational: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub rows: Vec<SummaryRow>,
    pub records: Vec<TrialRecord>,
    pub warnings: Vec<String>,
}

/// Proportion and its binomial standard error.
pub fn proportion(successes: u64, trials: u64) -> (f64, f64) {
    let p = successes as f64 / trials as f64;
    (p, (p * (1.0 - p) / trials as f64).sqrt())
}

/// Sample mean and `sd / sqrt(trials)` with the `trials - 1` sample variance.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `exp(-2 c^2)`.
pub fn abelian_limit(c: f64) -> f64 {
    (-2.0 * c * c).exp()
}

/// `E(D)` from `E(B) = (n-1)(1 - (1 - 2/(n-1))^len)`, which treats every bin
/// as having two neighbours.
pub fn d_closed_form(n: usize, ell: u64) -> f64 {
    let m = (n - 1) as f64;
    2.0 * ell as f64 - m * (1.0 - (1.0 - 2.0 / m).powf(ell as f64))
}

/// Exact `E(D)`. The end bins `1` and `n-1` each have one neighbouring
/// index, so they stay empty with probability `(1 - 1/(n-1))^len`.
pub fn d_expectation(n: usize, ell: u64) -> f64 {
    let m = (n - 1) as f64;
    let l = ell as f64;
    if n < 3 {
        return 2.0 * l;
    }
    let occupied =
        (m - 2.0) * (1.0 - (1.0 - 2.0 / m).powf(l)) + 2.0 * (1.0 - (1.0 - 1.0 / m).powf(l));
    2.0 * l - occupied
}

/// `(n-1)(1 - 1/(n-1))^{2 len}`.
pub fn empty_bins_expectation(n: usize, ell: u64) -> f64 {
    let m = (n - 1) as f64;
    m * (1.0 - 1.0 / m).powf(2.0 * ell as f64)
}

/// `n' * len^2 (len - 1) / (n-1)^3 * (1 - 2/(n-1))^{2 len - 3}` with `n'` the
/// number of odd `i <= n - 2`.
pub fn type_i_expectation(n: usize, ell: u64) -> f64 {
    if ell < 2 || n < 3 {
        return 0.0;
    }
    let odd = ((n - 1) / 2) as f64;
    let m = (n - 1) as f64;
    let l = ell as f64;
    odd * l * l * (l - 1.0) / m.powi(3) * (1.0 - 2.0 / m).powf(2.0 * l - 3.0)
}

struct Cell {
    index: u64,
    n: usize,
    ell: u64,
    rule: LengthRule,
}

fn cells(config: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &n in &config.n_values {
        for rule in config.rules() {
            out.push(Cell {
                index: out.len() as u64,
                n,
                ell: rule.length(n),
                rule,
            });
        }
    }
    out
}

fn stream_id(cell: u64, trial: u64) -> u64 {
    (cell << 32) | trial
}

#[derive(Clone, Copy)]
struct Needs {
    abelian: bool,
    full_step: bool,
}

fn needs(kind: ExperimentKind) -> Needs {
    Needs {
        abelian: matches!(
            kind,
            ExperimentKind::AbelianCurve
                | ExperimentKind::SupercommuteGap
                | ExperimentKind::FullStepScan
        ),
        full_step: kind == ExperimentKind::FullStepScan,
    }
}

fn run_trial(config: &ExperimentConfig, cell: &Cell, trial: u64) -> Result<TrialRecord> {
    let ell = usize::try_from(cell.ell)
        .map_err(|_| Error::Config(format!("length {} does not fit in memory", cell.ell)))?;
    let mut sampler = WalkSampler::new(cell.n, ell, config.seed, stream_id(cell.index, trial))?;

    if config.experiment == ExperimentKind::ZeroConstant {
        // Only one coordinate matters; skip building the words.
        let k = config.coordinate.unwrap_or(cell.n.div_ceil(2));
        let mut value = 0i64;
        for _ in 0..ell {
            let letter = sampler.sample_letter();
            if letter.index == k {
                value += i64::from(letter.sign.as_i32());
            }
        }
        return Ok(TrialRecord {
            trial,
            n: cell.n,
            ell: cell.ell,
            abelian: None,
            supercommute: false,
            f: 0,
            b: 0,
            d: 0,
            empty_bins: 0,
            full_step: None,
            type_i: 0,
            corner_probe_zero: None,
            coordinate_value: Some(value),
        });
    }

    let (v, w) = sampler.sample_pair();
    let need = needs(config.experiment);
    let sc = supercommutes(&v, &w);
    let stats = bin_statistics(&v, &w);
    let type_i = count_type_i_configurations(&v, &w) as u64;
    let g = GroupSample::new(v, w)?;
    // Type-i configurations certify non-commutation; check it whenever one shows up.
    let abelian = (need.abelian || type_i > 0).then(|| is_abelian(&g));
    let (full_step, corner_probe_zero) = if need.full_step {
        let probe = if cell.n >= 3 {
            Some(corner_probe(&g)?.is_zero())
        } else {
            None
        };
        (Some(full_step_status(&g, config.exact_step_ceiling)), probe)
    } else {
        (None, None)
    };
    let record = TrialRecord {
        trial,
        n: cell.n,
        ell: cell.ell,
        abelian,
        supercommute: sc,
        f: stats.f,
        b: stats.b,
        d: stats.d,
        empty_bins: stats.empty_bins,
        full_step,
        type_i,
        corner_probe_zero,
        coordinate_value: None,
    };
    check_record(&record)?;
    Ok(record)
}

fn check_record(r: &TrialRecord) -> Result<()> {
    let breach = |what: &str| {
        Err(Error::InvariantBreach(format!(
            "trial {} (n={}, len={}): {what}",
            r.trial, r.n, r.ell
        )))
    };
    if r.supercommute && r.abelian == Some(false) {
        return breach("supercommuting pair does not commute");
    }
    if r.d + r.b != 2 * r.ell {
        return breach("D != 2 len - B");
    }
    if r.type_i > 0 && r.abelian == Some(true) {
        return breach("type-i configuration in a commuting pair");
    }
    if r.full_step == Some(FullStep::Yes) && r.empty_bins > 0 {
        return breach("full step with an untouched index");
    }
    Ok(())
}

fn run_cell(config: &ExperimentConfig, cell: &Cell) -> Result<Vec<TrialRecord>> {
    let trials: Vec<u64> = (0..config.trials).collect();
    if config.workers == Some(1) {
        trials.iter().map(|&t| run_trial(config, cell, t)).collect()
    } else {
        trials
            .par_iter()
            .map(|&t| run_trial(config, cell, t))
            .collect()
    }
}

/// Runs any experiment. One worker runs on the calling thread with no pool,
/// which also works where threads cannot be spawned.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    if config.workers == Some(1) {
        return run_in_pool(config);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_in_pool(config))
}

fn run_in_pool(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let name = config.experiment.name();
    for cell in cells(config) {
        if config.experiment == ExperimentKind::TypeICensus {
            let ratio = cell.ell as f64 / cell.n as f64;
            let (lo, hi) = config.type_i_ratio_bounds;
            if !(lo..=hi).contains(&ratio) {
                warnings.push(format!(
                    "type-i-census at n={} len={}: len/n = {ratio:.3} outside [{lo}, {hi}], \
                     where the expected count is not a meaningful reference",
                    cell.n, cell.ell
                ));
            }
        }
        let recs = run_cell(config, &cell)?;
        let row = |metric: &str, (estimate, stderr): (f64, f64), theory: Option<f64>| SummaryRow {
            experiment: format!("{name}.{metric}"),
            n: cell.n,
            ell: cell.ell,
            c: cell.rule.constant(),
            trials: config.trials,
            estimate,
            stderr,
            theory,
            seed: config.seed,
            rational: None,
        };
        let count = |f: &dyn Fn(&TrialRecord) -> bool| recs.iter().filter(|r| f(r)).count() as u64;
        let mean = |f: &dyn Fn(&TrialRecord) -> f64| {
            mean_and_stderr(&recs.iter().map(f).collect::<Vec<_>>())
        };
        let trials = config.trials;
        let sqrt_limit = match cell.rule {
            LengthRule::Sqrt { c } => Some(abelian_limit(c)),
            _ => None,
        };
        match config.experiment {
            ExperimentKind::AbelianCurve => {
                rows.push(row(
                    "abelian",
                    proportion(count(&|r| r.abelian == Some(true)), trials),
                    sqrt_limit,
                ));
                rows.push(row(
                    "supercommute",
                    proportion(count(&|r| r.supercommute), trials),
                    sqrt_limit,
                ));
            }
            ExperimentKind::SupercommuteGap => {
                rows.push(row(
                    "gap",
                    proportion(
                        count(&|r| r.abelian == Some(true) && !r.supercommute),
                        trials,
                    ),
                    None,
                ));
                rows.push(row(
                    "abelian",
                    proportion(count(&|r| r.abelian == Some(true)), trials),
                    sqrt_limit,
                ));
                rows.push(row(
                    "supercommute",
                    proportion(count(&|r| r.supercommute), trials),
                    sqrt_limit,
                ));
            }
            ExperimentKind::ZeroConstant => {
                let (p, se) = proportion(count(&|r| r.coordinate_value == Some(0)), trials);
                let params = LazyWalkParams::letter_uniform(cell.n, cell.ell)?;
                let exact = dp_distribution(&params).mass(0);
                rows.push(row("probability", (p, se), Some(exact)));
                if cell.ell > 0 {
                    let scale = (cell.ell as f64 / cell.n as f64).sqrt();
                    rows.push(row("scaled", (p * scale, se * scale), Some(K)));
                }
                let quad = quadrature_zero_probability(&params)?;
                let mut oracle = row("oracle", (exact, 0.0), Some(quad.value));
                oracle.trials = 0;
                rows.push(oracle);
            }
            ExperimentKind::DStatistic => {
                let m = mean(&|r| r.d as f64);
                rows.push(row("closed-form", m, Some(d_closed_form(cell.n, cell.ell))));
                rows.push(row(
                    "end-corrected",
                    m,
                    Some(d_expectation(cell.n, cell.ell)),
                ));
                let limit = cell
                    .rule
                    .constant()
                    .filter(|_| matches!(cell.rule, LengthRule::Sqrt { .. }));
                rows.push(row("limit", m, limit.map(|c| 2.0 * c * c)));
            }
            ExperimentKind::FullStepScan => {
                let yes = count(&|r| r.full_step == Some(FullStep::Yes));
                let undetermined = count(&|r| r.full_step == Some(FullStep::Undetermined));
                rows.push(row("full-step", proportion(yes, trials), None));
                rows.push(row("undetermined", proportion(undetermined, trials), None));
                rows.push(row(
                    "abelian",
                    proportion(count(&|r| r.abelian == Some(true)), trials),
                    sqrt_limit,
                ));
            }
            ExperimentKind::EmptyBins => {
                rows.push(row(
                    "any-empty",
                    proportion(count(&|r| r.empty_bins > 0), trials),
                    None,
                ));
                rows.push(row(
                    "mean-count",
                    mean(&|r| r.empty_bins as f64),
                    Some(empty_bins_expectation(cell.n, cell.ell)),
                ));
            }
            ExperimentKind::TypeICensus => {
                rows.push(row(
                    "mean-x",
                    mean(&|r| r.type_i as f64),
                    Some(type_i_expectation(cell.n, cell.ell)),
                ));
            }
        }
        records.extend(recs);
    }
    for r in &rows {
        if r.stderr.is_nan()
            || r.stderr < 0.0
            || (r.experiment_is_proportion() && !(0.0..=1.0).contains(&r.estimate))
        {
            return Err(Error::InvariantBreach(format!("row out of range: {r:?}")));
        }
    }
    Ok(ExperimentResult {
        config: config.clone(),
        rows,
        records,
        warnings,
    })
}

impl SummaryRow {
    fn experiment_is_proportion(&self) -> bool {
        let metric = self.experiment.rsplit('.').next().unwrap_or("");
        matches!(
            metric,
            "abelian"
                | "supercommute"
                | "gap"
                | "probability"
                | "full-step"
                | "undetermined"
                | "any-empty"
        )
    }
}

fn run_kind(kind: ExperimentKind, config: &ExperimentConfig) -> Result<ExperimentResult> {
    if config.experiment != kind {
        return Err(Error::Config(format!(
            "config is for {}, not {kind}",
            config.experiment
        )));
    }
    run(config)
}

pub fn run_abelian_curve(config: &ExperimentConfig) -> Result<ExperimentResult> {
    run_kind(ExperimentKind::AbelianCurve, config)
}

pub fn run_supercommute_gap(config: &ExperimentConfig) -> Result<ExperimentResult> {
    run_kind(ExperimentKind::SupercommuteGap, config)
}

pub fn run_zero_constant(config: &ExperimentConfig) -> Result<ExperimentResult> {
    run_kind(ExperimentKind::ZeroConstant, config)
}

pub fn run_d_statistic(config: &ExperimentConfig) -> Result<ExperimentResult> {
    run_kind(ExperimentKind::DStatistic, config)
}

pub fn run_full_step_scan(config: &ExperimentConfig) -> Result<ExperimentResult> {
    run_kind(ExperimentKind::FullStepScan, config)
}

pub fn run_empty_bins(config: &ExperimentConfig) -> Result<ExperimentResult> {
    run_kind(ExperimentKind::EmptyBins, config)
}

pub fn run_type_i_census(config: &ExperimentConfig) -> Result<ExperimentResult> {
    run_kind(ExperimentKind::TypeICensus, config)
}

/// Oracle counts as summary rows with zero standard error.
pub fn oracle_rows(result: &ExhaustiveResult) -> Vec<SummaryRow> {
    let row = |metric: String, p: num_rational::BigRational| SummaryRow {
        experiment: format!("oracle-enumerate.{metric}"),
        n: result.n,
        ell: result.ell as u64,
        c: None,
        trials: u64::try_from(result.total_pairs).unwrap_or(u64::MAX),
        estimate: big_rational_to_f64(&p),
        stderr: 0.0,
        theory: None,
        seed: 0,
        rational: Some(p.to_string()),
    };
    let mut rows = vec![
        row("abelian".into(), result.p_abelian()),
        row("supercommute".into(), result.p_supercommute()),
        row("gap".into(), result.p_gap()),
        row("full-step".into(), result.p_full_step()),
    ];
    for (s, p) in result.step_probabilities() {
        rows.push(row(format!("step-{s}"), p));
    }
    rows
}

/// What goes into the header block of an output file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OutputMeta {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub generated_unix: u64,
    pub exact: bool,
}

/// `SOURCE_DATE_EPOCH` when set, else the current time. Setting it makes
/// repeated runs produce byte-identical files.
fn generated_unix() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or_else(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        })
}

impl OutputMeta {
    pub fn new(command: &str, config: serde_json::Value, seed: u64, exact: bool) -> Self {
        OutputMeta {
            tool: "nilwalk".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config,
            seed,
            generated_unix: generated_unix(),
            exact,
        }
    }

    pub fn for_experiment(result: &ExperimentResult) -> Self {
        OutputMeta::new(
            result.config.experiment.name(),
            serde_json::to_value(&result.config).expect("config serializes"),
            result.config.seed,
            false,
        )
    }
}

pub const CSV_HEADER: &str = "experiment,n,ell,c,trials,estimate,stderr,theory,seed";

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// One CSV data line, without newline.
pub fn csv_line(r: &SummaryRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        r.experiment,
        r.n,
        r.ell,
        opt(r.c),
        r.trials,
        r.estimate,
        r.stderr,
        opt(r.theory),
        r.seed
    )
}

const RECORD_HEADER: &str =
    "trial,n,ell,abelian,supercommute,f,b,d,empty_bins,full_step,type_i,corner_probe_zero,coordinate_value";

fn record_line(r: &TrialRecord) -> String {
    fn o<T: ToString>(x: Option<T>) -> String {
        x.map(|v| v.to_string()).unwrap_or_default()
    }
    let full = r.full_step.map(|s| match s {
        FullStep::Yes => "yes",
        FullStep::No => "no",
        FullStep::Undetermined => "undetermined",
    });
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.trial,
        r.n,
        r.ell,
        o(r.abelian),
        r.supercommute,
        r.f,
        r.b,
        r.d,
        r.empty_bins,
        o(full),
        r.type_i,
        o(r.corner_probe_zero),
        o(r.coordinate_value)
    )
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Path of the per-trial CSV written next to `path`.
pub fn records_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".records.csv");
    PathBuf::from(s)
}

/// Writes summary rows, and records when given, to `path`.
///
/// CSV output starts with `#` comment lines carrying the metadata; records go
/// to [`records_path`]. JSON output is one object `{meta, rows, records}`.
pub fn emit(
    meta: &OutputMeta,
    rows: &[SummaryRow],
    records: Option<&[TrialRecord]>,
    format: OutputFormat,
    path: &Path,
) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Config("nothing to write".into()));
    }
    let err = io_err(path);
    let mut out = BufWriter::new(File::create(path).map_err(&err)?);
    match format {
        OutputFormat::Csv => {
            writeln!(out, "# tool: {} {}", meta.tool, meta.version).map_err(&err)?;
            writeln!(out, "# command: {}", meta.command).map_err(&err)?;
            writeln!(out, "# config: {}", meta.config).map_err(&err)?;
            writeln!(out, "# seed: {}", meta.seed).map_err(&err)?;
            writeln!(out, "# generated_unix: {}", meta.generated_unix).map_err(&err)?;
            writeln!(out, "# exact: {}", meta.exact).map_err(&err)?;
            writeln!(out, "{CSV_HEADER}").map_err(&err)?;
            for r in rows {
                writeln!(out, "{}", csv_line(r)).map_err(&err)?;
            }
            out.flush().map_err(&err)?;
            if let Some(records) = records {
                let rpath = records_path(path);
                let rerr = io_err(&rpath);
                let mut rout = BufWriter::new(File::create(&rpath).map_err(&rerr)?);
                writeln!(rout, "{RECORD_HEADER}").map_err(&rerr)?;
                for r in records {
                    writeln!(rout, "{}", record_line(r)).map_err(&rerr)?;
                }
                rout.flush().map_err(&rerr)?;
            }
        }
        OutputFormat::Json => {
            let doc = serde_json::json!({
                "meta": meta,
                "rows": rows,
                "records": records.unwrap_or(&[]),
            });
            serde_json::to_writer_pretty(&mut out, &doc)?;
            writeln!(out).map_err(&err)?;
            out.flush().map_err(&err)?;
        }
    }
    Ok(())
}

/// [`emit`] for an experiment result, honouring its config's output spec.
pub fn emit_result(result: &ExperimentResult, spec: &OutputSpec) -> Result<()> {
    let meta = OutputMeta::for_experiment(result);
    let records = spec.records.then_some(result.records.as_slice());
    emit(&meta, &result.rows, records, spec.format, &spec.path)
}

/// Exact DP value of `P(v_k = 0)` as `f64`, for callers that want the oracle
/// without running trials.
pub fn exact_zero_probability(n: usize, ell: u64) -> Result<f64> {
    let params = LazyWalkParams::letter_uniform(n, ell)?;
    let d = dp_distribution(&params);
    Ok(d.exact_mass(0)
        .map(|r| big_rational_to_f64(&r))
        .unwrap_or_else(|| d.mass(0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_rules_round_up() {
        assert_eq!(LengthRule::Sqrt { c: 1.0 }.length(2500), 50);
        assert_eq!(LengthRule::Sqrt { c: 0.5 }.length(2500), 25);
        assert_eq!(LengthRule::Sqrt { c: 1.0 }.length(10), 4);
        assert_eq!(LengthRule::Cubic { c: 1.0 }.length(10), 1000);
        assert_eq!(LengthRule::Linear { c: 0.3 }.length(10), 3);
        assert_eq!(LengthRule::Explicit { ell: 7 }.length(10), 7);
        assert_eq!(
            "sqrt:0.5".parse::<LengthRule>().unwrap(),
            LengthRule::Sqrt { c: 0.5 }
        );
        assert_eq!(
            "200".parse::<LengthRule>().unwrap(),
            LengthRule::Explicit { ell: 200 }
        );
        assert!("sqrt:-1".parse::<LengthRule>().is_err());
        assert!("quartic:1".parse::<LengthRule>().is_err());
    }

    #[test]
    fn closed_forms() {
        assert!((abelian_limit(1.0) - 0.135_335_283).abs() < 1e-9);
        assert!((abelian_limit(0.5) - 0.606_530_659).abs() < 1e-9);
        // One letter: D = 1 only for A_1 or A_{n-1}.
        assert!((d_expectation(10, 1) - 2.0 / 9.0).abs() < 1e-12);
        assert_eq!(empty_bins_expectation(5, 0), 4.0);
        assert_eq!(type_i_expectation(10, 0), 0.0);
    }

    #[test]
    fn stats_helpers() {
        assert_eq!(proportion(1, 4), (0.25, (0.25f64 * 0.75 / 4.0).sqrt()));
        let (m, se) = mean_and_stderr(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let c = ExperimentConfig::new(ExperimentKind::AbelianCurve, vec![10]).with_trials(0);
        assert!(c.validate().is_err());
        let c = ExperimentConfig::new(ExperimentKind::AbelianCurve, vec![1]);
        assert!(c.validate().is_err());
        let c = ExperimentConfig::new(ExperimentKind::AbelianCurve, vec![10]);
        assert!(c.validate().is_ok());
        let json = r#"{"experiment":"d-statistic","n_values":[40],"length_rules":[{"rule":"sqrt","c":1.0}],"trials":5}"#;
        let c: ExperimentConfig = serde_json::from_str(json).unwrap();
        assert_eq!(c.experiment, ExperimentKind::DStatistic);
        assert!(serde_json::from_str::<ExperimentConfig>(
            r#"{"experiment":"d-statistic","n_values":[4],"bogus":1}"#
        )
        .is_err());
    }

    #[test]
    fn zero_length_edge_cases() {
        let cfg = ExperimentConfig::new(ExperimentKind::ZeroConstant, vec![6])
            .with_rules(vec![LengthRule::Explicit { ell: 0 }])
            .with_trials(20);
        let r = run(&cfg).unwrap();
        assert_eq!(r.rows[0].estimate, 1.0);
        assert_eq!(r.rows[0].theory, Some(1.0));

        let cfg = ExperimentConfig::new(ExperimentKind::EmptyBins, vec![6])
            .with_rules(vec![LengthRule::Explicit { ell: 0 }])
            .with_trials(5);
        let r = run(&cfg).unwrap();
        assert!(r.records.iter().all(|x| x.empty_bins == 5));

        let cfg = ExperimentConfig::new(ExperimentKind::TypeICensus, vec![6])
            .with_rules(vec![LengthRule::Explicit { ell: 0 }])
            .with_trials(5);
        let r = run(&cfg).unwrap();
        assert_eq!(r.rows[0].estimate, 0.0);
        assert!(!r.warnings.is_empty());
    }

    #[test]
    fn wrong_runner_is_rejected() {
        let cfg = ExperimentConfig::new(ExperimentKind::EmptyBins, vec![6]).with_trials(3);
        assert!(run_abelian_curve(&cfg).is_err());
        assert!(run_empty_bins(&cfg).is_ok());
    }

    #[test]
    fn csv_line_format() {
        let r = SummaryRow {
            experiment: "abelian-curve.abelian".into(),
            n: 2500,
            ell: 50,
            c: Some(1.0),
            trials: 100,
            estimate: 0.13,
            stderr: 0.01,
            theory: None,
            seed: 42,
            rational: None,
        };
        assert_eq!(
            csv_line(&r),
            "abelian-curve.abelian,2500,50,1,100,0.13,0.01,,42"
        );
    }
}
