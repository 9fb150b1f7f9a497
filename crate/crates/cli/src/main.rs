//! `nilwalk`: experiments, exact oracles and one-shot queries on random
//! two-generator subgroups of U_n(Z).

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nilwalk::analysis::{full_step_status, is_abelian, step, supercommutes, GroupSample};
use nilwalk::dist::{
    asymptotic_zero_law, dp_distribution_with, pair_zero_probability, quadrature_zero_probability,
    DpOptions, Parameterization, DEFAULT_EXACT_CEILING,
};
use nilwalk::experiments::{
    emit, emit_result, oracle_rows, run, ExperimentConfig, ExperimentKind, LengthRule,
    OutputFormat, OutputMeta, OutputSpec, SummaryRow,
};
use nilwalk::oracle::{enumerate_all_with, OracleOptions, DEFAULT_BUDGET};
use nilwalk::{Error, Word};

#[derive(Parser, Debug)]
#[command(
    name = "nilwalk",
    version,
    about = "Random two-generator subgroups of unitriangular integer matrices",
    long_about = "Random two-generator subgroups of U_n(Z), the n x n upper unitriangular \
                  integer matrices.\n\nEach generator is a uniform random word in the \
                  elementary matrices A_i = I + E_{i,i+1} and their inverses. The experiment \
                  subcommands estimate threshold probabilities by Monte Carlo and print one \
                  summary line per (n, length) cell. The remaining subcommands answer exact \
                  questions.\n\nExit codes: 0 success, 1 invariant breach, 2 bad arguments, \
                  configuration or I/O error, 3 budget or ceiling exceeded."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Probability that the two generators commute, against exp(-2c^2)
    #[command(
        long_about = "Probability that two uniform words of length ceil(c*sqrt(n)) \
        commute in U_n(Z). For len = c*sqrt(n) this tends to exp(-2c^2); it tends to 1 \
        when len = o(sqrt(n)) and to 0 when len/sqrt(n) grows. Commutation is decided by \
        exact matrix arithmetic. Supercommuting (every letter pair commutes) is reported \
        alongside.\n\nDefault length rule: sqrt:1."
    )]
    AbelianCurve(ExperimentArgs),

    /// Gap between commuting and supercommuting, which vanishes as n grows
    #[command(
        long_about = "Estimates P(commute) - P(supercommute) for words of length \
        ceil(c*sqrt(n)). Commuting pairs whose letters do not all commute become rare, so \
        the gap tends to 0 and the abelian threshold is the supercommuting one.\n\n\
        Default length rule: sqrt:1."
    )]
    SupercommuteGap(ExperimentArgs),

    /// P(v_k = 0) for one superdiagonal coordinate, against K*sqrt(n/len)
    #[command(
        long_about = "Probability that superdiagonal coordinate k of a random word is \
        zero. The coordinate is a lazy symmetric walk, so the probability is about \
        K*sqrt(n/len) with K = 1/sqrt(2*pi). Rows: the Monte Carlo estimate against the \
        exact DP value, the estimate scaled by sqrt(len/n) against K, and the DP against \
        numerical quadrature.\n\nDefault length rule: quadratic:1."
    )]
    ZeroConstant(ZeroConstantArgs),

    /// Collision statistic D = 2*len - B, which tends to 2c^2
    #[command(
        long_about = "Each letter A_k of V marks the neighbouring indices k-1 and k+1; \
        B counts marked indices and D = 2*len - B counts collisions. For len = c*sqrt(n) \
        the mean of D tends to 2c^2. Rows compare the mean with the closed form \
        2*len - (n-1)(1 - (1 - 2/(n-1))^len), with the exact expectation that gives the \
        two end indices a single neighbour, and with 2c^2.\n\nDefault length rule: sqrt:1."
    )]
    DStatistic(ExperimentArgs),

    /// Probability that the subgroup has full step n-1, across length scales
    #[command(
        long_about = "Fraction of pairs generating a subgroup of nilpotency step n-1. \
        Full step becomes likely once len/n grows. Each trial is decided by a matching-zero \
        certificate (rules it out), a nonzero corner probe (proves it), or exact step \
        enumeration up to the ceiling. Anything else is counted as undetermined in its own \
        row.\n\nDefault length rules: sqrt:1, linear:1, quadratic:1, cubic:1."
    )]
    FullStepScan(FullStepArgs),

    /// Indices used by neither word, which rule out full step
    #[command(
        long_about = "Probability that some generator index occurs in neither word, \
        and the mean number of such indices, against (n-1)(1 - 1/(n-1))^(2 len). An unused \
        index makes the subgroup block diagonal, so it cannot have full step.\n\n\
        Default length rule: linear:1."
    )]
    EmptyBins(ExperimentArgs),

    /// Mean count of type-i configurations, against its expectation
    #[command(
        long_about = "Counts odd indices i where V uses i once and i+1 never, while W \
        uses both i and i+1 once. Every such configuration forces non-commutation. The mean \
        count is compared with its expectation, which is only meaningful while len/n stays \
        in a bounded window; outside it a warning is printed.\n\nDefault length rule: \
        linear:1."
    )]
    TypeICensus(TypeIArgs),

    /// Exact probabilities by enumerating every word pair
    #[command(
        long_about = "Enumerates all (2(n-1))^(2 len) word pairs and prints exact \
        rational probabilities of commuting, supercommuting, their gap, full step and each \
        step value. These are the references the Monte Carlo estimates must match."
    )]
    OracleEnumerate(OracleArgs),

    /// Nilpotency step of the subgroup generated by two given words
    #[command(
        long_about = "Computes the nilpotency step of <V, W> exactly and prints a \
        witness: a left-normed commutator pattern such as VW = [V, W] that is nontrivial \
        at the top depth.\n\nWords are comma-separated letters index^sign, e.g. \
        \"1^+1,2^-1\". An empty string is the identity."
    )]
    Step(StepArgs),

    /// Distribution of one superdiagonal coordinate after len letters
    #[command(
        long_about = "Exact (rational) or double-double distribution of a lazy \
        symmetric walk, the law of one superdiagonal coordinate. Prints P(0) from the DP, \
        from quadrature of the characteristic function, and from the local limit \
        K*sqrt(m/len), where m = n-1 for letter-uniform steps and m = n per dimension."
    )]
    Dist(DistArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// JSON config file. Flags given on the command line override its fields
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Matrix dimensions, comma separated. Required without --config
    #[arg(long = "n", value_name = "N", value_delimiter = ',')]
    n: Vec<usize>,

    /// Constants for the default length rules; each replaces the constant of every default rule
    #[arg(long = "c", value_name = "C", value_delimiter = ',')]
    c: Vec<f64>,

    /// Length rules: explicit:L, sqrt:C, linear:C, quadratic:C or cubic:C (len = ceil(C*n^e))
    #[arg(long = "rule", value_name = "RULE", value_delimiter = ',')]
    rule: Vec<LengthRule>,

    /// Explicit word lengths, comma separated
    #[arg(long = "ell", value_name = "LEN", value_delimiter = ',')]
    ell: Vec<u64>,

    /// Trials per (n, length) cell [default: 10000]
    #[arg(long)]
    trials: Option<u64>,

    /// Base seed; each trial draws from its own stream [default: 0]
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads [default: available parallelism]
    #[arg(long)]
    workers: Option<usize>,

    /// Write summary rows to this file
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Output file format [default: csv]
    #[arg(long, value_enum)]
    format: Option<Format>,

    /// Also write per-trial records (CSV: PATH.records.csv, JSON: inline)
    #[arg(long)]
    records: bool,
}

#[derive(Args, Debug)]
struct ZeroConstantArgs {
    #[command(flatten)]
    common: ExperimentArgs,

    /// Superdiagonal coordinate k to track [default: ceil(n/2)]
    #[arg(long)]
    coordinate: Option<usize>,
}

#[derive(Args, Debug)]
struct FullStepArgs {
    #[command(flatten)]
    common: ExperimentArgs,

    /// Largest n decided by exact step enumeration when the fast checks are inconclusive [default: 12]
    #[arg(long, value_name = "N")]
    exact_step_ceiling: Option<usize>,
}

#[derive(Args, Debug)]
struct TypeIArgs {
    #[command(flatten)]
    common: ExperimentArgs,

    /// Smallest len/n without a regime warning [default: 0.1]
    #[arg(long, value_name = "RATIO")]
    min_ratio: Option<f64>,

    /// Largest len/n without a regime warning [default: 10]
    #[arg(long, value_name = "RATIO")]
    max_ratio: Option<f64>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    /// Matrix dimension
    #[arg(long = "n")]
    n: usize,

    /// Word length
    #[arg(long = "ell", value_name = "LEN")]
    ell: usize,

    /// Refuse to enumerate more word pairs than this
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u128,

    /// Write rows with exact rationals to this file
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Output file format
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args, Debug)]
struct StepArgs {
    /// Matrix dimension
    #[arg(long = "n")]
    n: usize,

    /// First generator as letters, e.g. "1^+1,2^-1"
    #[arg(long = "v", value_name = "WORD", allow_hyphen_values = true)]
    v: String,

    /// Second generator as letters
    #[arg(long = "w", value_name = "WORD", allow_hyphen_values = true)]
    w: String,

    /// Stop at this commutator depth and report a lower bound if still nontrivial [default: n-2]
    #[arg(long)]
    max_depth: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Law {
    /// p = 1/(2(n-1)): exact law under uniform letters
    LetterUniform,
    /// p = 1/(2n): simplified law used for the limit constants
    PerDimension,
}

impl From<Law> for Parameterization {
    fn from(l: Law) -> Self {
        match l {
            Law::LetterUniform => Parameterization::LetterUniform,
            Law::PerDimension => Parameterization::PerDimension,
        }
    }
}

#[derive(Args, Debug)]
struct DistArgs {
    /// Matrix dimension
    #[arg(long = "n")]
    n: usize,

    /// Number of letters
    #[arg(long = "ell", value_name = "LEN")]
    ell: u64,

    /// Step probabilities of the walk
    #[arg(long, value_enum, default_value = "letter-uniform")]
    law: Law,

    /// Largest length for exact rational DP; longer walks use double-double floats
    #[arg(long, value_name = "LEN", default_value_t = DEFAULT_EXACT_CEILING)]
    exact_ceiling: u64,

    /// Also compute P(v_k = v_{k+1} = 0) for two coordinates sharing a letter
    #[arg(long)]
    pair: bool,

    /// Write the distribution as CSV (offset, probability, rational)
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvariantBreach(_) => 1,
        Error::BudgetExceeded { .. } | Error::QuadratureNonConvergence { .. } => 3,
        _ => 2,
    }
}

fn build_config(kind: ExperimentKind, a: &ExperimentArgs) -> Result<ExperimentConfig, Error> {
    let mut config = match &a.config {
        Some(path) => {
            let config = ExperimentConfig::from_json_file(path)?;
            if config.experiment != kind {
                return Err(Error::Config(format!(
                    "{} configures {}, not {kind}",
                    path.display(),
                    config.experiment
                )));
            }
            config
        }
        None => {
            if a.n.is_empty() {
                return Err(Error::Config("--n is required without --config".into()));
            }
            ExperimentConfig::new(kind, Vec::new())
        }
    };
    if !a.n.is_empty() {
        config.n_values = a.n.clone();
    }
    let mut rules: Vec<LengthRule> = a.rule.clone();
    for &c in &a.c {
        rules.extend(
            kind.default_rules()
                .into_iter()
                .map(|r| with_constant(r, c)),
        );
    }
    rules.extend(a.ell.iter().map(|&ell| LengthRule::Explicit { ell }));
    if !rules.is_empty() {
        config.length_rules = rules;
    }
    if let Some(t) = a.trials {
        config.trials = t;
    }
    if let Some(s) = a.seed {
        config.seed = s;
    }
    if a.workers.is_some() {
        config.workers = a.workers;
    }
    if let Some(path) = &a.out {
        config.output = Some(OutputSpec {
            path: path.clone(),
            format: a.format.map(Into::into).unwrap_or_default(),
            records: a.records,
        });
    } else if let Some(spec) = &mut config.output {
        if let Some(f) = a.format {
            spec.format = f.into();
        }
        spec.records |= a.records;
    }
    Ok(config)
}

fn with_constant(rule: LengthRule, c: f64) -> LengthRule {
    match rule {
        LengthRule::Explicit { .. } => rule,
        LengthRule::Sqrt { .. } => LengthRule::Sqrt { c },
        LengthRule::Linear { .. } => LengthRule::Linear { c },
        LengthRule::Quadratic { .. } => LengthRule::Quadratic { c },
        LengthRule::Cubic { .. } => LengthRule::Cubic { c },
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.5}")).unwrap_or_else(|| "-".into())
}

fn summary_line(r: &SummaryRow) -> String {
    format!(
        "{} n={} ell={} c={} estimate={:.5} stderr={:.5} theory={}",
        r.experiment,
        r.n,
        r.ell,
        r.c.map(|c| c.to_string()).unwrap_or_else(|| "-".into()),
        r.estimate,
        r.stderr,
        fmt_opt(r.theory)
    )
}

fn run_experiment(config: ExperimentConfig) -> Result<(), Error> {
    config.validate()?;
    println!(
        "{}: seed={} trials={} workers={}",
        config.experiment,
        config.seed,
        config.trials,
        config
            .workers
            .map(|w| w.to_string())
            .unwrap_or_else(|| "all".into())
    );
    let result = run(&config)?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for r in &result.rows {
        let _ = writeln!(out, "{}", summary_line(r));
    }
    if let Some(spec) = &config.output {
        emit_result(&result, spec)?;
        let _ = writeln!(out, "wrote {}", spec.path.display());
    }
    Ok(())
}

fn run_oracle(a: &OracleArgs) -> Result<(), Error> {
    let options = OracleOptions {
        budget: a.budget,
        ..OracleOptions::default()
    };
    let r = enumerate_all_with(a.n, a.ell, options)?;
    println!(
        "oracle-enumerate: n={} ell={} pairs={}",
        r.n, r.ell, r.total_pairs
    );
    println!("P(abelian)={}", r.p_abelian());
    println!("P(supercommute)={}", r.p_supercommute());
    println!("P(gap)={}", r.p_gap());
    println!("P(full-step)={}", r.p_full_step());
    for (s, p) in r.step_probabilities() {
        println!("P(step={s})={p}");
    }
    if let Some(path) = &a.out {
        let config = serde_json::json!({ "n": a.n, "ell": a.ell, "budget": a.budget.to_string() });
        let meta = OutputMeta::new("oracle-enumerate", config, 0, true);
        emit(&meta, &oracle_rows(&r), None, a.format.into(), path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_step(a: &StepArgs) -> Result<(), Error> {
    let v = Word::parse_letters(a.n, &a.v)?;
    let w = Word::parse_letters(a.n, &a.w)?;
    let supercommute = supercommutes(&v, &w);
    let g = GroupSample::new(v, w)?;
    let report = step(&g, a.max_depth);
    let witness = report
        .witness
        .as_ref()
        .map(|p| p.to_string())
        .unwrap_or_else(|| "none".into());
    println!("step={} witness={witness}", report.step);
    println!(
        "decided={} abelian={} supercommute={supercommute} matching_zero={} full_step={}",
        report.decided,
        is_abelian(&g),
        report
            .certificate_d
            .map(|d| d.to_string())
            .unwrap_or_else(|| "none".into()),
        report.decided && report.step + 1 == a.n
    );
    // Cross-check the fast full-step paths against the exact answer.
    if report.decided {
        let fast = full_step_status(&g, 0);
        let exact = report.step + 1 == a.n;
        let contradicts = matches!(
            (fast, exact),
            (nilwalk::FullStep::Yes, false) | (nilwalk::FullStep::No, true)
        );
        if contradicts {
            return Err(Error::InvariantBreach(format!(
                "fast full-step check says {fast:?}, exact step is {}",
                report.step
            )));
        }
    }
    Ok(())
}

fn run_dist(a: &DistArgs) -> Result<(), Error> {
    let params = Parameterization::from(a.law).params(a.n, a.ell)?;
    let d = dp_distribution_with(
        &params,
        DpOptions {
            exact_ceiling: a.exact_ceiling,
        },
    );
    println!("dist: n={} ell={} exact={}", a.n, a.ell, d.is_exact());
    match d.exact_mass(0) {
        Some(q) => println!("P(0)={q} ({:e})", d.mass(0)),
        None => println!("P(0)={:e}", d.mass(0)),
    }
    let q = quadrature_zero_probability(&params)?;
    println!(
        "quadrature={:e} error_estimate={:e}",
        q.value, q.error_estimate
    );
    if a.ell > 0 {
        // The walk moves with probability 1/m, m = n - 1 or n, so the limit is K sqrt(m/len).
        let m = match a.law {
            Law::LetterUniform => a.n - 1,
            Law::PerDimension => a.n,
        };
        println!("limit={:e}", asymptotic_zero_law(m, a.ell));
    }
    if a.pair {
        let p = pair_zero_probability(&params)?;
        println!(
            "pair_quadrature={:e} error_estimate={:e}",
            p.value, p.error_estimate
        );
    }
    if let Some(path) = &a.out {
        write_distribution(&d, path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn write_distribution(d: &nilwalk::dist::EndpointDistribution, path: &Path) -> Result<(), Error> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io)?;
    d.write_csv(std::io::BufWriter::new(file)).map_err(io)
}

fn dispatch(command: Command) -> Result<(), Error> {
    match command {
        Command::AbelianCurve(a) => run_experiment(build_config(ExperimentKind::AbelianCurve, &a)?),
        Command::SupercommuteGap(a) => {
            run_experiment(build_config(ExperimentKind::SupercommuteGap, &a)?)
        }
        Command::ZeroConstant(a) => {
            let mut config = build_config(ExperimentKind::ZeroConstant, &a.common)?;
            if a.coordinate.is_some() {
                config.coordinate = a.coordinate;
            }
            run_experiment(config)
        }
        Command::DStatistic(a) => run_experiment(build_config(ExperimentKind::DStatistic, &a)?),
        Command::FullStepScan(a) => {
            let mut config = build_config(ExperimentKind::FullStepScan, &a.common)?;
            if let Some(c) = a.exact_step_ceiling {
                config.exact_step_ceiling = c;
            }
            run_experiment(config)
        }
        Command::EmptyBins(a) => run_experiment(build_config(ExperimentKind::EmptyBins, &a)?),
        Command::TypeICensus(a) => {
            let mut config = build_config(ExperimentKind::TypeICensus, &a.common)?;
            if let Some(lo) = a.min_ratio {
                config.type_i_ratio_bounds.0 = lo;
            }
            if let Some(hi) = a.max_ratio {
                config.type_i_ratio_bounds.1 = hi;
            }
            run_experiment(config)
        }
        Command::OracleEnumerate(a) => run_oracle(&a),
        Command::Step(a) => run_step(&a),
        Command::Dist(a) => run_dist(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;
    use nilwalk::experiments::DEFAULT_EXACT_STEP_CEILING;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn exit_codes_follow_the_contract() {
        assert_eq!(exit_code(&Error::InvariantBreach("x".into())), 1);
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::InvalidDimension(1)), 2);
        assert_eq!(
            exit_code(&Error::BudgetExceeded {
                required: 2,
                budget: 1
            }),
            3
        );
        assert_eq!(
            exit_code(&Error::QuadratureNonConvergence {
                achieved: 1.0,
                target: 0.0
            }),
            3
        );
    }

    #[test]
    fn constants_apply_to_every_default_family() {
        let a = Cli::try_parse_from(["nilwalk", "full-step-scan", "--n", "8", "--c", "2"]).unwrap();
        let Command::FullStepScan(a) = a.command else {
            panic!()
        };
        let config = build_config(ExperimentKind::FullStepScan, &a.common).unwrap();
        assert_eq!(config.length_rules.len(), 4);
        assert!(config
            .length_rules
            .iter()
            .all(|r| r.constant() == Some(2.0)));
        assert_eq!(config.trials, 10_000);
        assert_eq!(config.seed, 0);
        assert_eq!(config.exact_step_ceiling, DEFAULT_EXACT_STEP_CEILING);
    }

    #[test]
    fn unknown_flags_are_rejected() {
        let e =
            Cli::try_parse_from(["nilwalk", "abelian-curve", "--n", "5", "--bogus"]).unwrap_err();
        assert!(e.use_stderr());
    }
}
