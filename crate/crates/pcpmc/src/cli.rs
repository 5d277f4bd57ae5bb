//! Command-line front end: batch reports for researchers and test scripts.
//!
//! Exit status is 0 only when the command completed and, for the checking
//! commands, the evaluator and the oracle agree; disagreement exits 1,
//! usage and input errors exit 2.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num::BigRational;

use crate::chain::{induced_chain, project_to_probabilistic, unfold_dot};
use crate::oracle::{enumerate_satisfying_paths, enumeration_report};
use crate::pcp::{brute_force_solve, check_solution, pad_instance, IndexWord, PcpInstance};
use crate::pctl::{
    eval_state_budgeted, parse_formula, path_probability, EvalError, Mode, ProbResult,
    DEFAULT_NODE_BUDGET,
};
use crate::pushdown::{Configuration, Flavor};
use crate::reduction::{build_reduction, rho, rho_bar, FormulaVariant, Reduction, ReductionError};

#[derive(Parser)]
#[command(
    name = "pcpmc",
    version,
    about = "Exact PCTL checking of (quantum) pushdown systems generated from PCP instances"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    /// Inner check behind one buffered step.
    Nested,
    /// Extra buffer symbols and an inner reachability layer.
    Staged,
    /// Commit branches to the audits directly.
    Flat,
}

#[derive(Args)]
struct ReductionArgs {
    /// Path to the instance file, a JSON document {"pairs": [["A","AB"], ...]}.
    #[arg(long)]
    instance: PathBuf,
    /// Generate the quantum system (amplitudes) instead of probabilities.
    #[arg(long)]
    quantum: bool,
    /// Formula/system variant.
    #[arg(long, value_enum, default_value_t = VariantArg::Nested)]
    variant: VariantArg,
    /// Buffer stages for the staged variant.
    #[arg(long, default_value_t = 1)]
    stages: u32,
}

impl ReductionArgs {
    fn flavor(&self) -> Flavor {
        if self.quantum {
            Flavor::Quantum
        } else {
            Flavor::Probabilistic
        }
    }

    fn variant(&self) -> FormulaVariant {
        match self.variant {
            VariantArg::Nested => FormulaVariant::Nested,
            VariantArg::Staged => FormulaVariant::Staged { delay: self.stages },
            VariantArg::Flat => FormulaVariant::Flat,
        }
    }

    fn build(&self) -> Result<Reduction, CliError> {
        let instance = PcpInstance::load(&self.instance)
            .map_err(|e| CliError::input(format!("{}: {e}", self.instance.display())))?;
        let mp = pad_instance(&instance);
        build_reduction(&mp, self.flavor(), self.variant()).map_err(CliError::from)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compile an instance into a pushdown system plus formula file.
    Reduce {
        #[command(flatten)]
        common: ReductionArgs,
        /// Probability parameter t (rational p/q strictly between 0 and 1).
        #[arg(long, value_parser = parse_rational, default_value = "1/3")]
        t: BigRational,
        /// Output path for the system file.
        #[arg(long)]
        out_system: PathBuf,
        /// Output path for the formula file.
        #[arg(long)]
        out_formula: PathBuf,
    },
    /// Audit the witness path for one index word, with an oracle cross-check.
    CheckWitness {
        #[command(flatten)]
        common: ReductionArgs,
        /// Index word, comma-separated: 1,2,1.
        #[arg(long)]
        word: String,
        /// Check against this t; without it, the parameter-free sum test runs.
        #[arg(long, value_parser = parse_rational)]
        t: Option<BigRational>,
        /// Oracle enumeration depth.
        #[arg(long, default_value_t = 64)]
        depth: usize,
        /// Also list the oracle's satisfying paths.
        #[arg(long)]
        paths: bool,
    },
    /// Brute-force a solution, then audit it as a witness.
    Search {
        #[command(flatten)]
        common: ReductionArgs,
        /// Largest number of indices to try.
        #[arg(long, default_value_t = 6)]
        max_k: usize,
        /// Oracle enumeration depth for the audit.
        #[arg(long, default_value_t = 64)]
        depth: usize,
    },
    /// Binary-expansion weight of a word over {A, B}.
    Rho {
        /// The word, e.g. AAB.
        word: String,
        /// Compute the dual weight instead.
        #[arg(long)]
        bar: bool,
    },
    /// Brute-force the instance alone (no reduction involved).
    SolvePcp {
        /// Path to the instance file.
        #[arg(long)]
        instance: PathBuf,
        /// Largest number of indices to try.
        #[arg(long, default_value_t = 6)]
        max_k: usize,
    },
    /// Emit the bounded unfolding tree of a configuration as Graphviz DOT.
    Unfold {
        #[command(flatten)]
        common: ReductionArgs,
        /// Start configuration, whitespace-separated symbols, e.g. "F (A,A) Z'".
        #[arg(long)]
        start: String,
        /// Unfolding depth in steps.
        #[arg(long, default_value_t = 8)]
        depth: usize,
        /// Stop expanding nodes satisfying this state formula.
        #[arg(long)]
        stop_at: Option<String>,
        /// Write the DOT document here instead of stdout.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Evaluate a formula or path probability at a configuration.
    Eval {
        #[command(flatten)]
        common: ReductionArgs,
        /// Start configuration, e.g. "N (A,A) Z'".
        #[arg(long)]
        start: String,
        /// The formula text, e.g. "P{=13/32}[...]".
        #[arg(long)]
        formula: String,
        /// Node budget for exact until solving.
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        budget: usize,
        /// Evaluate the top-level path formula depth-bounded instead.
        #[arg(long)]
        bounded: Option<usize>,
    },
    /// Validate the generated system's stochasticity or unitarity.
    Validate {
        #[command(flatten)]
        common: ReductionArgs,
    },
}

/// Errors that map to exit codes: input/usage errors exit 2, failed checks 1.
#[derive(Debug)]
enum CliError {
    Input(String),
    Check(String),
}

impl CliError {
    fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    fn check(msg: impl Into<String>) -> Self {
        CliError::Check(msg.into())
    }

    fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Check(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Check(m) => m,
        }
    }
}

impl From<ReductionError> for CliError {
    fn from(e: ReductionError) -> Self {
        CliError::Input(e.to_string())
    }
}

fn parse_rational(text: &str) -> Result<BigRational, String> {
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n, d),
        None => (text, "1"),
    };
    let numer: num::BigInt = num.trim().parse().map_err(|_| format!("bad numerator in {text:?}"))?;
    let denom: num::BigInt = den.trim().parse().map_err(|_| format!("bad denominator in {text:?}"))?;
    if denom == 0.into() {
        return Err("zero denominator".to_string());
    }
    Ok(BigRational::new(numer, denom))
}

/// Parses argv and runs; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Reduce { common, t, out_system, out_formula } => cmd_reduce(common, t, out_system, out_formula),
        Command::CheckWitness { common, word, t, depth, paths } => {
            cmd_check_witness(common, word, t, depth, paths)
        }
        Command::Search { common, max_k, depth } => cmd_search(common, max_k, depth),
        Command::Rho { word, bar } => cmd_rho(word, bar),
        Command::SolvePcp { instance, max_k } => cmd_solve_pcp(instance, max_k),
        Command::Unfold { common, start, depth, stop_at, dot } => cmd_unfold(common, start, depth, stop_at, dot),
        Command::Eval { common, start, formula, budget, bounded } => cmd_eval(common, start, formula, budget, bounded),
        Command::Validate { common } => cmd_validate(common),
    }
}

fn cmd_reduce(
    common: ReductionArgs,
    t: BigRational,
    out_system: PathBuf,
    out_formula: PathBuf,
) -> Result<(), CliError> {
    let reduction = common.build()?;
    let formula = reduction.formula(&t)?;
    let system_text = reduction.system().to_file_string();
    std::fs::write(&out_system, &system_text)
        .map_err(|e| CliError::input(format!("{}: {e}", out_system.display())))?;
    std::fs::write(&out_formula, format!("{formula}\n"))
        .map_err(|e| CliError::input(format!("{}: {e}", out_formula.display())))?;
    println!(
        "instance: {} (padded width {})",
        reduction.instance().unpadded(),
        reduction.instance().width()
    );
    println!(
        "system: {} symbols, {} rules, flavor {} -> {}",
        reduction.system().alphabet().len(),
        reduction.system().rules().len(),
        reduction.system().flavor(),
        out_system.display()
    );
    println!("formula (t={t}) -> {}", out_formula.display());
    Ok(())
}

fn cmd_check_witness(
    common: ReductionArgs,
    word: String,
    t: Option<BigRational>,
    depth: usize,
    paths: bool,
) -> Result<(), CliError> {
    let reduction = common.build()?;
    let word = IndexWord::parse(&word).map_err(|e| CliError::input(e.to_string()))?;
    let report = reduction.check_witness(&word, t.as_ref())?;

    let chain = induced_chain(reduction.system()).map_err(ReductionError::from)?;
    let branch = reduction.branch_configuration(&report.alpha);
    let enum1 =
        enumerate_satisfying_paths(&chain, &branch, reduction.phi1(), reduction.assignment(), depth)
            .map_err(|e| CliError::input(e.to_string()))?;
    let enum2 =
        enumerate_satisfying_paths(&chain, &branch, reduction.phi2(), reduction.assignment(), depth)
            .map_err(|e| CliError::input(e.to_string()))?;
    let (oracle_p1, res1) = (enum1.mass(), enum1.residual.clone());
    let (oracle_p2, res2) = (enum2.mass(), enum2.residual.clone());
    let zero = BigRational::from_integer(0.into());
    let oracle_agrees =
        oracle_p1 == report.p1 && oracle_p2 == report.p2 && res1 == zero && res2 == zero;

    let alpha = report
        .alpha
        .iter()
        .map(|(x, y)| format!("({x},{y})"))
        .collect::<Vec<_>>()
        .join("");
    println!("instance: {}", reduction.instance().unpadded());
    println!("word: {}", report.word);
    println!("alpha: {alpha}");
    println!("p1={} p2={}", report.p1, report.p2);
    match &report.t {
        Some(t) => println!("checked against t={t}: p1 = t/2 and p2 = (1-t)/2"),
        None => println!("parameter-free check: p1 + p2 = 1/2"),
    }
    println!("solution: {}", if report.is_solution { "yes" } else { "no" });
    println!(
        "oracle: p1={oracle_p1} p2={oracle_p2} (residuals {res1}, {res2}) -> {}",
        if oracle_agrees { "agrees" } else { "DISAGREES" }
    );
    if paths {
        println!("first-component audit paths:");
        print!("{}", enumeration_report(&enum1));
        println!("second-component audit paths:");
        print!("{}", enumeration_report(&enum2));
    }
    if !oracle_agrees {
        return Err(CliError::check("evaluator and oracle disagree"));
    }
    Ok(())
}

fn cmd_search(common: ReductionArgs, max_k: usize, depth: usize) -> Result<(), CliError> {
    let instance = PcpInstance::load(&common.instance)
        .map_err(|e| CliError::input(format!("{}: {e}", common.instance.display())))?;
    match brute_force_solve(&instance, max_k) {
        None => {
            println!("no solution with up to {max_k} indices");
            Ok(())
        }
        Some(word) => {
            println!("shortest solution: {word}");
            cmd_check_witness(common, word.to_string(), None, depth, false)
        }
    }
}

fn cmd_rho(word: String, bar: bool) -> Result<(), CliError> {
    let letters = crate::pcp::parse_word(&word).map_err(|e| CliError::input(e.to_string()))?;
    let value = if bar { rho_bar(&letters) } else { rho(&letters) };
    println!("{}", value.map_err(CliError::from)?);
    Ok(())
}

fn cmd_solve_pcp(instance: PathBuf, max_k: usize) -> Result<(), CliError> {
    let inst = PcpInstance::load(&instance)
        .map_err(|e| CliError::input(format!("{}: {e}", instance.display())))?;
    println!("instance: {inst}");
    match brute_force_solve(&inst, max_k) {
        Some(word) => {
            let ok = check_solution(&inst, &word).map_err(|e| CliError::input(e.to_string()))?;
            println!("solution: {word} (checked: {ok})");
        }
        None => println!("no solution with up to {max_k} indices"),
    }
    Ok(())
}

fn cmd_unfold(
    common: ReductionArgs,
    start: String,
    depth: usize,
    stop_at: Option<String>,
    dot: Option<PathBuf>,
) -> Result<(), CliError> {
    let reduction = common.build()?;
    let chain = induced_chain(reduction.system()).map_err(ReductionError::from)?;
    let start = Configuration::parse(&start);
    let stop_formula = match stop_at {
        Some(text) => Some(parse_formula(&text).map_err(|e| CliError::input(e.to_string()))?),
        None => None,
    };
    let assignment = reduction.assignment().clone();
    let stop = stop_formula.map(|formula| {
        move |config: &Configuration| {
            eval_state_budgeted(&chain, config, &formula, &assignment, DEFAULT_NODE_BUDGET)
                .unwrap_or(false)
        }
    });
    let stop_ref: Option<&dyn Fn(&Configuration) -> bool> =
        stop.as_ref().map(|f| f as &dyn Fn(&Configuration) -> bool);
    let text = unfold_dot(&chain, &start, depth, stop_ref);
    match dot {
        Some(path) => {
            std::fs::write(&path, &text)
                .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            println!("unfolding of {start} to depth {depth} -> {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_eval(
    common: ReductionArgs,
    start: String,
    formula: String,
    budget: usize,
    bounded: Option<usize>,
) -> Result<(), CliError> {
    let reduction = common.build()?;
    let chain = induced_chain(reduction.system()).map_err(ReductionError::from)?;
    let start = Configuration::parse(&start);
    let formula = parse_formula(&formula).map_err(|e| CliError::input(e.to_string()))?;

    if let Some(depth) = bounded {
        // bounded mode applies to the outermost path formula
        if let crate::pctl::StateFormula::Prob { path, .. } = &formula {
            let result = path_probability(
                &chain,
                &start,
                path,
                reduction.assignment(),
                &Mode::Bounded { depth },
            )
            .map_err(|e| CliError::input(e.to_string()))?;
            match result {
                ProbResult::Exact(p) => println!("probability: {p}"),
                ProbResult::Interval { lo, hi } => println!("probability in [{lo}, {hi}]"),
            }
            return Ok(());
        }
        return Err(CliError::input("--bounded needs a probability-quantified formula"));
    }

    match eval_state_budgeted(&chain, &start, &formula, reduction.assignment(), budget) {
        Ok(truth) => {
            println!("{start} satisfies {formula}: {truth}");
            Ok(())
        }
        Err(EvalError::BudgetExceeded { budget }) => Err(CliError::check(format!(
            "node budget {budget} exceeded; the guarded region may be infinite — retry with --bounded <depth>"
        ))),
        Err(e) => Err(CliError::input(e.to_string())),
    }
}

fn cmd_validate(common: ReductionArgs) -> Result<(), CliError> {
    let reduction = common.build()?;
    let report = reduction.system().validate();
    println!(
        "system: {} symbols, {} rules, flavor {}",
        reduction.system().alphabet().len(),
        reduction.system().rules().len(),
        reduction.system().flavor()
    );
    if common.quantum {
        let projected = project_to_probabilistic(reduction.system())
            .map_err(|e| CliError::input(e.to_string()))?;
        println!(
            "projection to probabilities: {}",
            if projected.validate().is_valid() { "valid" } else { "invalid" }
        );
    }
    if report.is_valid() {
        println!("validation: ok");
        Ok(())
    } else {
        println!("validation: {report}");
        Err(CliError::check("validation failed"))
    }
}
