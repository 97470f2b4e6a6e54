mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use snip::instance::{generate, load, to_json, GridParams, QRegime};
use snip::{solve, Algorithm, BcOptions, FracSigma, Instance, SolveOptions, Subproblem};

use report::{disagreements, summary, Row, HEADER};

#[derive(Parser)]
#[command(name = "snip", version, about = "Stochastic network interdiction solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print a report row.
    Solve(SolveArgs),
    /// Write a random grid instance.
    Generate(GenerateArgs),
    /// Run every algorithm on every matching instance and budget.
    Bench(BenchArgs),
}

#[derive(clap::Args)]
struct SearchArgs {
    /// Relative optimality gap.
    #[arg(long, default_value_t = 1e-4)]
    gap: f64,
    /// Wall-clock limit per run, in seconds.
    #[arg(long, default_value_t = 3600.0)]
    time_limit: f64,
    /// Arc weights used to find paths at fractional root points.
    #[arg(long, default_value = "convex", value_parser = parse_from_str::<FracSigma>)]
    frac_sigma: FracSigma,
    /// Benders scenario evaluation.
    #[arg(long, value_enum, default_value_t = SubproblemArg::Dp)]
    subproblem: SubproblemArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum SubproblemArg {
    Dp,
    Lp,
}

impl SearchArgs {
    fn options(&self) -> Result<SolveOptions> {
        if !(self.gap >= 0.0) {
            bail!("--gap must be nonnegative");
        }
        let limit = Duration::try_from_secs_f64(self.time_limit).context("--time-limit must be a nonnegative number of seconds")?;
        Ok(SolveOptions {
            bc: BcOptions {
                gap: self.gap,
                time_limit: Some(limit),
                ..BcOptions::default()
            },
            frac_sigma: self.frac_sigma,
            subproblem: match self.subproblem {
                SubproblemArg::Dp => Subproblem::Dp,
                SubproblemArg::Lp => Subproblem::Lp,
            },
            ..SolveOptions::default()
        })
    }
}

#[derive(clap::Args)]
struct SolveArgs {
    #[arg(long, value_parser = parse_from_str::<Algorithm>)]
    alg: Algorithm,
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    search: SearchArgs,
    /// Print the column header before the row.
    #[arg(long)]
    header: bool,
    /// Write the row here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    Factor,
    Zero,
    Mixed,
}

#[derive(clap::Args)]
struct GenerateArgs {
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
    /// Share of arcs that can receive a sensor.
    #[arg(long, default_value_t = 0.5)]
    fraction: f64,
    #[arg(long, value_enum, default_value_t = RegimeArg::Factor)]
    regime: RegimeArg,
    /// q / r for the factor and mixed regimes.
    #[arg(long, default_value_t = 0.5)]
    kappa: f64,
    #[arg(long, default_value_t = 1)]
    scenarios: usize,
    /// Draw destinations from a pool of this many nodes.
    #[arg(long)]
    destinations: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    budget: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BenchArgs {
    /// Glob pattern selecting instance files.
    #[arg(long)]
    instances: String,
    /// Comma-separated algorithms.
    #[arg(long, value_delimiter = ',', default_value = "def,cdef,benders,path", value_parser = parse_from_str::<Algorithm>)]
    algs: Vec<Algorithm>,
    /// Comma-separated budgets replacing each instance's own.
    #[arg(long, value_delimiter = ',')]
    budgets: Vec<f64>,
    #[command(flatten)]
    search: SearchArgs,
    /// Solve this many instances at once.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Write the rows here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_from_str<T: std::str::FromStr<Err = String>>(s: &str) -> Result<T, String> {
    s.parse()
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn instance_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string())
}

fn cmd_solve(args: &SolveArgs) -> Result<ExitCode> {
    let opts = args.search.options()?;
    let inst = load(&args.instance).with_context(|| format!("loading {}", args.instance.display()))?;
    let solution = solve(&inst, args.alg, &opts)?;
    let row = Row {
        instance: instance_name(&args.instance),
        alg: args.alg,
        budget: inst.budget(),
        outcome: Ok(solution),
    };
    let mut text = String::new();
    if args.header {
        text.push_str(HEADER);
        text.push('\n');
    }
    text.push_str(&row.tsv());
    text.push('\n');
    write_output(args.out.as_deref(), &text)?;

    let solution = row.outcome.as_ref().unwrap();
    if let Some(plan) = &solution.plan {
        eprintln!("interdicted arcs: {:?}", plan.arcs(&inst));
    }
    let kinds = row.cut_kinds();
    if !kinds.is_empty() {
        eprintln!("cuts: {kinds}");
    }
    Ok(if row.is_optimal() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn cmd_generate(args: &GenerateArgs) -> Result<ExitCode> {
    let regime = match args.regime {
        RegimeArg::Factor => QRegime::Factor(args.kappa),
        RegimeArg::Zero => QRegime::Zero,
        RegimeArg::Mixed => QRegime::Mixed(args.kappa),
    };
    let params = GridParams {
        interdictable_fraction: args.fraction,
        scenarios: args.scenarios,
        destinations: args.destinations,
        budget: args.budget,
        ..GridParams::new(args.rows, args.cols, regime, args.seed)
    };
    let inst = generate(&params)?;
    write_output(args.out.as_deref(), &to_json(&inst))?;
    Ok(ExitCode::SUCCESS)
}

fn with_budget(inst: &Instance, budget: f64) -> Result<Instance> {
    Ok(Instance::new(inst.network().clone(), inst.scenarios().to_vec(), budget)?)
}

fn cmd_bench(args: &BenchArgs) -> Result<ExitCode> {
    let opts = args.search.options()?;
    let mut paths: Vec<PathBuf> = glob::glob(&args.instances)
        .context("bad instance pattern")?
        .collect::<Result<_, _>>()?;
    paths.sort();

    let mut jobs = Vec::new();
    for path in &paths {
        let inst = load(path).with_context(|| format!("loading {}", path.display()))?;
        let name = instance_name(path);
        if args.budgets.is_empty() {
            jobs.push((name, inst));
        } else {
            for &b in &args.budgets {
                jobs.push((format!("{name}@b={b}"), with_budget(&inst, b)?));
            }
        }
    }

    let run = |(name, inst): &(String, Instance)| -> Vec<Row> {
        args.algs
            .iter()
            .map(|&alg| Row {
                instance: name.clone(),
                alg,
                budget: inst.budget(),
                outcome: solve(inst, alg, &opts).map_err(|e| e.to_string()),
            })
            .collect()
    };
    let rows: Vec<Row> = if args.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(args.jobs).build()?;
        pool.install(|| jobs.par_iter().flat_map_iter(run).collect())
    } else {
        jobs.iter().flat_map(run).collect()
    };

    let mut text = format!("{HEADER}\n");
    for row in &rows {
        text.push_str(&row.tsv());
        text.push('\n');
    }
    write_output(args.out.as_deref(), &text)?;
    for row in &rows {
        if let Err(e) = &row.outcome {
            eprintln!("{} {}: {e}", row.instance, row.alg);
        }
    }
    eprint!("{}", summary(&rows, &args.algs));

    let bad = disagreements(&rows, args.search.gap);
    if bad.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for line in &bad {
            eprintln!("objective mismatch: {line}");
        }
        Ok(ExitCode::FAILURE)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Generate(args) => cmd_generate(args),
        Command::Bench(args) => cmd_bench(args),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}
