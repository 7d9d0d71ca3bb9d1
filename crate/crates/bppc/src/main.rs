use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bppc::bench::{self, GroupBy};
use bppc::config::Overrides;
use bppc::format::{parse_instance, parse_packing, write_instance, write_packing};
use bppc::report::{trace_lines, RunReport};
use bppc::Stopwatch;
use bppc_core::{
    exact_optimum, run_ils, validate_packing, BinRemoval, CoverMode, FfdOrder, GeneratorSpec, GraphKind, Instance,
    InstanceClass, Mode,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Bin packing with conflicts: generate, solve, validate and benchmark.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random instance.
    Generate(GenerateArgs),
    /// Solve one instance.
    Solve(SolveArgs),
    /// Check a packing against an instance (exit 1 if infeasible).
    Validate(ValidateArgs),
    /// Solve a set of instances, optionally against best-known values.
    Bench(BenchArgs),
    /// Exact optimum of a small instance.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassArg {
    Triplet,
    Uniform,
    Largeweight,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphArg {
    Interval,
    Arbitrary,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    class: ClassArg,
    #[arg(long, value_enum, default_value = "arbitrary")]
    graph: GraphArg,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout if omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

/// Search parameters; each overrides the configuration file.
#[derive(Args, Default)]
struct ParamArgs {
    /// TOML file with search parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_shak: Option<usize>,
    #[arg(long)]
    n_ls: Option<usize>,
    #[arg(long)]
    n_sc: Option<usize>,
    #[arg(long)]
    s_pool: Option<usize>,
    /// Seconds per set covering solve.
    #[arg(long)]
    t_limit: Option<f64>,
    #[arg(long)]
    s_shak: Option<usize>,
    #[arg(long)]
    omega_c: Option<i64>,
    #[arg(long)]
    omega_w: Option<i64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// Seconds for the whole run.
    #[arg(long)]
    wall_limit: Option<f64>,
    #[arg(long, value_enum)]
    ffd_order: Option<FfdArg>,
    #[arg(long, value_enum)]
    bin_removal: Option<RemovalArg>,
    #[arg(long)]
    assign_max_nodes: Option<usize>,
    #[arg(long, value_enum)]
    cover_mode: Option<CoverArg>,
    #[arg(long)]
    sc_node_limit: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Simple,
    Complete,
}

#[derive(Clone, Copy, ValueEnum)]
enum FfdArg {
    Decreasing,
    Increasing,
}

#[derive(Clone, Copy, ValueEnum)]
enum RemovalArg {
    Minload,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum CoverArg {
    Covering,
    Partition,
}

impl ParamArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            n_shak: self.n_shak,
            n_ls: self.n_ls,
            n_sc: self.n_sc,
            s_pool: self.s_pool,
            t_limit: self.t_limit,
            s_shak: self.s_shak,
            omega_c: self.omega_c,
            omega_w: self.omega_w,
            mode: self.mode.map(|m| match m {
                ModeArg::Simple => Mode::Simple,
                ModeArg::Complete => Mode::Complete,
            }),
            seed: self.seed,
            wall_limit: self.wall_limit,
            ffd_order: self.ffd_order.map(|o| match o {
                FfdArg::Decreasing => FfdOrder::Decreasing,
                FfdArg::Increasing => FfdOrder::Increasing,
            }),
            bin_removal: self.bin_removal.map(|r| match r {
                RemovalArg::Minload => BinRemoval::MinLoad,
                RemovalArg::Random => BinRemoval::Random,
            }),
            assign_max_nodes: self.assign_max_nodes,
            cover_mode: self.cover_mode.map(|c| match c {
                CoverArg::Covering => CoverMode::Covering,
                CoverArg::Partition => CoverMode::Partition,
            }),
            sc_node_limit: self.sc_node_limit,
        }
    }

    fn params(&self) -> Result<bppc_core::SearchParams> {
        let file = match &self.config {
            Some(path) => Overrides::from_toml(&read(path)?).with_context(|| format!("{}", path.display()))?,
            None => Overrides::default(),
        };
        Ok(file.merged(&self.overrides()).to_params()?)
    }
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[command(flatten)]
    params: ParamArgs,
    /// Packing output; stdout if omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// JSON run summary.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Per-bin-count trace as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    instance: PathBuf,
    solution: PathBuf,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Instance files or directories of instance files.
    #[arg(required = true)]
    instances: Vec<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
    /// Runs per instance, with consecutive seeds.
    #[arg(long, default_value_t = 1)]
    repeats: u64,
    /// CSV with columns `name,z_bks[,opt]`.
    #[arg(long)]
    bks: Option<PathBuf>,
    /// Per-run CSV; stdout if omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Also print aggregated rows.
    #[arg(long, value_enum)]
    group_by: Option<GroupBy>,
}

#[derive(Args)]
struct OracleArgs {
    instance: PathBuf,
    #[arg(long, default_value_t = 50_000_000)]
    node_budget: u64,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => io::stdout().write_all(text.as_bytes()).context("cannot write to stdout"),
    }
}

fn load_instance(path: &Path) -> Result<Instance> {
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_instance(&read(path)?, &name).with_context(|| format!("{}", path.display()))
}

fn generate(args: GenerateArgs) -> Result<ExitCode> {
    let spec = GeneratorSpec {
        class: match args.class {
            ClassArg::Triplet => InstanceClass::Triplet,
            ClassArg::Uniform => InstanceClass::Uniform,
            ClassArg::Largeweight => InstanceClass::LargeWeight,
        },
        graph: match args.graph {
            GraphArg::Interval => GraphKind::Interval,
            GraphArg::Arbitrary => GraphKind::Arbitrary,
        },
        n: args.n,
        density: args.density,
        seed: args.seed,
    };
    let instance = spec.generate()?;
    write_output(args.out.as_deref(), &write_instance(&instance))?;
    Ok(ExitCode::SUCCESS)
}

fn solve(args: SolveArgs) -> Result<ExitCode> {
    let instance = load_instance(&args.instance)?;
    let params = args.params.params()?;
    let result = run_ils(&instance, &params, &Stopwatch::start());
    write_output(args.out.as_deref(), &write_packing(&result.packing))?;
    if let Some(path) = &args.report {
        let json = serde_json::to_string_pretty(&RunReport::new(&instance, &result))?;
        write_output(Some(path), &(json + "\n"))?;
    }
    if let Some(path) = &args.trace {
        write_output(Some(path), &trace_lines(&result.trace))?;
    }
    eprintln!(
        "{}: {} bins (lower bound {}), {}, {:.2}s",
        instance.name(),
        result.bins,
        result.lower_bound,
        if result.feasible { "feasible" } else { "infeasible" },
        result.elapsed.as_secs_f64()
    );
    Ok(ExitCode::SUCCESS)
}

fn validate(args: ValidateArgs) -> Result<ExitCode> {
    let instance = load_instance(&args.instance)?;
    let packing = parse_packing(&read(&args.solution)?, instance.len())
        .with_context(|| format!("{}", args.solution.display()))?;
    let report = match validate_packing(&instance, &packing) {
        Ok(report) => report,
        Err(e) => {
            println!("invalid: {e}");
            return Ok(ExitCode::from(1));
        }
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        for (b, load) in &report.overloads {
            println!("bin {}: load {} exceeds capacity {}", b + 1, load, instance.capacity());
        }
        for (b, i, j) in &report.conflicts {
            println!("bin {}: items {} and {} conflict", b + 1, i + 1, j + 1);
        }
        let verdict = if report.is_feasible() { "feasible" } else { "infeasible" };
        println!("{verdict}: {} bins", report.bins);
    }
    Ok(if report.is_feasible() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn instance_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for path in paths {
        if path.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(path)
                .with_context(|| format!("cannot list {}", path.display()))?
                .map(|e| e.map(|e| e.path()))
                .collect::<io::Result<_>>()?;
            entries.retain(|p| p.is_file());
            entries.sort();
            files.extend(entries);
        } else {
            files.push(path.clone());
        }
    }
    if files.is_empty() {
        bail!("no instance files found");
    }
    Ok(files)
}

fn bench(args: BenchArgs) -> Result<ExitCode> {
    let params = args.params.params()?;
    let instances: Vec<Instance> =
        instance_files(&args.instances)?.iter().map(|p| load_instance(p)).collect::<Result<_>>()?;
    let bks = match &args.bks {
        Some(path) => bench::read_bks(fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?)?,
        None => Default::default(),
    };
    let rows = match bench::run_benchmark(&instances, &params, args.repeats, &bks) {
        Ok(rows) => rows,
        Err(e @ bench::BenchError::Invalid { .. }) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(1));
        }
        Err(e) => return Err(e.into()),
    };
    let mut table = Vec::new();
    bench::write_rows(&mut table, &rows)?;
    write_output(args.out.as_deref(), &String::from_utf8(table)?)?;
    if let Some(by) = args.group_by {
        bench::write_groups(io::stdout(), &bench::aggregate(&rows, by))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn oracle(args: OracleArgs) -> Result<ExitCode> {
    let instance = load_instance(&args.instance)?;
    match exact_optimum(&instance, args.node_budget) {
        Some(k) => {
            println!("{k}");
            Ok(ExitCode::SUCCESS)
        }
        None => bail!("node budget of {} exhausted", args.node_budget),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Generate(args) => generate(args),
        Command::Solve(args) => solve(args),
        Command::Validate(args) => validate(args),
        Command::Bench(args) => bench(args),
        Command::Oracle(args) => oracle(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
