use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use maximin::approx::{self, RademacherRounding};
use maximin::bench::{self, BenchConfig};
use maximin::exact::{self, ExactOutcome};
use maximin::{hardness, oracle, relax, rng, tail, DispersionInstance};

#[derive(Parser)]
#[command(name = "maximin", version, about = "Weighted maximin dispersion on the ball and the box")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance exactly (when the sign system allows) or by sampling.
    Solve(SolveArgs),
    /// Solve the convex relaxation and print the certified bracket.
    Relax(RelaxArgs),
    /// Run a randomized approximation algorithm several times.
    Approx(ApproxArgs),
    /// Compare both randomized algorithms over a range of point counts.
    Bench(BenchArgs),
    /// Build the partition-reduction instance for an integer vector.
    HardnessGen(HardnessArgs),
    /// Evaluate, invert or check the spherical-cap tail function.
    Tail {
        #[command(subcommand)]
        command: TailCommand,
    },
}

#[derive(Args)]
#[command(group(ArgGroup::new("method").required(true).args(["exact", "oracle"])))]
struct SolveArgs {
    instance: PathBuf,
    /// Push the relaxation optimizer to the sphere along a sign direction.
    #[arg(long)]
    exact: bool,
    /// Uniform sampling with local refinement.
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value_t = oracle::DEFAULT_BUDGET)]
    budget: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relaxation tolerance; defaults to 1e-7 times the initial bound.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct RelaxArgs {
    instance: PathBuf,
    #[arg(long)]
    tol: Option<f64>,
    /// Also emit the lifted (n+1)x(n+1) matrix.
    #[arg(long)]
    lift: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Ball,
    General,
    Box,
}

#[derive(Args)]
struct ApproxArgs {
    instance: PathBuf,
    #[arg(long, value_enum)]
    algo: Algo,
    #[arg(long, default_value_t = 0.9999)]
    rho: f64,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Md,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 5)]
    n: usize,
    /// A single count `m` or an inclusive range `a..b`.
    #[arg(long, default_value = "6..30", value_parser = parse_range)]
    m: (usize, usize),
    #[arg(long, default_value_t = 10)]
    runs: usize,
    #[arg(long, default_value_t = 0.9999)]
    rho: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Oracle samples per instance.
    #[arg(long, default_value_t = oracle::DEFAULT_BUDGET)]
    budget: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct HardnessArgs {
    /// Comma-separated nonzero integers.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    a: Vec<i64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = hardness::DEFAULT_TOLERANCE)]
    tol: f64,
}

#[derive(Subcommand)]
enum TailCommand {
    /// Print S(n, alpha).
    S {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: f64,
    },
    /// Print alpha with S(n, alpha) = beta.
    Inv {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        beta: f64,
    },
    /// Check S(n, a) < exp(-0.45 a^2) on the grid and along checkpoint chains.
    Check {
        #[arg(long, default_value_t = 60)]
        n_max: usize,
    },
}

fn parse_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
        None => {
            let v = parse(s)?;
            (v, v)
        }
    };
    if lo == 0 || lo > hi {
        return Err(format!("invalid range {s:?}"));
    }
    Ok((lo, hi))
}

/// Shortest decimal that survives a round trip at 15 significant digits, so
/// `0.25000000000000006` prints as `0.25`.
fn tidy(x: f64) -> f64 {
    format!("{x:.14e}").parse().unwrap_or(x)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn load(path: &Path) -> Result<DispersionInstance> {
    DispersionInstance::read_json(path).with_context(|| format!("cannot read instance {}", path.display()))
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn solve(args: SolveArgs) -> Result<()> {
    let inst = load(&args.instance)?;
    let tol = args.tol.unwrap_or_else(|| relax::default_tolerance(&inst));
    if args.exact {
        match exact::solve_exact(&inst, tol)? {
            ExactOutcome::Optimal(r) => print_json(&json!({
                "method": "exact",
                "x": r.x_opt,
                "value": r.value,
                "direction": r.certificate,
                "alpha": r.alpha,
                "relaxation_bound": r.relaxation.upper_bound(),
            })),
            ExactOutcome::NotApplicable => bail!(
                "exact method not applicable: the only solution of (x^i)^T x <= 0 for all i is x = 0, \
                 so the relaxation need not be tight; try --oracle"
            ),
        }
    } else {
        let r = oracle::solve_global(&inst, args.budget, &mut rng::seeded(args.seed));
        let cr = relax::solve_cr(&inst, tol)?;
        print_json(&json!({
            "method": "oracle",
            "x": r.x_best,
            "value": r.value,
            "relaxation_bound": cr.upper_bound(),
            "trace": r.method_trace,
        }))
    }
}

fn relax_cmd(args: RelaxArgs) -> Result<()> {
    let inst = load(&args.instance)?;
    let tol = args.tol.unwrap_or_else(|| relax::default_tolerance(&inst));
    let r = relax::solve_cr(&inst, tol)?;
    let mut out = json!({
        "zeta_star": r.zeta_star,
        "gap": r.gap,
        "converged": r.converged,
        "iterations": r.iterations,
        "x_star": r.x_star,
    });
    if args.lift {
        let z = relax::lift(&r, &inst)?;
        let rows: Vec<Vec<f64>> = z.matrix().row_iter().map(|row| row.iter().copied().collect()).collect();
        out["lift"] = json!(rows);
        out["gamma1"] = json!(relax::gamma1(&z)?);
    }
    print_json(&out)
}

fn approx_cmd(args: ApproxArgs) -> Result<()> {
    let inst = load(&args.instance)?;
    if args.runs == 0 {
        bail!("--runs must be at least 1");
    }
    let general = match args.algo {
        Algo::General => {
            let cr = relax::solve_cr(&inst, relax::default_tolerance(&inst))?;
            Some(RademacherRounding::from_lift(&inst, args.rho, &relax::lift(&cr, &inst)?)?)
        }
        Algo::Box => Some(RademacherRounding::simplified(&inst, args.rho)?),
        Algo::Ball => None,
    };
    let mut out = output(args.out.as_deref())?;
    writeln!(out, "run,f_value,alpha,bound_r,refined_bound,draws")?;
    for run in 0..args.runs {
        let mut r = rng::stream(args.seed, run as u64);
        let res = match &general {
            Some(g) => g.run(&inst, approx::DEFAULT_BUDGET, &mut r)?,
            None => approx::approx_ball(&inst, args.rho, &mut r)?,
        };
        writeln!(
            out,
            "{run},{},{},{},{},{}",
            res.f_value, res.alpha_used, res.bound_r, res.refined_bound, res.raw_samples
        )?;
    }
    out.flush()?;
    Ok(())
}

fn bench_cmd(args: BenchArgs) -> Result<()> {
    let config = BenchConfig {
        n: args.n,
        m: args.m.0..=args.m.1,
        runs: args.runs,
        rho: args.rho,
        seed: args.seed,
        oracle_budget: args.budget,
    };
    let records = bench::bench(&config)?;
    for r in &records {
        for v in r.violations() {
            eprintln!("warning: m = {}: {v}", r.m);
        }
    }
    let mut out = output(args.out.as_deref())?;
    match args.format {
        Format::Csv => bench::write_csv(&records, &mut out)?,
        Format::Md => out.write_all(bench::to_markdown(&records).as_bytes())?,
    }
    out.flush()?;
    Ok(())
}

fn hardness_cmd(args: HardnessArgs) -> Result<()> {
    let art = hardness::build_hardness(&args.a, args.tol)?;
    art.instance.write_json(&args.out)?;
    let report_path = args.out.with_extension("report.json");
    let report = json!({
        "a": art.a,
        "t_star": art.t_star,
        "beta": art.beta_val,
        "gamma": art.gamma_val,
        "lambda_diag": art.lambda_diag,
        "feasible_value": art.feasible_value(),
        "identities": art.identities(),
    });
    std::fs::write(&report_path, serde_json::to_string_pretty(&report)?)
        .with_context(|| format!("cannot write {}", report_path.display()))?;
    println!("{}", report_path.display());
    Ok(())
}

fn tail_cmd(command: TailCommand) -> Result<()> {
    match command {
        TailCommand::S { n, alpha } => println!("{}", tidy(tail::tail_s(n, alpha)?)),
        TailCommand::Inv { n, beta } => println!("{}", tail::tail_s_inverse(n, beta)?),
        TailCommand::Check { n_max } => {
            if n_max < 2 {
                bail!("--n-max must be at least 2");
            }
            let grid: Vec<f64> = (1..=79).map(|k| k as f64 / 10.0).collect();
            let report = tail::tail_bound_check(2..=n_max, &grid)?;
            let chain_n = n_max.min(39);
            let chain = tail::checkpoint_chain(&tail::CHECKPOINTS, chain_n)?;
            let greedy = tail::greedy_checkpoints(chain_n)?;
            let greedy_chain = tail::checkpoint_chain(&greedy, chain_n)?;
            let chain_ok = chain.iter().all(|c| c.holds());
            let greedy_ok = greedy_chain.iter().all(|c| c.holds());
            let ok = report.passed() && greedy_ok;
            print_json(&json!({
                "passed": ok,
                "grid": report,
                "chain": { "holds": chain_ok, "links": chain },
                "greedy_chain": { "holds": greedy_ok, "points": greedy, "links": greedy_chain },
            }))?;
            if !ok {
                return Err(anyhow!("tail bound check failed"));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Relax(a) => relax_cmd(a),
        Command::Approx(a) => approx_cmd(a),
        Command::Bench(a) => bench_cmd(a),
        Command::HardnessGen(a) => hardness_cmd(a),
        Command::Tail { command } => tail_cmd(command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
