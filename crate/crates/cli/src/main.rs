mod csv;
mod figures;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use falcon_core::{
    dimension_report, falpha_derivative, falpha_integral, falpha_integral_extrapolated,
    CantorSetSpec, FalconError, ProblemFile, Profile, SampledFunction, StaircaseEvaluator,
    StaircaseMode,
};
use serde_json::json;

/// Local fractal calculus on Cantor-like sets.
#[derive(Parser)]
#[command(name = "falcon", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the integral staircase function to CSV.
    Staircase(StaircaseArgs),
    /// Estimate the gamma-dimension and report the mass sequence as JSON.
    Dimension(DimensionArgs),
    /// Solve a problem file and print the solution bundle as JSON.
    Solve(SolveArgs),
    /// Write the sample grids behind the reference figures.
    Figure(figures::FigureArgs),
    /// Run the cross-check suite over a problem file.
    Verify(verify::VerifyArgs),
    /// Numeric F^α-derivative of an expression in s at a point.
    Deriv(DerivArgs),
    /// F^α-integral of an expression in s over [a, b].
    Integrate(IntegrateArgs),
}

#[derive(Args)]
struct SetArgs {
    /// Cantor set JSON, e.g. {"m": 2, "r": "1/3", "lo": 0, "hi": 1}. Defaults to the middle-third set.
    #[arg(long)]
    spec: Option<PathBuf>,
}

impl SetArgs {
    fn load(&self) -> anyhow::Result<CantorSetSpec> {
        let spec = match &self.spec {
            Some(p) => serde_json::from_str(&read(p)?)
                .with_context(|| format!("{} is not a Cantor set description", p.display()))
                .map_err(usage)?,
            None => CantorSetSpec::middle_third(),
        };
        apply_depth_cap(spec)
    }
}

#[derive(Args)]
struct StaircaseArgs {
    #[command(flatten)]
    set: SetArgs,
    #[arg(long, default_value_t = 1001)]
    samples: usize,
    /// Emit a single `S` column for this mode instead of both.
    #[arg(long)]
    mode: Option<StaircaseMode>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DimensionArgs {
    #[command(flatten)]
    set: SetArgs,
    /// Left end of the window (defaults to the set's base interval).
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Problem JSON (a single problem, a list, or {"problems": [...]}).
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write (x, f(x)) samples of each solution to this CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = 1001)]
    samples: usize,
}

#[derive(Args)]
struct DerivArgs {
    #[command(flatten)]
    set: SetArgs,
    /// Expression in s, e.g. "2*exp(-s) + s^2*cos(3*s)".
    #[arg(long)]
    expr: String,
    #[arg(long)]
    x: f64,
    #[arg(long, default_value = "exact")]
    mode: StaircaseMode,
    #[arg(long, default_value_t = 12)]
    depth: usize,
}

#[derive(Args)]
struct IntegrateArgs {
    #[command(flatten)]
    set: SetArgs,
    #[arg(long)]
    expr: String,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long, default_value = "exact")]
    mode: StaircaseMode,
    /// The integral uses m^refinement equal-mass pieces.
    #[arg(long, default_value_t = 12)]
    refinement: usize,
}

/// Marks an error as bad input (exit code 2).
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(e: impl std::fmt::Display) -> anyhow::Error {
    anyhow::Error::new(Usage(format!("{e:#}")))
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn depth_cap() -> anyhow::Result<Option<usize>> {
    match std::env::var("FALCON_DEPTH_CAP") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(usage(format!("FALCON_DEPTH_CAP must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(None),
    }
}

fn apply_depth_cap(spec: CantorSetSpec) -> anyhow::Result<CantorSetSpec> {
    Ok(match depth_cap()? {
        Some(cap) => spec.with_depth_cap(cap),
        None => spec,
    })
}

fn check_samples(samples: usize) -> anyhow::Result<()> {
    if samples < 2 {
        return Err(usage(format!("--samples must be at least 2, got {samples}")));
    }
    Ok(())
}

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| {
        if i + 1 == n {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    })
}

fn write_text(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load_problems(path: &Path) -> anyhow::Result<Vec<falcon_core::ProblemSpec>> {
    let file: ProblemFile = serde_json::from_str(&read(path)?)
        .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let cap = depth_cap()?;
    Ok(file
        .into_problems()
        .into_iter()
        .map(|mut p| {
            if let Some(cap) = cap {
                p.set = p.set.with_depth_cap(cap);
            }
            p
        })
        .collect())
}

fn cmd_staircase(args: StaircaseArgs) -> anyhow::Result<()> {
    check_samples(args.samples)?;
    let spec = args.set.load()?;
    let xs: Vec<f64> = grid(spec.lo(), spec.hi(), args.samples).collect();
    let mut columns = Vec::new();
    let modes = match args.mode {
        Some(m) => vec![m],
        None => vec![StaircaseMode::Exact, StaircaseMode::Power],
    };
    for mode in &modes {
        let ev = StaircaseEvaluator::new(spec.clone(), *mode)?;
        columns.push(xs.iter().map(|&x| ev.staircase(x)).collect::<Result<Vec<_>, _>>()?);
    }
    let header: &[&str] = if args.mode.is_some() { &["x", "S"] } else { &["x", "S_exact", "S_power"] };
    let rows = xs.iter().enumerate().map(|(i, &x)| {
        std::iter::once(x).chain(columns.iter().map(|c| c[i])).collect::<Vec<_>>()
    });
    csv::write(args.out.as_deref(), header, rows)
}

fn cmd_dimension(args: DimensionArgs) -> anyhow::Result<()> {
    let spec = args.set.load()?;
    let report = dimension_report(&spec, args.a.unwrap_or(spec.lo()), args.b.unwrap_or(spec.hi()))?;
    write_text(args.out.as_deref(), &serde_json::to_string_pretty(&report)?)
}

fn cmd_solve(args: SolveArgs) -> anyhow::Result<()> {
    check_samples(args.samples)?;
    let problems = load_problems(&args.spec)?;
    if problems.is_empty() {
        return Err(usage(format!("{} holds no problems", args.spec.display())));
    }
    let mut bundles = Vec::new();
    let mut rows = Vec::new();
    for (i, p) in problems.iter().enumerate() {
        let ev = p.evaluator()?;
        let bundle = p.solve_with(&ev)?;
        if args.csv.is_some() {
            let (lo, hi) = (ev.spec().lo(), ev.spec().hi());
            for x in grid(lo, hi, args.samples) {
                let s = ev.staircase(x)?;
                if bundle.solution.needs_positive_s() && s <= 0.0 {
                    continue;
                }
                rows.push(vec![i as f64, x, bundle.solution.evaluate(s)?]);
            }
        }
        bundles.push(json!({ "problem": p.label(i), "bundle": bundle }));
    }
    if let Some(path) = &args.csv {
        let header: &[&str] = &["problem", "x", "f"];
        csv::write(Some(path), header, rows.into_iter())?;
    }
    let value = if bundles.len() == 1 { bundles.remove(0) } else { json!(bundles) };
    write_text(args.out.as_deref(), &serde_json::to_string_pretty(&value)?)
}

fn expression(text: &str) -> anyhow::Result<Profile> {
    text.parse::<Profile>().map_err(anyhow::Error::new)
}

fn cmd_deriv(args: DerivArgs) -> anyhow::Result<()> {
    let g = expression(&args.expr)?;
    let ev = StaircaseEvaluator::new(args.set.load()?, args.mode)?;
    let f = SampledFunction::of_profile(g.clone(), &ev);
    let numeric = falpha_derivative(&f, &ev, args.x, args.depth)?;
    let x = ev.snap(args.x, args.depth + 1)?;
    let s = ev.staircase(x)?;
    let symbolic = g.differentiate();
    let out = json!({
        "x": x,
        "s": s,
        "numeric": numeric,
        "symbolic": symbolic.evaluate(s)?,
        "derivative_profile": symbolic.to_string(),
    });
    write_text(None, &serde_json::to_string_pretty(&out)?)
}

fn cmd_integrate(args: IntegrateArgs) -> anyhow::Result<()> {
    let g = expression(&args.expr)?;
    let ev = StaircaseEvaluator::new(args.set.load()?, args.mode)?;
    let (a, b) = (args.a.unwrap_or(ev.spec().lo()), args.b.unwrap_or(ev.spec().hi()));
    let f = SampledFunction::of_profile(g.clone(), &ev);
    let plain = falpha_integral(&f, &ev, a, b, args.refinement)?;
    let extrapolated = falpha_integral_extrapolated(&f, &ev, a, b, args.refinement)?;
    let mut out = json!({
        "a": a,
        "b": b,
        "refinement": args.refinement,
        "integral": plain,
        "extrapolated": extrapolated,
    });
    // Closed form when the antiderivative is elementary.
    if let Ok(anti) = g.antiderivative() {
        let exact = anti.evaluate(ev.staircase(b)?)? - anti.evaluate(ev.staircase(a)?)?;
        out["symbolic"] = json!(exact);
    }
    write_text(None, &serde_json::to_string_pretty(&out)?)
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match e.downcast_ref::<FalconError>() {
        Some(
            FalconError::InvalidArgument(_)
            | FalconError::Parse { .. }
            | FalconError::DepthCapExceeded { .. }
            | FalconError::Domain(_)
            | FalconError::NotSecondOrder
            | FalconError::Precondition(_),
        ) => 2,
        Some(
            FalconError::UnsupportedTerm(_)
            | FalconError::NonElementary(_),
        ) => 4,
        Some(_) => 3,
        None => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Staircase(a) => cmd_staircase(a).map(|_| true),
        Command::Dimension(a) => cmd_dimension(a).map(|_| true),
        Command::Solve(a) => cmd_solve(a).map(|_| true),
        Command::Figure(a) => figures::run(a).map(|_| true),
        Command::Verify(a) => verify::run(a),
        Command::Deriv(a) => cmd_deriv(a).map(|_| true),
        Command::Integrate(a) => cmd_integrate(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("falcon: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
