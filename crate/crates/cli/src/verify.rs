use std::path::PathBuf;

use clap::Args;
use falcon_core::solver::residual;
use falcon_core::{
    characteristic_roots, homogeneous_basis, run_checks, CantorSetSpec, CheckResult, ConstCoeffFDE,
    ProblemFile, StaircaseEvaluator,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::{load_problems, usage, write_text};

const STOCK: &str = include_str!("../data/stock_problems.json");

#[derive(Args)]
pub struct VerifyArgs {
    /// Problem file; the built-in examples are used when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Also run a randomized constant-coefficient residual sweep with this seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of equations drawn by the randomized sweep.
    #[arg(long, default_value_t = 200)]
    draws: usize,
    /// Write every check result as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn stock() -> anyhow::Result<Vec<falcon_core::ProblemSpec>> {
    let file: ProblemFile = serde_json::from_str(STOCK)?;
    let cap = crate::depth_cap()?;
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

fn sweep(seed: u64, draws: usize) -> anyhow::Result<Vec<CheckResult>> {
    let ev = StaircaseEvaluator::exact(crate::apply_depth_cap(CantorSetSpec::middle_third())?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(draws);
    for i in 0..draws {
        let a = rng.random_range(0.5..4.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let (b, c) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let eq = ConstCoeffFDE::new(a, b, c)?.to_linear();
        let (f1, f2) = homogeneous_basis(&characteristic_roots(a, b, c)?);
        let worst = residual(&eq, &f1, &ev, 16)?.max(residual(&eq, &f2, &ev, 16)?);
        out.push(CheckResult {
            problem: format!("sweep {seed}/{i} ({a:.4}, {b:.4}, {c:.4})"),
            check: "basis-residual".into(),
            passed: worst == 0.0,
            detail: format!("max residual {worst:e}"),
        });
    }
    Ok(out)
}

pub fn run(args: VerifyArgs) -> anyhow::Result<bool> {
    let problems = match &args.spec {
        Some(p) => load_problems(p)?,
        None => stock()?,
    };
    if args.seed.is_some() && args.draws == 0 {
        return Err(usage("--draws must be positive"));
    }
    let mut results: Vec<CheckResult> = problems
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, p)| run_checks(p, i))
        .collect();
    if let Some(seed) = args.seed {
        results.extend(sweep(seed, args.draws)?);
    }

    if results.is_empty() {
        eprintln!("0 checks: nothing to verify");
        println!("0 checks, 0 failed");
        return Ok(true);
    }
    let failed: Vec<&CheckResult> = results.iter().filter(|r| !r.passed).collect();
    let width = results.iter().map(|r| r.problem.len()).max().unwrap_or(7).max(7);
    eprintln!("{:<width$}  {:<20}  {:<6}  detail", "problem", "check", "result");
    for r in &results {
        // Sweep rows only show up when they fail.
        if r.check == "basis-residual" && r.passed {
            continue;
        }
        let verdict = if r.passed { "ok" } else { "FAIL" };
        eprintln!("{:<width$}  {:<20}  {:<6}  {}", r.problem, r.check, verdict, r.detail);
    }
    if !failed.is_empty() {
        eprintln!();
        eprintln!("failing checks:");
        for r in &failed {
            eprintln!("  {} / {}: {}", r.problem, r.check, r.detail);
        }
    }
    println!("{} checks, {} failed", results.len(), failed.len());
    if let Some(path) = &args.out {
        write_text(Some(path), &serde_json::to_string_pretty(&results)?)?;
    }
    Ok(failed.is_empty())
}
