//! Sample grids for the reference figures.
//!
//! 1. damped cosine `e^{-s/2}(cos(√3 s/2) + sin(√3 s/2))`
//! 2. norm envelope sweep around the decaying IVP solution
//! 3. decaying IVP solution `9e^{-2s} - 7e^{-3s}` (α = 0.63 by default)
//! 4. the same solution over an α sweep
//! 5. growing oscillation `-2e^{s/4}cos 3s + ½e^{s/4}sin 3s`
//! 6. forced-oscillator beat `2A sin(0.1s) sin(0.9s)`, `A = ½/(1 - 0.8²)`
//! 7. Euler curve `(2/3)c s^{1/2} + k s^{-1}` with `c = k = 1`

use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use falcon_core::{
    norm_bound_check, CantorSetSpec, Profile, StaircaseEvaluator, StaircaseMode,
};
use rayon::prelude::*;

use crate::{check_samples, csv, grid, usage};

#[derive(Args)]
pub struct FigureArgs {
    /// Figure number, 1 to 7.
    #[arg(long)]
    figure: u8,
    /// Comma-separated α values; figure 3 defaults to 0.63, the rest to 0.5,0.63,0.8,1.0.
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    /// `power` (default) or `exact`; exact uses the middle-third staircase and ignores --alphas.
    #[arg(long, default_value = "power")]
    mode: StaircaseMode,
    #[arg(long, default_value_t = 1001)]
    samples: usize,
    /// Right end of the x grid; each figure has its own default.
    #[arg(long)]
    xmax: Option<f64>,
    /// Base point of the envelope in figure 2.
    #[arg(long, default_value_t = 0.0)]
    x0: f64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn default_xmax(figure: u8) -> f64 {
    match figure {
        1 => 10.0,
        2..=4 => 3.0,
        5 => 2.0,
        6 => 60.0,
        _ => 5.0,
    }
}

fn profile(text: &str) -> Profile {
    text.parse().expect("built-in figure profile parses")
}

fn curve(figure: u8) -> Profile {
    let amp = 0.5 / (1.0 - 0.8 * 0.8);
    match figure {
        1 => {
            let w = 3f64.sqrt() / 2.0;
            profile(&format!("exp(-0.5*s)*cos({w}*s) + exp(-0.5*s)*sin({w}*s)"))
        }
        2..=4 => profile("9*exp(-2*s) - 7*exp(-3*s)"),
        5 => profile("-2*exp(0.25*s)*cos(3*s) + 0.5*exp(0.25*s)*sin(3*s)"),
        // 2A sin(0.1s) sin(0.9s) is A(cos 0.8s - cos s); the profile algebra keeps the cos form.
        6 => profile(&format!("{amp}*cos(0.8*s) - {amp}*cos(s)")),
        _ => profile("0.6666666666666666*s^0.5 + s^-1"),
    }
}

struct Sheet {
    name: String,
    header: &'static [&'static str],
    rows: Vec<Vec<f64>>,
}

fn sheet(args: &FigureArgs, ev: &StaircaseEvaluator, tag: String) -> anyhow::Result<Sheet> {
    let (lo, hi) = (ev.spec().lo(), ev.spec().hi());
    let name = format!("figure{}_{tag}.csv", args.figure);
    if args.figure == 2 {
        let report = norm_bound_check(&curve(2), 5.0, 6.0, ev, args.x0, (lo, hi), args.samples, false)?;
        let rows = report
            .samples
            .iter()
            .map(|s| vec![s.x, s.norm, s.lower, s.upper])
            .collect();
        return Ok(Sheet { name, header: &["x", "norm", "lower", "upper"], rows });
    }
    let f = curve(args.figure);
    let mut rows = Vec::with_capacity(args.samples);
    for x in grid(lo, hi, args.samples) {
        let s = ev.staircase(x)?;
        if f.needs_positive_s() && s <= 0.0 {
            continue;
        }
        rows.push(vec![x, f.evaluate(s)?]);
    }
    Ok(Sheet { name, header: &["x", "f"], rows })
}

pub fn run(args: FigureArgs) -> anyhow::Result<bool> {
    if !(1..=7).contains(&args.figure) {
        return Err(usage(format!("--figure must be 1 to 7, got {}", args.figure)));
    }
    check_samples(args.samples)?;
    let xmax = args.xmax.unwrap_or(default_xmax(args.figure));
    if !(xmax.is_finite() && xmax > 0.0) {
        return Err(usage(format!("--xmax must be positive, got {xmax}")));
    }
    let set = crate::apply_depth_cap(CantorSetSpec::new(2, 1.0 / 3.0, 0.0, xmax)?)?;
    let sheets: Vec<Sheet> = match args.mode {
        StaircaseMode::Exact => vec![sheet(&args, &StaircaseEvaluator::exact(set)?, "exact".into())?],
        StaircaseMode::Power => {
            let alphas = args.alphas.clone().unwrap_or_else(|| match args.figure {
                3 => vec![0.63],
                _ => vec![0.5, 0.63, 0.8, 1.0],
            });
            if let Some(bad) = alphas.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
                return Err(usage(format!("alpha values must lie in (0, 1], got {bad}")));
            }
            alphas
                .par_iter()
                .map(|&a| {
                    let ev = StaircaseEvaluator::power_law(set.clone()).with_alpha(a)?;
                    sheet(&args, &ev, format!("alpha{a}"))
                })
                .collect::<anyhow::Result<_>>()?
        }
    };
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    for s in sheets {
        let path = args.out.join(&s.name);
        csv::write(Some(&path), s.header, s.rows.iter())?;
        eprintln!("wrote {}", path.display());
    }
    Ok(true)
}
