//! JSON problem descriptions and the cross-checks run against them.

use serde::{Deserialize, Serialize};

use crate::cantor::CantorSetSpec;
use crate::error::{FalconError, Result};
use crate::etp::Profile;
use crate::falpha::{falpha_integral_extrapolated, SampledFunction};
use crate::solver::{
    general_solution, general_solution_linear, norm_bound_check, numeric_residual, residual,
    ConstCoeffFDE, InitialConditions, LinearFDE, SolutionBundle, RESIDUAL_TOLERANCE,
};
use crate::staircase::{StaircaseEvaluator, StaircaseMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Const,
    Linear,
}

/// One equation with optional initial data and an optional claimed solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    #[serde(rename = "type")]
    pub kind: ProblemKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(rename = "P", default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Profile>,
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Profile>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Profile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Profile>,
    /// Known homogeneous solution, required for `linear` problems.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<Profile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ic: Option<InitialConditions>,
    #[serde(default)]
    pub set: CantorSetSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<StaircaseMode>,
    /// α for the power-law staircase; defaults to the set's dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Claimed solution to verify instead of solving.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<Profile>,
}

/// A problem file is either a bare list or `{"problems": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemFile {
    List(Vec<ProblemSpec>),
    Wrapped { problems: Vec<ProblemSpec> },
    Single(Box<ProblemSpec>),
}

impl ProblemFile {
    pub fn into_problems(self) -> Vec<ProblemSpec> {
        match self {
            ProblemFile::List(v) | ProblemFile::Wrapped { problems: v } => v,
            ProblemFile::Single(p) => vec![*p],
        }
    }
}

impl ProblemSpec {
    pub fn label(&self, index: usize) -> String {
        self.name.clone().unwrap_or_else(|| format!("problem {index}"))
    }

    pub fn evaluator(&self) -> Result<StaircaseEvaluator> {
        match self.mode.unwrap_or(StaircaseMode::Exact) {
            StaircaseMode::Exact => {
                if self.alpha.is_some() {
                    return Err(FalconError::InvalidArgument(
                        "alpha can only be set in power mode".into(),
                    ));
                }
                StaircaseEvaluator::exact(self.set.clone())
            }
            StaircaseMode::Power => {
                let ev = StaircaseEvaluator::power_law(self.set.clone());
                match self.alpha {
                    Some(a) => ev.with_alpha(a),
                    None => Ok(ev),
                }
            }
        }
    }

    fn missing(&self, field: &str) -> FalconError {
        FalconError::InvalidArgument(format!("{:?} problem needs field {field:?}", self.kind))
    }

    pub fn const_equation(&self) -> Result<ConstCoeffFDE> {
        let get = |v: Option<f64>, f: &str| v.ok_or_else(|| self.missing(f));
        let eq = ConstCoeffFDE::new(get(self.a, "a")?, get(self.b, "b")?, get(self.c, "c")?)?;
        Ok(eq.with_forcing(self.g.clone().unwrap_or_default()))
    }

    pub fn equation(&self) -> Result<LinearFDE> {
        match self.kind {
            ProblemKind::Const => Ok(self.const_equation()?.to_linear()),
            ProblemKind::Linear => {
                let get = |v: &Option<Profile>, f: &str| v.clone().ok_or_else(|| self.missing(f));
                let eq = LinearFDE::new(get(&self.p, "P")?, get(&self.q, "Q")?, get(&self.r, "R")?)?;
                Ok(eq.with_forcing(self.g.clone().unwrap_or_default()))
            }
        }
    }

    pub fn solve_with(&self, ev: &StaircaseEvaluator) -> Result<SolutionBundle> {
        match self.kind {
            ProblemKind::Const => general_solution(&self.const_equation()?, self.ic.as_ref(), ev),
            ProblemKind::Linear => {
                let f1 = self.f1.as_ref().ok_or_else(|| self.missing("f1"))?;
                general_solution_linear(&self.equation()?, f1, self.ic.as_ref(), ev)
            }
        }
    }

    pub fn solve(&self) -> Result<SolutionBundle> {
        self.solve_with(&self.evaluator()?)
    }
}

/// Outcome of one named check on one problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub problem: String,
    pub check: String,
    pub passed: bool,
    pub detail: String,
}

/// Relative tolerance of the numeric (stencil) residual.
pub const NUMERIC_RESIDUAL_TOLERANCE: f64 = 1e-4;
/// Tolerance of the fundamental-theorem check.
pub const FUNDAMENTAL_THEOREM_TOLERANCE: f64 = 1e-6;

fn check(problem: &str, name: &str, outcome: Result<(bool, String)>) -> CheckResult {
    let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    CheckResult {
        problem: problem.into(),
        check: name.into(),
        passed,
        detail,
    }
}

/// Partition depth giving roughly 4096 equal-mass pieces.
fn integral_refinement(m: usize) -> usize {
    ((4096f64).ln() / (m as f64).ln()).ceil() as usize
}

/// Symbolic residual, initial data, numeric residual, fundamental theorem
/// and (for homogeneous constant-coefficient problems) the norm envelope.
pub fn run_checks(spec: &ProblemSpec, index: usize) -> Vec<CheckResult> {
    let label = spec.label(index);
    let setup = spec.evaluator().and_then(|ev| {
        let eq = spec.equation()?;
        let candidate = match &spec.solution {
            Some(s) => s.clone(),
            None => spec.solve_with(&ev)?.solution,
        };
        Ok((ev, eq, candidate))
    });
    let (ev, eq, cand) = match setup {
        Ok(t) => t,
        Err(e) => return vec![check(&label, "setup", Err(e))],
    };
    let mut out = Vec::new();

    out.push(check(
        &label,
        "symbolic-residual",
        residual(&eq, &cand, &ev, 64).map(|r| (r < RESIDUAL_TOLERANCE, format!("max |L f - g| = {r:e}"))),
    ));

    if let Some(ic) = &spec.ic {
        out.push(check(
            &label,
            "initial-conditions",
            ic.place(&ev).and_then(|(_, s0)| {
                let e0 = (cand.evaluate(s0)? - ic.f0).abs();
                let e1 = (cand.differentiate().evaluate(s0)? - ic.df0).abs();
                let ok = e0 < RESIDUAL_TOLERANCE && e1 < RESIDUAL_TOLERANCE;
                Ok((ok, format!("|f(x0) - f0| = {e0:e}, |Df(x0) - Df0| = {e1:e}")))
            }),
        ));
    }

    out.push(check(
        &label,
        "numeric-residual",
        numeric_check(&eq, &cand, &ev),
    ));

    out.push(check(
        &label,
        "fundamental-theorem",
        fundamental_theorem(&cand, &ev),
    ));

    if spec.kind == ProblemKind::Const && eq.forcing.is_zero() {
        if let Ok(ceq) = spec.const_equation() {
            let (a1, a2) = (ceq.b / ceq.a, ceq.c / ceq.a);
            let x0 = spec.ic.map_or(ev.spec().lo(), |ic| ic.x0);
            out.push(check(
                &label,
                "norm-bound",
                norm_bound_check(&cand, a1, a2, &ev, x0, (ev.spec().lo(), ev.spec().hi()), 200, false)
                    .map(|r| {
                        let escaped = r
                            .samples
                            .iter()
                            .filter(|s| s.norm < s.lower || s.norm > s.upper)
                            .count();
                        (r.all_within, format!("{escaped} of {} samples outside e^(±{}|ΔS|)", r.samples.len(), r.bound_constant_used))
                    }),
            ));
        }
    }
    out
}

fn numeric_check(eq: &LinearFDE, cand: &Profile, ev: &StaircaseEvaluator) -> Result<(bool, String)> {
    let r = numeric_residual(eq, cand, ev, 6, 8)?;
    // Scale by the size of the individual terms at the same points.
    let (d1, d2) = (cand.differentiate(), cand.differentiate().differentiate());
    let (lo, hi) = ev.s_range();
    let mut scale: f64 = 0.0;
    for i in 0..6 {
        let s = lo.max(0.0) + (hi - lo.max(0.0)) * (i as f64 + 0.5) / 6.0;
        let t = (eq.p.evaluate(s)? * d2.evaluate(s)?).abs()
            + (eq.q.evaluate(s)? * d1.evaluate(s)?).abs()
            + (eq.r.evaluate(s)? * cand.evaluate(s)?).abs()
            + eq.forcing.evaluate(s)?.abs();
        scale = scale.max(t);
    }
    let tol = NUMERIC_RESIDUAL_TOLERANCE * scale.max(1.0);
    Ok((r <= tol, format!("max |L f - g| = {r:e} (tolerance {tol:e})")))
}

fn fundamental_theorem(cand: &Profile, ev: &StaircaseEvaluator) -> Result<(bool, String)> {
    let (lo, hi) = (ev.spec().lo(), ev.spec().hi());
    let (s_lo, s_hi) = ev.s_range();
    // Start inside s > 0 when the profile is singular at the origin.
    let a = if cand.needs_positive_s() {
        ev.staircase_inverse(s_lo.max(0.0) + 0.25 * (s_hi - s_lo.max(0.0)))?
    } else {
        lo
    };
    let df = SampledFunction::of_profile(cand.differentiate(), ev);
    let integral = falpha_integral_extrapolated(&df, ev, a, hi, integral_refinement(ev.spec().m()))?;
    let exact = cand.evaluate(ev.staircase(hi)?)? - cand.evaluate(ev.staircase(a)?)?;
    let err = (integral - exact).abs();
    let tol = FUNDAMENTAL_THEOREM_TOLERANCE * (1.0 + exact.abs());
    Ok((err <= tol, format!("|∫Df - Δf| = {err:e}")))
}
