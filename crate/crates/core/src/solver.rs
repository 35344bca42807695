//! Second α-order linear fractal differential equations.
//!
//! Everything is solved in the staircase coordinate `s = S(x)`, where
//! `D^α` acts as `d/ds`; the set only enters through the evaluator when
//! initial data are placed or solutions are sampled.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{FalconError, Result};
use crate::etp::{Phase, Profile, Term};
use crate::falpha::{
    falpha_derivative, falpha_derivative2, falpha_integral_extrapolated, SampledFunction,
};
use crate::staircase::StaircaseEvaluator;

/// Relative width of the band in which the discriminant counts as zero.
pub const DISCRIMINANT_TOLERANCE: f64 = 1e-10;
/// Initial-value systems with `|W|` below this are rejected.
pub const SINGULAR_WRONSKIAN: f64 = 1e-12;
/// `|aβ² + bβ + c|` below this is resonance.
pub const RESONANCE_TOLERANCE: f64 = 1e-12;
/// Relative size below which residual coefficients are rounding noise.
pub const RESIDUAL_CHOP: f64 = 1e-12;
/// Largest admissible residual for a symbolic solution.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

/// Prefractal depth used to place `x0`.
const SNAP_DEPTH: usize = 24;

/// `a·D^{2α}f + b·D^α f + c·f = g`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstCoeffFDE {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub forcing: Profile,
}

impl ConstCoeffFDE {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(FalconError::InvalidArgument(format!(
                "coefficients must be finite: ({a}, {b}, {c})"
            )));
        }
        if a == 0.0 {
            return Err(FalconError::NotSecondOrder);
        }
        Ok(Self {
            a,
            b,
            c,
            forcing: Profile::zero(),
        })
    }

    pub fn with_forcing(mut self, g: Profile) -> Self {
        self.forcing = g;
        self
    }

    pub fn is_homogeneous(&self) -> bool {
        self.forcing.is_zero()
    }

    pub fn to_linear(&self) -> LinearFDE {
        LinearFDE {
            p: Profile::constant(self.a),
            q: Profile::constant(self.b),
            r: Profile::constant(self.c),
            forcing: self.forcing.clone(),
        }
    }
}

/// `P·D^{2α}f + Q·D^α f + R·f = g` with profile coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFDE {
    pub p: Profile,
    pub q: Profile,
    pub r: Profile,
    pub forcing: Profile,
}

impl LinearFDE {
    pub fn new(p: Profile, q: Profile, r: Profile) -> Result<Self> {
        if p.is_zero() {
            return Err(FalconError::NotSecondOrder);
        }
        Ok(Self {
            p,
            q,
            r,
            forcing: Profile::zero(),
        })
    }

    pub fn with_forcing(mut self, g: Profile) -> Self {
        self.forcing = g;
        self
    }

    pub fn homogeneous(&self) -> LinearFDE {
        Self {
            forcing: Profile::zero(),
            ..self.clone()
        }
    }

    /// `(Q/P, R/P, g/P)`; needs `P` to be a single invertible term.
    pub fn normalized(&self) -> Result<(Profile, Profile, Profile)> {
        let inv = self.p.inverse()?;
        Ok((
            self.q.multiply(&inv)?,
            self.r.multiply(&inv)?,
            self.forcing.multiply(&inv)?,
        ))
    }

    /// `P f'' + Q f' + R f` and the largest coefficient among the three parts.
    fn apply_scaled(&self, f: &Profile) -> Result<(Profile, f64)> {
        let d1 = f.differentiate();
        let d2 = d1.differentiate();
        let parts = [
            self.p.multiply(&d2)?,
            self.q.multiply(&d1)?,
            self.r.multiply(f)?,
        ];
        let scale = parts
            .iter()
            .map(Profile::max_abs_coef)
            .fold(0.0, f64::max);
        let sum = parts.iter().fold(Profile::zero(), |acc, p| &acc + p);
        Ok((sum, scale))
    }

    /// `P f'' + Q f' + R f` (the forcing is not subtracted).
    pub fn apply(&self, f: &Profile) -> Result<Profile> {
        Ok(self.apply_scaled(f)?.0)
    }

    /// `P f'' + Q f' + R f - g` with rounding noise chopped off.
    pub fn residual_profile(&self, f: &Profile) -> Result<Profile> {
        let (lhs, scale) = self.apply_scaled(f)?;
        let scale = scale.max(self.forcing.max_abs_coef());
        let res = &lhs - &self.forcing;
        Ok(res.chop(RESIDUAL_CHOP * scale))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RootClassification {
    RealDistinct { r1: f64, r2: f64 },
    ComplexPair { lambda: f64, nu: f64 },
    Repeated { r: f64 },
}

/// Roots of `a r² + b r + c = 0`; real roots come out as `r1 > r2`.
pub fn characteristic_roots(a: f64, b: f64, c: f64) -> Result<RootClassification> {
    let eq = ConstCoeffFDE::new(a, b, c)?;
    let (a, b, c) = (eq.a, eq.b, eq.c);
    let disc = b * b - 4.0 * a * c;
    let tau = DISCRIMINANT_TOLERANCE * (b * b).max(4.0 * (a * c).abs());
    if disc.abs() <= tau {
        return Ok(RootClassification::Repeated { r: -b / (2.0 * a) });
    }
    if disc > 0.0 {
        let sq = disc.sqrt();
        let q = -0.5 * (b + if b >= 0.0 { sq } else { -sq });
        let (x, y) = (q / a, c / q);
        return Ok(RootClassification::RealDistinct {
            r1: x.max(y),
            r2: x.min(y),
        });
    }
    Ok(RootClassification::ComplexPair {
        lambda: -b / (2.0 * a),
        nu: (-disc).sqrt() / (2.0 * a.abs()),
    })
}

/// Fundamental pair for the given roots.
pub fn homogeneous_basis(roots: &RootClassification) -> (Profile, Profile) {
    match *roots {
        RootClassification::RealDistinct { r1, r2 } => (Profile::exp(r1), Profile::exp(r2)),
        RootClassification::ComplexPair { lambda, nu } => {
            (Profile::exp_cos(lambda, nu), Profile::exp_sin(lambda, nu))
        }
        RootClassification::Repeated { r } => (
            Profile::exp(r),
            Profile::term(Term::new(1.0, 1.0, 0, r, 0.0, Phase::None)),
        ),
    }
}

/// `f1 f2' - f2 f1'` at `s0`.
pub fn wronskian(f1: &Profile, f2: &Profile, s0: f64) -> Result<f64> {
    Ok(f1.evaluate(s0)? * f2.differentiate().evaluate(s0)?
        - f2.evaluate(s0)? * f1.differentiate().evaluate(s0)?)
}

/// `f1 f2' - f2 f1'` as a profile.
pub fn wronskian_profile(f1: &Profile, f2: &Profile) -> Result<Profile> {
    let a = f1.multiply(&f2.differentiate())?;
    let b = f2.multiply(&f1.differentiate())?;
    let w = &a - &b;
    let scale = a.max_abs_coef().max(b.max_abs_coef());
    Ok(w.chop(RESIDUAL_CHOP * scale))
}

/// `f(x0) = f0`, `D^α f(x0) = Df0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialConditions {
    #[serde(default)]
    pub x0: f64,
    pub f0: f64,
    #[serde(rename = "Df0")]
    pub df0: f64,
}

impl InitialConditions {
    pub fn new(x0: f64, f0: f64, df0: f64) -> Self {
        Self { x0, f0, df0 }
    }

    /// `x0` on the prefractal and its staircase value.
    pub fn place(&self, ev: &StaircaseEvaluator) -> Result<(f64, f64)> {
        let depth = SNAP_DEPTH.min(ev.spec().depth_cap());
        let x0 = ev.snap(self.x0, depth)?;
        Ok((x0, ev.staircase(x0)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSample {
    pub x: f64,
    pub norm: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormBoundReport {
    /// `1 + |a1| + |a2|`.
    pub k: f64,
    /// Exponent constant actually used: `2k`, or `k` in strict mode.
    pub bound_constant_used: f64,
    pub x0: f64,
    pub samples: Vec<NormSample>,
    pub all_within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionBundle {
    #[serde(default)]
    pub roots: Option<RootClassification>,
    pub basis: (Profile, Profile),
    pub constants: Option<(f64, f64)>,
    pub particular: Profile,
    pub solution: Profile,
    pub wronskian_at_x0: f64,
    pub residual_max: f64,
    #[serde(default)]
    pub numeric_residual: Option<f64>,
    #[serde(default)]
    pub norm_bound_report: Option<NormBoundReport>,
}

/// Staircase samples covering the evaluator's range, avoiding `s <= 0` when
/// the profile needs it.
fn sample_s(ev: &StaircaseEvaluator, n: usize, positive: bool) -> Vec<f64> {
    let (lo, hi) = ev.s_range();
    let n = n.max(2);
    if positive {
        let lo = lo.max(0.0);
        (0..n)
            .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64)
            .filter(|&s| s > 0.0)
            .collect()
    } else {
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

fn max_abs_on(p: &Profile, ss: &[f64]) -> Result<f64> {
    let mut m: f64 = 0.0;
    for &s in ss {
        m = m.max(p.evaluate(s)?.abs());
    }
    Ok(m)
}

/// Symbolic residual `max |P f'' + Q f' + R f - g|` over `n` staircase
/// samples; exactly 0 when the residual profile vanishes.
pub fn residual(eq: &LinearFDE, candidate: &Profile, ev: &StaircaseEvaluator, n: usize) -> Result<f64> {
    let res = eq.residual_profile(candidate)?;
    if res.is_zero() {
        return Ok(0.0);
    }
    let positive = res.needs_positive_s() || eq.p.needs_positive_s() || candidate.needs_positive_s();
    max_abs_on(&res, &sample_s(ev, n, positive))
}

/// The same residual with numeric F^α-derivatives at `n` interior points of `F`.
pub fn numeric_residual(
    eq: &LinearFDE,
    candidate: &Profile,
    ev: &StaircaseEvaluator,
    n: usize,
    depth: usize,
) -> Result<f64> {
    let f = SampledFunction::of_profile(candidate.clone(), ev);
    let mut worst: f64 = 0.0;
    for s in sample_s(ev, n, true) {
        let x = ev.staircase_inverse(s)?;
        let s = ev.staircase(x)?;
        let d1 = falpha_derivative(&f, ev, x, depth)?;
        let d2 = falpha_derivative2(&f, ev, x, depth)?;
        let v = eq.p.evaluate(s)? * d2 + eq.q.evaluate(s)? * d1 + eq.r.evaluate(s)? * f.eval(x)?
            - eq.forcing.evaluate(s)?;
        worst = worst.max(v.abs());
    }
    Ok(worst)
}

/// Constants `(c1, c2)` with `c1 f1 + c2 f2 + particular` matching the data at `s0`.
fn fit_constants(
    f1: &Profile,
    f2: &Profile,
    particular: &Profile,
    s0: f64,
    f0: f64,
    df0: f64,
) -> Result<((f64, f64), f64)> {
    let (v1, v2) = (f1.evaluate(s0)?, f2.evaluate(s0)?);
    let (d1, d2) = (f1.differentiate().evaluate(s0)?, f2.differentiate().evaluate(s0)?);
    let w = v1 * d2 - v2 * d1;
    if w.abs() < SINGULAR_WRONSKIAN {
        return Err(FalconError::SingularSystem(w));
    }
    let rf = f0 - particular.evaluate(s0)?;
    let rd = df0 - particular.differentiate().evaluate(s0)?;
    Ok((((rf * d2 - rd * v2) / w, (v1 * rd - d1 * rf) / w), w))
}

/// Solves the homogeneous constant-coefficient initial-value problem.
pub fn solve_ivp(
    eq: &ConstCoeffFDE,
    ic: &InitialConditions,
    ev: &StaircaseEvaluator,
) -> Result<SolutionBundle> {
    let roots = characteristic_roots(eq.a, eq.b, eq.c)?;
    let (f1, f2) = homogeneous_basis(&roots);
    let (_, s0) = ic.place(ev)?;
    let zero = Profile::zero();
    let ((c1, c2), w) = fit_constants(&f1, &f2, &zero, s0, ic.f0, ic.df0)?;
    let solution = Profile::combine(&f1, &f2, c1, c2);
    let lin = eq.homogeneous_linear();
    let residual_max = residual(&lin, &solution, ev, 64)?;
    let numeric = numeric_residual(&lin, &solution, ev, 4, 6).ok();
    Ok(SolutionBundle {
        roots: Some(roots),
        basis: (f1, f2),
        constants: Some((c1, c2)),
        particular: zero,
        solution,
        wronskian_at_x0: w,
        residual_max,
        numeric_residual: numeric,
        norm_bound_report: None,
    })
}

impl ConstCoeffFDE {
    fn homogeneous_linear(&self) -> LinearFDE {
        let mut lin = self.to_linear();
        lin.forcing = Profile::zero();
        lin
    }
}

/// Samples `‖ψ‖ = (ψ² + (D^αψ)²)^{1/2}` on `n` points of `[x_lo, x_hi]` and
/// checks the exponential envelope around `x0`.
///
/// The envelope exponent is `2k` with `k = 1 + |a1| + |a2|`; `strict` uses
/// `k` instead.
#[allow(clippy::too_many_arguments)]
pub fn norm_bound_check(
    psi: &Profile,
    a1: f64,
    a2: f64,
    ev: &StaircaseEvaluator,
    x0: f64,
    x_range: (f64, f64),
    n: usize,
    strict: bool,
) -> Result<NormBoundReport> {
    let k = 1.0 + a1.abs() + a2.abs();
    let constant = if strict { k } else { 2.0 * k };
    let dpsi = psi.differentiate();
    let norm_at = |s: f64| -> Result<f64> { Ok(psi.evaluate(s)?.hypot(dpsi.evaluate(s)?)) };
    let depth = SNAP_DEPTH.min(ev.spec().depth_cap());
    let x0 = ev.snap(x0, depth)?;
    let s0 = ev.staircase(x0)?;
    let n0 = norm_at(s0)?;
    let n = n.max(2);
    let (lo, hi) = x_range;
    let mut samples = Vec::with_capacity(n);
    let mut all_within = true;
    for i in 0..n {
        let x = ev.snap(lo + (hi - lo) * i as f64 / (n - 1) as f64, depth)?;
        let s = ev.staircase(x)?;
        let norm = norm_at(s)?;
        let spread = constant * (s - s0).abs();
        let (lower, upper) = (n0 * (-spread).exp(), n0 * spread.exp());
        let slack = 1e-12 * upper.max(norm);
        if !(norm >= lower - slack && norm <= upper + slack) {
            all_within = false;
        }
        samples.push(NormSample {
            x,
            norm,
            lower,
            upper,
        });
    }
    Ok(NormBoundReport {
        k,
        bound_constant_used: constant,
        x0,
        samples,
        all_within,
    })
}

/// `P'' - Q' + R ≡ 0`.
pub fn is_exact(eq: &LinearFDE) -> bool {
    exactness_defect(eq).is_zero()
}

fn exactness_defect(eq: &LinearFDE) -> Profile {
    let p2 = eq.p.differentiate().differentiate();
    let q1 = eq.q.differentiate();
    let scale = p2.max_abs_coef().max(q1.max_abs_coef()).max(eq.r.max_abs_coef());
    (&(&p2 - &q1) + &eq.r).chop(RESIDUAL_CHOP * scale)
}

/// Adjoint equation `P μ'' + (2P' - Q) μ' + (P'' - Q' + R) μ = 0`.
pub fn adjoint(eq: &LinearFDE) -> LinearFDE {
    let p1 = eq.p.differentiate();
    LinearFDE {
        p: eq.p.clone(),
        q: Profile::combine(&p1, &eq.q, 2.0, -1.0),
        r: exactness_defect(eq),
        forcing: Profile::zero(),
    }
}

/// `P' ≡ Q`.
pub fn is_self_adjoint(eq: &LinearFDE) -> bool {
    (&eq.p.differentiate() - &eq.q).is_zero()
}

/// A solution known only through a numerical procedure in `s`.
#[derive(Clone)]
pub struct NumericSolution {
    f: Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>,
    pub description: String,
}

impl fmt::Debug for NumericSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NumericSolution")
            .field("description", &self.description)
            .finish()
    }
}

impl NumericSolution {
    pub fn new(description: impl Into<String>, f: impl Fn(f64) -> Result<f64> + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            description: description.into(),
        }
    }

    pub fn evaluate(&self, s: f64) -> Result<f64> {
        let v = (self.f)(s)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(FalconError::NonFinite(format!("{} at s = {s}", self.description)))
        }
    }
}

#[derive(Debug, Clone)]
pub enum SecondSolution {
    Symbolic(Profile),
    Numeric(NumericSolution),
}

fn check_nonvanishing(p: &Profile, ss: &[f64], what: &str) -> Result<()> {
    let mut prev: Option<f64> = None;
    let scale = max_abs_on(p, ss)?;
    for &s in ss {
        let v = p.evaluate(s)?;
        if v.abs() <= 1e-12 * scale || prev.is_some_and(|u| u.signum() != v.signum()) {
            return Err(FalconError::Domain(format!("{what} vanishes near s = {s}")));
        }
        prev = Some(v);
    }
    Ok(())
}

/// Second solution `f2 = f1 ∫ f1^{-2} e^{-∫p}` of the homogeneous equation,
/// scaled so its last canonical term has coefficient 1.
///
/// `s_range` is the working interval used for the precondition checks.
pub fn reduce_order(eq: &LinearFDE, f1: &Profile, s_range: (f64, f64)) -> Result<Profile> {
    let hom = eq.homogeneous();
    let ss = range_samples(s_range, 65, f1.needs_positive_s() || eq.p.needs_positive_s());
    check_reduction_input(&hom, f1, &ss)?;
    let (p, _, _) = hom.normalized()?;
    let damping = p.antiderivative()?.scale(-1.0).exp_of()?;
    let f1_sq_inv = f1.multiply(f1)?.inverse()?;
    let w = f1_sq_inv.multiply(&damping)?;
    let v = w.antiderivative()?;
    let f2 = f1.multiply(&v)?;
    let lead = f2
        .terms()
        .last()
        .map(|t| t.coef)
        .ok_or_else(|| FalconError::Domain("reduction produced the zero profile".into()))?;
    let f2 = f2.scale(1.0 / lead);
    let probe = ss[ss.len() / 2];
    let w_probe = wronskian(f1, &f2, probe)?;
    if w_probe.abs() < SINGULAR_WRONSKIAN {
        return Err(FalconError::SingularSystem(w_probe));
    }
    Ok(f2)
}

fn range_samples((lo, hi): (f64, f64), n: usize, positive: bool) -> Vec<f64> {
    let lo = if positive { lo.max(0.0) } else { lo };
    (0..n)
        .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64)
        .filter(|&s| !positive || s > 0.0)
        .collect()
}

fn check_reduction_input(hom: &LinearFDE, f1: &Profile, ss: &[f64]) -> Result<()> {
    let res = hom.residual_profile(f1)?;
    let worst = if res.is_zero() { 0.0 } else { max_abs_on(&res, ss)? };
    if worst >= RESIDUAL_TOLERANCE {
        return Err(FalconError::Precondition(format!(
            "f1 = {f1} is not a solution (residual {worst:e})"
        )));
    }
    check_nonvanishing(f1, ss, "f1")
}

/// Adaptive Simpson quadrature.
pub fn adaptive_simpson<F>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    #[allow(clippy::too_many_arguments)]
    fn step<F: Fn(f64) -> Result<f64>>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm)?, f(rm)?);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 {
            return Err(FalconError::Unconverged(format!(
                "adaptive quadrature on [{a}, {b}]"
            )));
        }
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        Ok(step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
            + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
    }
    if a == b {
        return Ok(0.0);
    }
    let (fa, fb, fm) = (f(a)?, f(b)?, f(0.5 * (a + b))?);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Reduction of order by quadrature, for coefficients outside the algebra.
/// `f2(s) = f1(s) ∫_{s0}^{s} f1(t)^{-2} exp(-∫_{s0}^{t} p) dt`.
pub fn reduce_order_numeric(eq: &LinearFDE, f1: &Profile, s0: f64, s_range: (f64, f64)) -> Result<NumericSolution> {
    let hom = eq.homogeneous();
    let ss = range_samples(s_range, 65, f1.needs_positive_s() || eq.p.needs_positive_s());
    check_reduction_input(&hom, f1, &ss)?;
    let (pp, qq, f1c) = (hom.p.clone(), hom.q.clone(), f1.clone());
    let p_at = move |t: f64| -> Result<f64> { Ok(qq.evaluate(t)? / pp.evaluate(t)?) };
    let w_at = move |t: f64| -> Result<f64> {
        let damping = adaptive_simpson(&p_at, s0, t, 1e-12)?;
        let f = f1c.evaluate(t)?;
        Ok((-damping).exp() / (f * f))
    };
    let f1c = f1.clone();
    Ok(NumericSolution::new(
        format!("second solution from f1 = {f1}"),
        move |s| Ok(f1c.evaluate(s)? * adaptive_simpson(&w_at, s0, s, 1e-10)?),
    ))
}

/// Automatic choice between [`reduce_order`] and [`reduce_order_numeric`].
pub fn reduce_order_auto(eq: &LinearFDE, f1: &Profile, s0: f64, s_range: (f64, f64)) -> Result<SecondSolution> {
    match reduce_order(eq, f1, s_range) {
        Ok(p) => Ok(SecondSolution::Symbolic(p)),
        Err(FalconError::NonElementary(_) | FalconError::UnsupportedTerm(_)) => {
            Ok(SecondSolution::Numeric(reduce_order_numeric(eq, f1, s0, s_range)?))
        }
        Err(e) => Err(e),
    }
}

/// Particular solution `Σ A0/(aβ² + bβ + c)·e^{βs}` for exponential forcing.
pub fn undetermined_coefficients(eq: &ConstCoeffFDE) -> Result<Profile> {
    let mut out = Vec::with_capacity(eq.forcing.terms().len());
    for t in eq.forcing.terms() {
        if t.power != 0.0 || t.log_exp != 0 || t.is_trig() {
            return Err(FalconError::UnsupportedTerm(format!(
                "undetermined coefficients handles A·exp(β s) forcing, got {t}"
            )));
        }
        let beta = t.rate;
        let den = eq.a * beta * beta + eq.b * beta + eq.c;
        if den.abs() < RESONANCE_TOLERANCE {
            return Err(FalconError::Resonance(den));
        }
        out.push(Term::new(t.coef / den, 0.0, 0, beta, 0.0, Phase::None));
    }
    Ok(Profile::from_terms(out))
}

#[derive(Debug, Clone)]
pub enum Particular {
    /// `raw` carries the homogeneous parts fixed by the base point;
    /// `projected` has every term sharing a key with `f1` or `f2` removed.
    Symbolic { raw: Profile, projected: Profile },
    Numeric(NumericSolution),
}

impl Particular {
    pub fn evaluate(&self, s: f64) -> Result<f64> {
        match self {
            Particular::Symbolic { raw, .. } => raw.evaluate(s),
            Particular::Numeric(n) => n.evaluate(s),
        }
    }
}

/// Refinement of the quadrature fallback in [`variation_of_parameters`].
pub const VOP_REFINEMENT: usize = 10;

/// Particular solution `-f1 ∫_{x0} f2 g/W + f2 ∫_{x0} f1 g/W`.
///
/// Closed-form when every antiderivative stays in the algebra, otherwise
/// F^α-integrals evaluated on demand.
pub fn variation_of_parameters(
    eq: &LinearFDE,
    f1: &Profile,
    f2: &Profile,
    x0: f64,
    ev: &StaircaseEvaluator,
) -> Result<Particular> {
    let w = wronskian_profile(f1, f2)?;
    let positive = w.needs_positive_s() || f1.needs_positive_s() || f2.needs_positive_s();
    let (lo, hi) = ev.s_range();
    check_nonvanishing(&w, &range_samples((lo, hi), 65, positive), "the wronskian")?;
    let s0 = ev.staircase(ev.snap(x0, SNAP_DEPTH.min(ev.spec().depth_cap()))?)?;
    if eq.forcing.is_zero() {
        return Ok(Particular::Symbolic {
            raw: Profile::zero(),
            projected: Profile::zero(),
        });
    }
    match symbolic_vop(eq, f1, f2, &w, s0) {
        Ok(p) => Ok(p),
        Err(FalconError::NonElementary(_) | FalconError::UnsupportedTerm(_)) => {
            numeric_vop(eq, f1, f2, x0, ev)
        }
        Err(e) => Err(e),
    }
}

fn symbolic_vop(eq: &LinearFDE, f1: &Profile, f2: &Profile, w: &Profile, s0: f64) -> Result<Particular> {
    let (_, _, g) = eq.normalized()?;
    let g_over_w = g.multiply(&w.inverse()?)?;
    let i1 = f2.multiply(&g_over_w)?.antiderivative()?;
    let i2 = f1.multiply(&g_over_w)?.antiderivative()?;
    let a = &Profile::constant(i1.evaluate(s0)?) - &i1;
    let b = &i2 - &Profile::constant(i2.evaluate(s0)?);
    let af1 = a.multiply(f1)?;
    let bf2 = b.multiply(f2)?;
    let scale = af1.max_abs_coef().max(bf2.max_abs_coef());
    let raw = (&af1 + &bf2).chop(RESIDUAL_CHOP * scale);
    let projected = raw.without_keys_of(&(f1 + f2));
    Ok(Particular::Symbolic { raw, projected })
}

fn numeric_vop(eq: &LinearFDE, f1: &Profile, f2: &Profile, x0: f64, ev: &StaircaseEvaluator) -> Result<Particular> {
    let (f1c, f2c) = (f1.clone(), f2.clone());
    let (d1, d2) = (f1.differentiate(), f2.differentiate());
    let (p, g) = (eq.p.clone(), eq.forcing.clone());
    let ev_c = ev.clone();
    let x0 = ev.snap(x0, SNAP_DEPTH.min(ev.spec().depth_cap()))?;
    // g / (P W) at s, the common factor of both integrands.
    let kernel = {
        let (f1c, f2c) = (f1c.clone(), f2c.clone());
        move |s: f64| -> Result<f64> {
            let w = f1c.evaluate(s)? * d2.evaluate(s)? - f2c.evaluate(s)? * d1.evaluate(s)?;
            Ok(g.evaluate(s)? / (p.evaluate(s)? * w))
        }
    };
    let kernel = Arc::new(kernel);
    let integrand = |basis: Profile| {
        let (k, ev) = (kernel.clone(), ev_c.clone());
        SampledFunction::new(ev.spec().lo(), ev.spec().hi(), move |x| {
            ev.staircase(x)
                .and_then(|s| Ok(basis.evaluate(s)? * k(s)?))
                .unwrap_or(f64::NAN)
        })
    };
    let (h1, h2) = (integrand(f2c.clone()), integrand(f1c.clone()));
    Ok(Particular::Numeric(NumericSolution::new(
        format!("variation of parameters from x0 = {x0}"),
        move |s| {
            let x = ev_c.staircase_inverse(s)?;
            let (lo, hi, sign) = if x >= x0 { (x0, x, 1.0) } else { (x, x0, -1.0) };
            let i1 = sign * falpha_integral_extrapolated(&h1, &ev_c, lo, hi, VOP_REFINEMENT)?;
            let i2 = sign * falpha_integral_extrapolated(&h2, &ev_c, lo, hi, VOP_REFINEMENT)?;
            Ok(-f1c.evaluate(s)? * i1 + f2c.evaluate(s)? * i2)
        },
    )))
}

/// Fundamental pair, particular solution and (with initial data) constants
/// for a constant-coefficient equation.
///
/// Two independently built particular solutions are required to differ by a
/// solution of the homogeneous equation.
pub fn general_solution(
    eq: &ConstCoeffFDE,
    ic: Option<&InitialConditions>,
    ev: &StaircaseEvaluator,
) -> Result<SolutionBundle> {
    let roots = characteristic_roots(eq.a, eq.b, eq.c)?;
    let (f1, f2) = homogeneous_basis(&roots);
    let lin = eq.to_linear();
    let x0 = ic.map_or(ev.origin(), |c| c.x0);
    let particular = if eq.is_homogeneous() {
        Profile::zero()
    } else {
        let (raw, projected) = symbolic_particular(&lin, &f1, &f2, x0, ev)?;
        let uc = match undetermined_coefficients(eq) {
            Ok(p) => Some(p),
            Err(FalconError::UnsupportedTerm(_) | FalconError::Resonance(_)) => None,
            Err(e) => return Err(e),
        };
        let other = match uc {
            Some(p) => p,
            None => {
                let (lo, hi) = ev.s_range();
                let x1 = ev.staircase_inverse(0.5 * (lo + hi))?;
                symbolic_particular(&lin, &f1, &f2, x1, ev)?.0
            }
        };
        check_difference(&lin, &raw, &other, ev)?;
        projected
    };
    let (constants, solution, w) = match ic {
        Some(ic) => {
            let (_, s0) = ic.place(ev)?;
            let ((c1, c2), w) = fit_constants(&f1, &f2, &particular, s0, ic.f0, ic.df0)?;
            let sol = &Profile::combine(&f1, &f2, c1, c2) + &particular;
            (Some((c1, c2)), sol, w)
        }
        None => {
            let s0 = ev.staircase(ev.origin())?;
            (None, particular.clone(), wronskian(&f1, &f2, s0)?)
        }
    };
    let residual_max = residual(&lin, &solution, ev, 64)?;
    Ok(SolutionBundle {
        roots: Some(roots),
        basis: (f1, f2),
        constants,
        particular,
        solution,
        wronskian_at_x0: w,
        residual_max,
        numeric_residual: None,
        norm_bound_report: None,
    })
}

fn symbolic_particular(
    lin: &LinearFDE,
    f1: &Profile,
    f2: &Profile,
    x0: f64,
    ev: &StaircaseEvaluator,
) -> Result<(Profile, Profile)> {
    match variation_of_parameters(lin, f1, f2, x0, ev)? {
        Particular::Symbolic { raw, projected } => Ok((raw, projected)),
        Particular::Numeric(_) => Err(FalconError::UnsupportedTerm(format!(
            "forcing {} has no closed-form particular solution; use variation_of_parameters",
            lin.forcing
        ))),
    }
}

/// Two particular solutions must differ by a homogeneous solution.
fn check_difference(lin: &LinearFDE, a: &Profile, b: &Profile, ev: &StaircaseEvaluator) -> Result<()> {
    let diff = a - b;
    let r = residual(&lin.homogeneous(), &diff, ev, 64)?;
    if r >= RESIDUAL_TOLERANCE {
        return Err(FalconError::Precondition(format!(
            "particular solutions {a} and {b} differ by a non-solution (residual {r:e})"
        )));
    }
    Ok(())
}

/// Variable-coefficient counterpart of [`general_solution`] given one
/// homogeneous solution `f1`.
pub fn general_solution_linear(
    eq: &LinearFDE,
    f1: &Profile,
    ic: Option<&InitialConditions>,
    ev: &StaircaseEvaluator,
) -> Result<SolutionBundle> {
    let f2 = reduce_order(eq, f1, ev.s_range())?;
    let x0 = ic.map_or(ev.origin(), |c| c.x0);
    let particular = if eq.forcing.is_zero() {
        Profile::zero()
    } else {
        let (raw, projected) = symbolic_particular(eq, f1, &f2, x0, ev)?;
        let (lo, hi) = ev.s_range();
        let x1 = ev.staircase_inverse(0.5 * (lo + hi))?;
        let other = symbolic_particular(eq, f1, &f2, x1, ev)?.0;
        check_difference(eq, &raw, &other, ev)?;
        projected
    };
    let (constants, solution, w) = match ic {
        Some(ic) => {
            let (_, s0) = ic.place(ev)?;
            let ((c1, c2), w) = fit_constants(f1, &f2, &particular, s0, ic.f0, ic.df0)?;
            (Some((c1, c2)), &Profile::combine(f1, &f2, c1, c2) + &particular, w)
        }
        None => {
            let (lo, hi) = ev.s_range();
            let probe = if f1.needs_positive_s() { 0.5 * (lo.max(0.0) + hi) } else { lo };
            (None, particular.clone(), wronskian(f1, &f2, probe)?)
        }
    };
    let residual_max = residual(eq, &solution, ev, 64)?;
    Ok(SolutionBundle {
        roots: None,
        basis: (f1.clone(), f2),
        constants,
        particular,
        solution,
        wronskian_at_x0: w,
        residual_max,
        numeric_residual: None,
        norm_bound_report: None,
    })
}

/// Nominal dimension of the solution space, `2α`.
pub fn solution_space_dimension(alpha: f64) -> f64 {
    2.0 * alpha
}
