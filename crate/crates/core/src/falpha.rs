//! Numerical F^α-derivative and F^α-integral.
//!
//! Stencils are built in the staircase coordinate: around `s = S(x)` the
//! neighbours are the left ends of the level sets `S = s ± h` with `h` the mass
//! of one prefractal piece, so every stencil point lies in `F` and no stencil
//! straddles a plateau.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{FalconError, Result};
use crate::etp::Profile;
use crate::staircase::StaircaseEvaluator;

/// Largest partition the integral will build.
pub const MAX_INTEGRAL_PIECES: usize = 1 << 24;

/// A real function on `[a, b]`.
#[derive(Clone)]
pub struct SampledFunction {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    a: f64,
    b: f64,
    profile: Option<Profile>,
}

impl fmt::Debug for SampledFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledFunction")
            .field("domain", &(self.a, self.b))
            .field("profile", &self.profile)
            .finish()
    }
}

impl SampledFunction {
    pub fn new(a: f64, b: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            a,
            b,
            profile: None,
        }
    }

    /// `x ↦ profile(S(x))` on the evaluator's support.
    pub fn of_profile(profile: Profile, ev: &StaircaseEvaluator) -> Self {
        let ev_c = ev.clone();
        let p = profile.clone();
        let f = move |x: f64| ev_c.staircase(x).and_then(|s| p.evaluate(s)).unwrap_or(f64::NAN);
        Self {
            f: Arc::new(f),
            a: ev.spec().lo(),
            b: ev.spec().hi(),
            profile: Some(profile),
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    /// The profile this function was built from, if any.
    pub fn profile(&self) -> Option<&Profile> {
        self.profile.as_ref()
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let tol = 1e-12 * (self.b - self.a).abs().max(1.0);
        if !(x >= self.a - tol && x <= self.b + tol) {
            return Err(FalconError::Domain(format!(
                "x = {x} outside [{}, {}]",
                self.a, self.b
            )));
        }
        let v = (self.f)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(FalconError::NonFinite(format!("f({x}) = {v}")))
        }
    }
}

/// Derivative at `nodes[0]` of the quadratic through three points.
fn lagrange_slope(t: [f64; 3], v: [f64; 3]) -> Result<f64> {
    let (d01, d02, d12) = (t[0] - t[1], t[0] - t[2], t[1] - t[2]);
    if d01 == 0.0 || d02 == 0.0 || d12 == 0.0 {
        return Err(FalconError::Stencil(format!(
            "stencil nodes collapse in s: {t:?}"
        )));
    }
    Ok(v[0] * (1.0 / d01 + 1.0 / d02) - v[1] * d02 / (d01 * d12) + v[2] * d01 / (d02 * d12))
}

/// One difference quotient at staircase step `h`, around a point already on
/// the prefractal.
fn raw_derivative<G>(g: &G, ev: &StaircaseEvaluator, x: f64, h: f64) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    let s = ev.staircase(x)?;
    let (s_lo, s_hi) = ev.s_range();
    let slack = 1e-12 * ev.normalization();
    let point = |target: f64| -> Result<(f64, f64)> {
        let y = ev.staircase_inverse(target.clamp(s_lo, s_hi))?;
        Ok((ev.staircase(y)?, g(y)?))
    };
    let offsets: [f64; 3] = if s - h >= s_lo - slack && s + h <= s_hi + slack {
        [0.0, -1.0, 1.0]
    } else if s + 2.0 * h <= s_hi + slack {
        [0.0, 1.0, 2.0]
    } else if s - 2.0 * h >= s_lo - slack {
        [0.0, -1.0, -2.0]
    } else {
        return Err(FalconError::Stencil(format!(
            "staircase range [{s_lo}, {s_hi}] is narrower than two steps of {h}"
        )));
    };
    let mut t = [s; 3];
    let mut v = [g(x)?; 3];
    for i in 1..3 {
        (t[i], v[i]) = point(s + offsets[i] * h)?;
    }
    // Nodes are only symmetric up to rounding, so the general formula is used throughout.
    lagrange_slope(t, v)
}

fn check_depth(ev: &StaircaseEvaluator, depth: usize, extra: usize) -> Result<()> {
    if depth < 4 {
        return Err(FalconError::InvalidArgument(format!(
            "stencil depth must be at least 4, got {depth}"
        )));
    }
    let cap = ev.spec().depth_cap();
    if depth + extra > cap {
        return Err(FalconError::DepthCapExceeded {
            requested: depth + extra,
            cap,
        });
    }
    Ok(())
}

fn richardson(coarse: f64, fine: f64, m: usize) -> f64 {
    let q = (m * m) as f64;
    (q * fine - coarse) / (q - 1.0)
}

/// F^α-derivative of `f` at `x`, Richardson-extrapolated over stencil depths
/// `depth` and `depth + 1`. `x` is snapped into the prefractal first.
pub fn falpha_derivative(
    f: &SampledFunction,
    ev: &StaircaseEvaluator,
    x: f64,
    depth: usize,
) -> Result<f64> {
    check_depth(ev, depth, 1)?;
    let x = ev.snap(x, depth + 1)?;
    let g = |y: f64| f.eval(y);
    let coarse = raw_derivative(&g, ev, x, ev.stencil_step(depth))?;
    let fine = raw_derivative(&g, ev, x, ev.stencil_step(depth + 1))?;
    Ok(richardson(coarse, fine, ev.spec().m()))
}

/// Second F^α-derivative: the outer stencil applied to first derivatives
/// taken four levels deeper.
pub fn falpha_derivative2(
    f: &SampledFunction,
    ev: &StaircaseEvaluator,
    x: f64,
    depth: usize,
) -> Result<f64> {
    check_depth(ev, depth, 5)?;
    let x = ev.snap(x, depth + 1)?;
    let g = |y: f64| falpha_derivative(f, ev, y, depth + 4);
    let coarse = raw_derivative(&g, ev, x, ev.stencil_step(depth))?;
    let fine = raw_derivative(&g, ev, x, ev.stencil_step(depth + 1))?;
    Ok(richardson(coarse, fine, ev.spec().m()))
}

/// Pairwise (tree) sum; deterministic regardless of thread count.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 16 {
        return values.iter().sum();
    }
    let (l, r) = values.split_at(values.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

/// F^α-integral of `f` over `[a, b]`: a Riemann–Stieltjes sum over the
/// partition into `m^refinement` pieces of equal mass, sampled at the
/// s-midpoint of each piece.
pub fn falpha_integral(
    f: &SampledFunction,
    ev: &StaircaseEvaluator,
    a: f64,
    b: f64,
    refinement: usize,
) -> Result<f64> {
    if a.is_nan() || b.is_nan() || a > b {
        return Err(FalconError::InvalidArgument(format!(
            "need a <= b, got a = {a}, b = {b}"
        )));
    }
    let pieces = (ev.spec().m() as f64).powi(refinement as i32);
    if pieces > MAX_INTEGRAL_PIECES as f64 {
        return Err(FalconError::ResourceLimit(format!(
            "refinement {refinement} needs {pieces} pieces, limit is {MAX_INTEGRAL_PIECES}"
        )));
    }
    let n = pieces as usize;
    let (s_a, s_b) = (ev.staircase(a)?, ev.staircase(b)?);
    if s_a == s_b {
        return Ok(0.0);
    }
    let ds = (s_b - s_a) / n as f64;
    let edge = |i: usize| -> Result<f64> {
        match i {
            0 => Ok(s_a),
            i if i == n => Ok(s_b),
            i => ev.staircase(ev.staircase_inverse(s_a + i as f64 * ds)?),
        }
    };
    let terms = (0..n)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let xi = ev.staircase_inverse(s_a + (i as f64 + 0.5) * ds)?;
            Ok(f.eval(xi)? * (edge(i + 1)? - edge(i)?))
        })
        .collect::<Result<Vec<f64>>>()?;
    let total = pairwise_sum(&terms);
    if !total.is_finite() {
        return Err(FalconError::NonFinite(format!("integral sum is {total}")));
    }
    Ok(total)
}

/// [`falpha_integral`] at refinements `R` and `R + 1`, Richardson-extrapolated
/// with the midpoint rule's second order.
pub fn falpha_integral_extrapolated(
    f: &SampledFunction,
    ev: &StaircaseEvaluator,
    a: f64,
    b: f64,
    refinement: usize,
) -> Result<f64> {
    let coarse = falpha_integral(f, ev, a, b, refinement)?;
    let fine = falpha_integral(f, ev, a, b, refinement + 1)?;
    Ok(richardson(coarse, fine, ev.spec().m()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::CantorSetSpec;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn triadic() -> &'static StaircaseEvaluator {
        static EV: OnceLock<StaircaseEvaluator> = OnceLock::new();
        EV.get_or_init(|| StaircaseEvaluator::exact(CantorSetSpec::middle_third()).unwrap())
    }

    fn classical() -> StaircaseEvaluator {
        StaircaseEvaluator::exact(CantorSetSpec::new(2, 0.5, 0.0, 1.0).unwrap()).unwrap()
    }

    fn prof(text: &str) -> Profile {
        text.parse().unwrap()
    }

    #[test]
    fn derivative_of_the_staircase_is_one() {
        let ev = triadic();
        let f = SampledFunction::of_profile(prof("s"), ev);
        for x in [0.0, 0.25, 1.0 / 3.0, 2.0 / 3.0, 0.75, 1.0] {
            assert_abs_diff_eq!(falpha_derivative(&f, ev, x, 10).unwrap(), 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn derivative_of_a_constant_is_zero() {
        let ev = triadic();
        let f = SampledFunction::new(0.0, 1.0, |_| 7.0);
        assert_eq!(falpha_derivative(&f, ev, 0.4, 8).unwrap(), 0.0);
    }

    #[test]
    fn chain_rule_example() {
        let ev = triadic();
        let f = SampledFunction::of_profile(prof("exp(2*s)"), ev);
        let x = ev.staircase_inverse(0.5).unwrap();
        let d = falpha_derivative(&f, ev, x, 12).unwrap();
        assert_abs_diff_eq!(d, 2.0 * 1f64.exp(), epsilon = 1e-6);
    }

    #[test]
    fn derivative_rejects_shallow_stencils() {
        let ev = triadic();
        let f = SampledFunction::new(0.0, 1.0, |x| x);
        assert!(matches!(
            falpha_derivative(&f, ev, 0.5, 3),
            Err(FalconError::InvalidArgument(_))
        ));
        assert!(matches!(
            falpha_derivative(&f, ev, 0.5, 40),
            Err(FalconError::DepthCapExceeded { .. })
        ));
    }

    #[test]
    fn second_derivative_examples() {
        let ev = triadic();
        let sq = SampledFunction::of_profile(prof("s^2"), ev);
        for x in [0.0, 0.3, 2.0 / 3.0, 1.0] {
            assert_abs_diff_eq!(falpha_derivative2(&sq, ev, x, 8).unwrap(), 2.0, epsilon = 1e-5);
        }
        let lin = SampledFunction::of_profile(prof("3*s - 1"), ev);
        assert_abs_diff_eq!(falpha_derivative2(&lin, ev, 0.7, 8).unwrap(), 0.0, epsilon = 1e-6);
        let decay = SampledFunction::of_profile(prof("exp(-2*s)"), ev);
        assert_abs_diff_eq!(falpha_derivative2(&decay, ev, 0.0, 8).unwrap(), 4.0, epsilon = 1e-4);
    }

    #[test]
    fn integral_examples() {
        let ev = triadic();
        let one = SampledFunction::new(0.0, 1.0, |_| 1.0);
        assert_abs_diff_eq!(
            falpha_integral(&one, ev, 0.0, 1.0, 10).unwrap(),
            ev.normalization(),
            epsilon = 1e-10
        );

        // Fundamental theorem with g = exp(S): D g = exp(S).
        let dg = SampledFunction::of_profile(prof("exp(s)"), ev);
        let i = falpha_integral(&dg, ev, 0.0, 1.0, 12).unwrap();
        assert_abs_diff_eq!(i, ev.normalization().exp() - 1.0, epsilon = 1e-6);

        let ev1 = classical();
        let x = SampledFunction::new(0.0, 1.0, |x| x);
        assert_abs_diff_eq!(falpha_integral(&x, &ev1, 0.0, 1.0, 10).unwrap(), 0.5, epsilon = 1e-8);
    }

    #[test]
    fn integral_flags_non_finite_samples() {
        let ev = triadic();
        let f = SampledFunction::new(0.0, 1.0, |x| 1.0 / (x - x));
        assert!(matches!(
            falpha_integral(&f, ev, 0.0, 1.0, 4),
            Err(FalconError::NonFinite(_))
        ));
        assert!(matches!(
            falpha_integral(&f, ev, 0.0, 1.0, 40),
            Err(FalconError::ResourceLimit(_))
        ));
    }

    #[test]
    fn integral_over_a_gap_is_zero() {
        let ev = triadic();
        let f = SampledFunction::new(0.0, 1.0, |x| 1.0 + x);
        assert_eq!(falpha_integral(&f, ev, 0.4, 0.6, 6).unwrap(), 0.0);
    }

    #[test]
    fn extrapolated_integral_is_sharper() {
        let ev = triadic();
        let f = SampledFunction::of_profile(prof("exp(s)"), ev);
        let exact = ev.normalization().exp() - 1.0;
        let plain = falpha_integral(&f, ev, 0.0, 1.0, 6).unwrap();
        let rich = falpha_integral_extrapolated(&f, ev, 0.0, 1.0, 6).unwrap();
        assert!((rich - exact).abs() < 0.01 * (plain - exact).abs());
    }

    #[test]
    fn classical_limit_matches_ordinary_calculus() {
        let ev = classical();
        let f = SampledFunction::new(0.0, 1.0, |x: f64| x.sin() + x * x);
        for x in [0.1, 0.5, 0.9] {
            let d = falpha_derivative(&f, &ev, x, 10).unwrap();
            assert_abs_diff_eq!(d, x.cos() + 2.0 * x, epsilon = 1e-6);
        }
        let i = falpha_integral(&f, &ev, 0.0, 1.0, 12).unwrap();
        assert_abs_diff_eq!(i, 1.0 - 1f64.cos() + 1.0 / 3.0, epsilon = 1e-6);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let v: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 4950.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn derivative_is_linear(c1 in -3.0f64..3.0, c2 in -3.0f64..3.0, t in 0.05f64..0.95) {
            let ev = triadic();
            let x = ev.staircase_inverse(t * ev.normalization()).unwrap();
            let f = SampledFunction::of_profile(prof("exp(s)"), ev);
            let g = SampledFunction::of_profile(prof("cos(2*s)"), ev);
            let (fc, gc) = (f.clone(), g.clone());
            let h = SampledFunction::new(0.0, 1.0, move |x| c1 * fc.eval(x).unwrap() + c2 * gc.eval(x).unwrap());
            let lhs = falpha_derivative(&h, ev, x, 10).unwrap();
            let rhs = c1 * falpha_derivative(&f, ev, x, 10).unwrap() + c2 * falpha_derivative(&g, ev, x, 10).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-8 * (1.0 + rhs.abs()));
        }

        #[test]
        fn integral_is_linear(c1 in -3.0f64..3.0, c2 in -3.0f64..3.0) {
            let ev = triadic();
            let f = SampledFunction::new(0.0, 1.0, |x: f64| x.exp());
            let g = SampledFunction::new(0.0, 1.0, |x: f64| x * x);
            let (fc, gc) = (f.clone(), g.clone());
            let h = SampledFunction::new(0.0, 1.0, move |x| c1 * fc.eval(x).unwrap() + c2 * gc.eval(x).unwrap());
            let lhs = falpha_integral(&h, ev, 0.0, 1.0, 8).unwrap();
            let rhs = c1 * falpha_integral(&f, ev, 0.0, 1.0, 8).unwrap() + c2 * falpha_integral(&g, ev, 0.0, 1.0, 8).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-8 * (1.0 + rhs.abs()));
        }
    }
}
