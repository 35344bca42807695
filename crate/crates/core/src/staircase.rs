//! Coarse-grained mass, mass function, γ-dimension and the integral staircase.
//!
//! The coarse-grained mass is an infimum over all subdivisions of mesh at most
//! δ, which is not computable. We minimise over two families instead:
//!
//! * the uniform subdivision of mesh δ;
//! * the gap-aligned subdivision whose breakpoints are the endpoints of the
//!   coarsest prefractal level with piece length ≤ δ. Gap bodies are cut off
//!   from their (flagged) endpoints by shims of width ε; the family's
//!   infimum is its ε → 0 limit, where shims and gap bodies contribute
//!   nothing and only the prefractal pieces remain.
//!
//! The result is an upper bound on the true coarse-grained mass. For the sets
//! handled here the gap-aligned family attains the self-similar value.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::cantor::CantorSetSpec;
use crate::error::{FalconError, Result};

/// Uniform subdivisions are skipped once the prefractal has more pieces than this.
const UNIFORM_NODE_LIMIT: usize = 1 << 16;

fn check_mass_args(a: f64, b: f64, alpha: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(FalconError::InvalidArgument(format!(
            "need a < b, got a = {a}, b = {b}"
        )));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(FalconError::InvalidArgument(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    Ok(())
}

/// Coarsest level whose pieces are no longer than `delta`.
fn level_for_mesh(spec: &CantorSetSpec, delta: f64) -> Result<usize> {
    let mut len = spec.length();
    let mut k = 0;
    while len > delta * (1.0 + 1e-12) {
        k += 1;
        len *= spec.ratio();
        if k > spec.depth_cap() {
            return Err(FalconError::DepthCapExceeded {
                requested: k,
                cap: spec.depth_cap(),
            });
        }
    }
    Ok(k)
}

/// Σ length^α over the level-`k` pieces clipped to `[a, b]` that meet the set.
fn gap_aligned_sum(spec: &CantorSetSpec, k: usize, a: f64, b: f64, alpha: f64) -> f64 {
    let piece = spec.ratio().powi(k as i32) * spec.length();
    let step = spec.child_step();
    let m = spec.m();

    fn walk(
        spec: &CantorSetSpec,
        lo: f64,
        len: f64,
        level: usize,
        ctx: (usize, f64, f64, f64, f64, f64, usize),
    ) -> f64 {
        let (k, a, b, alpha, piece, step, m) = ctx;
        let hi = lo + len;
        if hi < a || lo > b {
            return 0.0;
        }
        if a <= lo && hi <= b {
            let count = (m as f64).powi((k - level) as i32);
            return count * piece.powf(alpha);
        }
        if level == k {
            let (cl, ch) = (lo.max(a), hi.min(b));
            if ch > cl && spec.meets(cl, ch) {
                return (ch - cl).powf(alpha);
            }
            return 0.0;
        }
        (0..m)
            .map(|j| {
                walk(
                    spec,
                    lo + j as f64 * step * len,
                    len * spec.ratio(),
                    level + 1,
                    ctx,
                )
            })
            .sum()
    }

    walk(
        spec,
        spec.lo(),
        spec.length(),
        0,
        (k, a, b, alpha, piece, step, m),
    )
}

/// Σ length^α over the pieces of the uniform δ-subdivision of `[a, b]` that
/// meet the set, or `None` when the level-`k` cover is too large to walk.
fn uniform_sum(spec: &CantorSetSpec, k: usize, a: f64, b: f64, alpha: f64, delta: f64) -> Option<f64> {
    if (spec.m() as f64).powi(k as i32) > UNIFORM_NODE_LIMIT as f64 {
        return None;
    }
    let n_pieces = (((b - a) / delta) - 1e-9).ceil().max(1.0) as usize;
    let piece_at = |j: usize| (a + j as f64 * delta, (a + (j + 1) as f64 * delta).min(b));
    let nodes = spec.prefractal(k).ok()?;
    let mut flagged: Vec<usize> = Vec::new();
    for node in nodes.intervals() {
        let (cl, ch) = (node.lo.max(a), node.hi.min(b));
        if cl > ch {
            continue;
        }
        let j_lo = (((cl - a) / delta).floor() as usize).saturating_sub(1);
        let j_hi = (((ch - a) / delta).floor() as usize).min(n_pieces - 1);
        for j in j_lo..=j_hi {
            let (pl, ph) = piece_at(j);
            let (il, ih) = (pl.max(cl), ph.min(ch));
            if il <= ih && spec.meets(il, ih) {
                flagged.push(j);
            }
        }
    }
    flagged.sort_unstable();
    flagged.dedup();
    Some(
        flagged
            .into_iter()
            .map(|j| {
                let (pl, ph) = piece_at(j);
                (ph - pl).powf(alpha)
            })
            .sum(),
    )
}

/// Coarse-grained mass of `F ∩ [a, b]` at mesh `delta`, minimised over the
/// uniform and gap-aligned subdivision families.
pub fn coarse_mass(spec: &CantorSetSpec, a: f64, b: f64, alpha: f64, delta: f64) -> Result<f64> {
    check_mass_args(a, b, alpha)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(FalconError::InvalidArgument(format!(
            "mesh size must be positive, got {delta}"
        )));
    }
    let k = level_for_mesh(spec, delta)?;
    let aligned = gap_aligned_sum(spec, k, a, b, alpha);
    let best = match uniform_sum(spec, k, a, b, alpha, delta) {
        Some(u) => aligned.min(u),
        None => aligned,
    };
    Ok(gamma(alpha + 1.0) * best)
}

/// How the coarse-mass sequence behaved as δ → 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MassStatus {
    /// Settled on a finite positive limit.
    Converged,
    /// Decays to zero (α above the dimension).
    Zero,
    /// Grows without bound (α below the dimension).
    Infinite,
    /// No clean trend; the last value is reported.
    Unconverged,
}

/// Bisection bracket for the γ-dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl DimensionEstimate {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassReport {
    pub alpha_used: f64,
    pub delta_sequence: Vec<f64>,
    pub gamma_delta_values: Vec<f64>,
    /// `+inf` when the sequence diverges.
    #[serde(with = "extended_float")]
    pub gamma_limit: f64,
    pub status: MassStatus,
    #[serde(default)]
    pub dim_estimate: Option<DimensionEstimate>,
}

/// JSON has no infinity; write it as the string `"inf"`.
mod extended_float {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            Repr::Text(if *v > 0.0 { "inf" } else { "-inf" }.into()).serialize(s)
        } else {
            Repr::Num(*v).serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(serde::de::Error::custom(format!("bad float {other:?}"))),
            },
        }
    }
}

/// Tunables for [`mass_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassOptions {
    /// Deepest prefractal level used for δ = L·r^j.
    pub max_depth: usize,
    /// Values (or extrapolated limits) below this are classified as zero.
    pub zero_threshold: f64,
    /// Growth over the last three meshes that is classified as divergence.
    pub growth_factor: f64,
}

impl Default for MassOptions {
    fn default() -> Self {
        Self {
            max_depth: 14,
            zero_threshold: 1e-8,
            growth_factor: 10.0,
        }
    }
}

/// Mass function γ^α(F, a, b) with default options.
pub fn mass(spec: &CantorSetSpec, a: f64, b: f64, alpha: f64) -> Result<MassReport> {
    mass_with(spec, a, b, alpha, MassOptions::default())
}

/// Mass function over the geometric mesh sequence δ_j = L·r^j, j = 1..=max_depth,
/// extrapolated with Aitken's Δ² on the last three values.
pub fn mass_with(
    spec: &CantorSetSpec,
    a: f64,
    b: f64,
    alpha: f64,
    opts: MassOptions,
) -> Result<MassReport> {
    check_mass_args(a, b, alpha)?;
    let depth = opts.max_depth.min(spec.depth_cap());
    if depth < 3 {
        return Err(FalconError::InvalidArgument(format!(
            "mass extrapolation needs at least three meshes, depth limit is {depth}"
        )));
    }
    let deltas: Vec<f64> = (1..=depth)
        .map(|j| spec.length() * spec.ratio().powi(j as i32))
        .collect();
    let values = deltas
        .par_iter()
        .map(|&d| coarse_mass(spec, a, b, alpha, d))
        .collect::<Result<Vec<f64>>>()?;
    let (gamma_limit, status) = classify(&values, opts);
    Ok(MassReport {
        alpha_used: alpha,
        delta_sequence: deltas,
        gamma_delta_values: values,
        gamma_limit,
        status,
        dim_estimate: None,
    })
}

fn classify(values: &[f64], opts: MassOptions) -> (f64, MassStatus) {
    let n = values.len();
    let (x0, x1, x2) = (values[n - 3], values[n - 2], values[n - 1]);
    if x2 > opts.growth_factor * x0 {
        return (f64::INFINITY, MassStatus::Infinite);
    }
    if x2 < opts.zero_threshold {
        return (0.0, MassStatus::Zero);
    }
    let (d1, d2) = (x1 - x0, x2 - x1);
    if d2.abs() <= 1e-12 * x2 {
        return (x2, MassStatus::Converged);
    }
    if d1 == 0.0 {
        return (x2, MassStatus::Unconverged);
    }
    let q = d2 / d1;
    if q >= 1.0 {
        // Increments that do not shrink: geometric growth or collapse.
        return if d2 > 0.0 {
            (f64::INFINITY, MassStatus::Infinite)
        } else {
            (0.0, MassStatus::Zero)
        };
    }
    if q <= 0.0 {
        return (x2, MassStatus::Unconverged);
    }
    let limit = x2 + d2 * q / (1.0 - q);
    if limit < opts.zero_threshold {
        (0.0, MassStatus::Zero)
    } else {
        (limit, MassStatus::Converged)
    }
}

/// γ-dimension of `F ∩ [a, b]` by bisection on the 0/∞ crossover of the mass.
pub fn gamma_dimension(spec: &CantorSetSpec, a: f64, b: f64) -> Result<DimensionEstimate> {
    gamma_dimension_with(spec, a, b, 1e-6, MassOptions::default())
}

pub fn gamma_dimension_with(
    spec: &CantorSetSpec,
    a: f64,
    b: f64,
    bracket: f64,
    opts: MassOptions,
) -> Result<DimensionEstimate> {
    if a.is_nan() || b.is_nan() || a >= b {
        return Err(FalconError::InvalidArgument(format!(
            "need a < b, got a = {a}, b = {b}"
        )));
    }
    if !spec.meets(a, b) {
        return Err(FalconError::Domain(format!(
            "[{a}, {b}] does not meet the set"
        )));
    }
    let top = mass_with(spec, a, b, 1.0, opts)?;
    if top.status != MassStatus::Zero {
        return Ok(DimensionEstimate {
            estimate: 1.0,
            lower: 1.0,
            upper: 1.0,
        });
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > bracket {
        let mid = 0.5 * (lo + hi);
        let report = mass_with(spec, a, b, mid, opts)?;
        match report.status {
            MassStatus::Zero => hi = mid,
            MassStatus::Infinite => lo = mid,
            // A finite, positive mass pins the dimension.
            MassStatus::Converged => {
                return Ok(DimensionEstimate {
                    estimate: mid,
                    lower: mid,
                    upper: mid,
                })
            }
            MassStatus::Unconverged => {
                let v = &report.gamma_delta_values;
                if v[v.len() - 1] > v[v.len() - 2] {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
    }
    Ok(DimensionEstimate {
        estimate: 0.5 * (lo + hi),
        lower: lo,
        upper: hi,
    })
}

/// Mass report at the estimated dimension, with the estimate attached.
pub fn dimension_report(spec: &CantorSetSpec, a: f64, b: f64) -> Result<MassReport> {
    let dim = gamma_dimension(spec, a, b)?;
    let mut report = mass(spec, a, b, dim.estimate)?;
    report.dim_estimate = Some(dim);
    Ok(report)
}

/// How the staircase is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StaircaseMode {
    /// Mass-normalised Cantor function by digit expansion.
    Exact,
    /// The `S ∝ x^α` proxy.
    Power,
}

impl std::str::FromStr for StaircaseMode {
    type Err = FalconError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "power" | "power-law" => Ok(Self::Power),
            other => Err(FalconError::InvalidArgument(format!(
                "unknown staircase mode {other:?} (expected exact|power)"
            ))),
        }
    }
}

/// Evaluates the integral staircase `S(x) = γ^α(F, a0, x)` (negated below `a0`)
/// and its left inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct StaircaseEvaluator {
    spec: CantorSetSpec,
    mode: StaircaseMode,
    alpha: f64,
    origin: f64,
    normalization: f64,
    /// Normalised staircase value at the origin.
    origin_level: f64,
}

impl StaircaseEvaluator {
    pub fn new(spec: CantorSetSpec, mode: StaircaseMode) -> Result<Self> {
        match mode {
            StaircaseMode::Exact => Self::exact(spec),
            StaircaseMode::Power => Ok(Self::power_law(spec)),
        }
    }

    /// Exact evaluator; the normalisation `γ^α(F, lo, hi)` comes from [`mass`].
    pub fn exact(spec: CantorSetSpec) -> Result<Self> {
        let alpha = spec.alpha();
        let report = mass(&spec, spec.lo(), spec.hi(), alpha)?;
        if report.status != MassStatus::Converged {
            return Err(FalconError::Unconverged(format!(
                "normalisation mass at alpha = {alpha} ended as {:?}",
                report.status
            )));
        }
        Ok(Self {
            origin: spec.lo(),
            spec,
            mode: StaircaseMode::Exact,
            alpha,
            normalization: report.gamma_limit,
            origin_level: 0.0,
        })
    }

    /// Power-law proxy `S(x) = (x - a0)^α` with `N = (hi - lo)^α`.
    pub fn power_law(spec: CantorSetSpec) -> Self {
        let alpha = spec.alpha();
        Self {
            origin: spec.lo(),
            normalization: spec.length().powf(alpha),
            spec,
            mode: StaircaseMode::Power,
            alpha,
            origin_level: 0.0,
        }
    }

    /// Overrides α; only meaningful for the power-law proxy.
    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        if self.mode != StaircaseMode::Power {
            return Err(FalconError::InvalidArgument(
                "alpha is fixed by the set in exact mode".into(),
            ));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(FalconError::InvalidArgument(format!(
                "alpha must lie in (0, 1], got {alpha}"
            )));
        }
        self.alpha = alpha;
        self.normalization = self.spec.length().powf(alpha);
        Ok(self)
    }

    /// Moves the origin `a0` where `S` vanishes.
    pub fn with_origin(mut self, a0: f64) -> Result<Self> {
        self.check_domain(a0)?;
        self.origin = a0;
        self.origin_level = match self.mode {
            StaircaseMode::Exact => self.cantor_level(a0),
            StaircaseMode::Power => 0.0,
        };
        Ok(self)
    }

    pub fn spec(&self) -> &CantorSetSpec {
        &self.spec
    }

    pub fn mode(&self) -> StaircaseMode {
        self.mode
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    /// `N = S(hi) - S(lo)`.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// `(S(lo), S(hi))`.
    pub fn s_range(&self) -> (f64, f64) {
        match self.mode {
            StaircaseMode::Exact => (
                -self.normalization * self.origin_level,
                self.normalization * (1.0 - self.origin_level),
            ),
            StaircaseMode::Power => (
                -(self.origin - self.spec.lo()).powf(self.alpha),
                (self.spec.hi() - self.origin).powf(self.alpha),
            ),
        }
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        let tol = 1e-12 * self.spec.length();
        if !(x >= self.spec.lo() - tol && x <= self.spec.hi() + tol) {
            return Err(FalconError::Domain(format!(
                "x = {x} outside [{}, {}]",
                self.spec.lo(),
                self.spec.hi()
            )));
        }
        Ok(())
    }

    /// Cantor function of the set normalised to `[0, 1]`.
    ///
    /// Digits are read off in absolute coordinates so rounding does not get
    /// amplified by the rescaling; below float resolution the remaining
    /// fraction is interpolated linearly.
    fn cantor_level(&self, x: f64) -> f64 {
        let spec = &self.spec;
        let m = spec.m() as f64;
        let step = spec.child_step();
        let x = x.clamp(spec.lo(), spec.hi());
        let resolution = 2.0 * f64::EPSILON * spec.lo().abs().max(spec.hi().abs());
        let mut lo = spec.lo();
        let mut len = spec.length();
        let mut value = 0.0;
        let mut weight = 1.0;
        for _ in 0..spec.depth_cap() {
            if x <= lo {
                return value;
            }
            if x >= lo + len {
                return value + weight;
            }
            if len <= resolution {
                break;
            }
            let child_len = len * spec.ratio();
            let j = (((x - lo) / (step * len)).floor() as usize).min(spec.m() - 1);
            let c_lo = lo + j as f64 * step * len;
            if x < c_lo {
                // Rounding put x just left of child j: it sits on child j - 1's right edge.
                return value + weight * j as f64 / m;
            }
            if x <= c_lo + child_len {
                value += weight * j as f64 / m;
                weight /= m;
                lo = c_lo;
                len = child_len;
            } else {
                return value + weight * (j + 1) as f64 / m;
            }
        }
        value + weight * ((x - lo) / len).clamp(0.0, 1.0)
    }

    /// Smallest normalised position with Cantor level `t`.
    fn cantor_inverse(&self, t: f64) -> f64 {
        let spec = &self.spec;
        let m = spec.m() as f64;
        let step = spec.child_step();
        let r = spec.ratio();
        let mut t = t.clamp(0.0, 1.0);
        let mut pos = 0.0;
        let mut scale = 1.0;
        for _ in 0..spec.depth_cap() {
            if t <= 0.0 {
                return pos;
            }
            if t >= 1.0 {
                return pos + scale;
            }
            let y = t * m;
            let j = (y.floor() as usize).min(spec.m() - 1);
            let frac = y - j as f64;
            if frac == 0.0 {
                // Level reached exactly at the right end of child j - 1.
                return pos + scale * ((j - 1) as f64 * step + r);
            }
            pos += scale * j as f64 * step;
            scale *= r;
            t = frac;
        }
        pos + scale * t
    }

    /// `S(x)`.
    pub fn staircase(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(match self.mode {
            StaircaseMode::Exact => {
                self.normalization * (self.cantor_level(x) - self.origin_level)
            }
            StaircaseMode::Power => {
                let d = x - self.origin;
                d.signum() * d.abs().powf(self.alpha)
            }
        })
    }

    /// `S(x) / N`.
    pub fn normalized(&self, x: f64) -> Result<f64> {
        Ok(self.staircase(x)? / self.normalization)
    }

    /// Smallest `x` with `S(x) = s` (the left end of a flat level set).
    pub fn staircase_inverse(&self, s: f64) -> Result<f64> {
        let (s_lo, s_hi) = self.s_range();
        let tol = 1e-12 * self.normalization.max(1.0);
        if !(s >= s_lo - tol && s <= s_hi + tol) {
            return Err(FalconError::Domain(format!(
                "s = {s} outside the staircase range [{s_lo}, {s_hi}]"
            )));
        }
        let s = s.clamp(s_lo, s_hi);
        let x = match self.mode {
            StaircaseMode::Exact => {
                let t = s / self.normalization + self.origin_level;
                self.spec.lo() + self.spec.length() * self.cantor_inverse(t)
            }
            StaircaseMode::Power => self.origin + s.signum() * s.abs().powf(1.0 / self.alpha),
        };
        Ok(x.clamp(self.spec.lo(), self.spec.hi()))
    }

    /// Snaps `x` into the depth-`depth` prefractal (identity for the power-law proxy).
    pub fn snap(&self, x: f64, depth: usize) -> Result<f64> {
        self.check_domain(x)?;
        let x = x.clamp(self.spec.lo(), self.spec.hi());
        match self.mode {
            StaircaseMode::Exact => self.spec.nearest_point_in_prefractal(depth, x),
            StaircaseMode::Power => Ok(x),
        }
    }

    /// Mass of one depth-`depth` piece: the staircase step used by derivative stencils.
    pub fn stencil_step(&self, depth: usize) -> f64 {
        self.normalization / (self.spec.m() as f64).powi(depth as i32)
    }
}
