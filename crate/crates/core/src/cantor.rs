//! Symmetric self-similar Cantor-like subsets of a closed base interval.
//!
//! A set is described by `m` equal children per level, each scaled by `r`,
//! spread so that the first child starts at the left end of its parent and the
//! last child ends at the right end, with equal gaps in between. The
//! middle-third Cantor set is `m = 2`, `r = 1/3`. When `m * r == 1` the
//! children abut and the set is the whole interval (dimension 1).
//!
//! Intervals are closed everywhere: gap endpoints belong to the set.

use serde::{Deserialize, Serialize};

use crate::error::{FalconError, Result};

/// Default maximum prefractal depth. `r^40` is below double resolution for `r <= 1/2`.
pub const DEFAULT_DEPTH_CAP: usize = 40;

/// Largest prefractal that [`CantorSetSpec::prefractal`] will materialize.
pub const MAX_MATERIALIZED_INTERVALS: usize = 1 << 24;

/// A closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(FalconError::InvalidArgument(format!(
                "interval [{lo}, {hi}] is not a finite ordered pair"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

/// A symmetric, equal-ratio Cantor-like set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CantorSetJson", into = "CantorSetJson")]
pub struct CantorSetSpec {
    m: usize,
    r: f64,
    alpha: f64,
    lo: f64,
    hi: f64,
    depth_cap: usize,
}

impl CantorSetSpec {
    pub fn new(m: usize, r: f64, lo: f64, hi: f64) -> Result<Self> {
        if m < 2 {
            return Err(FalconError::InvalidArgument(format!(
                "need at least two children per level, got m = {m}"
            )));
        }
        if !(r.is_finite() && r > 0.0 && r < 1.0) {
            return Err(FalconError::InvalidArgument(format!(
                "contraction ratio must lie in (0, 1), got {r}"
            )));
        }
        if m as f64 * r > 1.0 + 1e-12 {
            return Err(FalconError::InvalidArgument(format!(
                "children overlap: m * r = {} > 1",
                m as f64 * r
            )));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(FalconError::InvalidArgument(format!(
                "base interval [{lo}, {hi}] is empty or not finite"
            )));
        }
        let alpha = ((m as f64).ln() / (1.0 / r).ln()).min(1.0);
        Ok(Self {
            m,
            r,
            alpha,
            lo,
            hi,
            depth_cap: DEFAULT_DEPTH_CAP,
        })
    }

    /// The triadic Cantor set on `[0, 1]`.
    pub fn middle_third() -> Self {
        Self::new(2, 1.0 / 3.0, 0.0, 1.0).expect("middle-third parameters are valid")
    }

    pub fn with_depth_cap(mut self, cap: usize) -> Self {
        self.depth_cap = cap.max(1);
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn ratio(&self) -> f64 {
        self.r
    }

    /// Similarity dimension `ln m / ln(1/r)`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn base(&self) -> Interval {
        Interval {
            lo: self.lo,
            hi: self.hi,
        }
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn depth_cap(&self) -> usize {
        self.depth_cap
    }

    /// Relative offset between the left endpoints of neighbouring children.
    pub(crate) fn child_step(&self) -> f64 {
        (1.0 - self.r) / (self.m as f64 - 1.0)
    }

    fn check_depth(&self, n: usize) -> Result<()> {
        if n > self.depth_cap {
            return Err(FalconError::DepthCapExceeded {
                requested: n,
                cap: self.depth_cap,
            });
        }
        Ok(())
    }

    /// Depth-`n` image of the base interval under the `m` similarity maps.
    pub fn prefractal(&self, n: usize) -> Result<IntervalList> {
        self.check_depth(n)?;
        let count = (self.m as f64).powi(n as i32);
        if count > MAX_MATERIALIZED_INTERVALS as f64 {
            return Err(FalconError::ResourceLimit(format!(
                "depth {n} prefractal has {count} intervals (limit {MAX_MATERIALIZED_INTERVALS})"
            )));
        }
        let step = self.child_step();
        let mut starts = vec![self.lo];
        let mut len = self.length();
        for _ in 0..n {
            let mut next = Vec::with_capacity(starts.len() * self.m);
            for &l in &starts {
                for j in 0..self.m {
                    next.push(l + j as f64 * step * len);
                }
            }
            starts = next;
            len *= self.r;
        }
        let intervals = starts
            .into_iter()
            .map(|l| Interval { lo: l, hi: l + len })
            .collect();
        Ok(IntervalList {
            depth: n,
            intervals,
        })
    }

    /// Whether the closed interval `[a, b]` meets the limit set itself.
    ///
    /// Every endpoint of every prefractal interval lies in the set, so the
    /// descent stops as soon as `[a, b]` covers one. Only an interval strictly
    /// inside a prefractal piece forces a deeper look; at the depth cap such an
    /// interval is reported as meeting the set.
    pub fn meets(&self, a: f64, b: f64) -> bool {
        if a > b {
            return false;
        }
        self.meets_rec(self.lo, self.length(), a, b, 0)
    }

    fn meets_rec(&self, lo: f64, len: f64, a: f64, b: f64, level: usize) -> bool {
        let hi = lo + len;
        // Node endpoints carry a few ulps of accumulated rounding.
        let tol = 4.0 * f64::EPSILON * self.lo.abs().max(self.hi.abs());
        if b < lo - tol || a > hi + tol {
            return false;
        }
        if a <= lo || b >= hi || len <= tol {
            return true;
        }
        if level >= self.depth_cap {
            return true;
        }
        let step = self.child_step();
        let child_len = len * self.r;
        (0..self.m).any(|j| self.meets_rec(lo + j as f64 * step * len, child_len, a, b, level + 1))
    }

    /// A point of the depth-`n` prefractal closest to `x`; ties go to the left.
    pub fn nearest_point_in_prefractal(&self, n: usize, x: f64) -> Result<f64> {
        self.check_depth(n)?;
        if !(self.lo..=self.hi).contains(&x) {
            return Err(FalconError::InvalidArgument(format!(
                "x = {x} lies outside [{}, {}]",
                self.lo, self.hi
            )));
        }
        let step = self.child_step();
        let mut lo = self.lo;
        let mut len = self.length();
        'levels: for _ in 0..n {
            let child_len = len * self.r;
            let mut prev_hi = lo;
            for j in 0..self.m {
                let c_lo = lo + j as f64 * step * len;
                let c_hi = c_lo + child_len;
                if x < c_lo {
                    let (dl, dr) = (x - prev_hi, c_lo - x);
                    let tie = 1e-12 * len;
                    return Ok(if dl <= dr + tie { prev_hi } else { c_lo });
                }
                if x <= c_hi {
                    lo = c_lo;
                    len = child_len;
                    continue 'levels;
                }
                prev_hi = c_hi;
            }
            // Rounding can push x a hair past the last child's right end.
            return Ok(prev_hi);
        }
        Ok(x)
    }
}

impl Default for CantorSetSpec {
    fn default() -> Self {
        Self::middle_third()
    }
}

/// Ordered, pairwise disjoint (up to shared endpoints when `m * r = 1`)
/// closed intervals of one prefractal level.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalList {
    depth: usize,
    intervals: Vec<Interval>,
}

impl IntervalList {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(Interval::len).sum()
    }

    /// Flag function of the prefractal: 1 iff the closed interval `i` meets it.
    ///
    /// Deeper prefractals are subsets, so a 0 at depth `n` stays 0 at every
    /// deeper level. A 1 does not persist: `i` may only touch material that a
    /// later level removes.
    pub fn flag(&self, i: Interval) -> u8 {
        let k = self.intervals.partition_point(|iv| iv.hi < i.lo);
        match self.intervals.get(k) {
            Some(iv) if iv.lo <= i.hi => 1,
            _ => 0,
        }
    }

    /// Index of the interval containing `x`, if any.
    pub fn locate(&self, x: f64) -> Option<usize> {
        let k = self.intervals.partition_point(|iv| iv.hi < x);
        self.intervals
            .get(k)
            .filter(|iv| iv.lo <= x)
            .map(|_| k)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RatioRepr {
    Number(f64),
    Text(String),
}

#[derive(Serialize, Deserialize)]
struct CantorSetJson {
    m: usize,
    r: RatioRepr,
    #[serde(default)]
    lo: f64,
    #[serde(default = "one")]
    hi: f64,
}

fn one() -> f64 {
    1.0
}

/// Parses `"p/q"` or a decimal literal.
pub fn parse_ratio(text: &str) -> Result<f64> {
    let bad = || FalconError::InvalidArgument(format!("cannot parse ratio {text:?}"));
    match text.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0.0 {
                return Err(bad());
            }
            Ok(p / q)
        }
        None => text.trim().parse().map_err(|_| bad()),
    }
}

impl TryFrom<CantorSetJson> for CantorSetSpec {
    type Error = FalconError;

    fn try_from(raw: CantorSetJson) -> Result<Self> {
        let r = match raw.r {
            RatioRepr::Number(r) => r,
            RatioRepr::Text(t) => parse_ratio(&t)?,
        };
        CantorSetSpec::new(raw.m, r, raw.lo, raw.hi)
    }
}

impl From<CantorSetSpec> for CantorSetJson {
    fn from(spec: CantorSetSpec) -> Self {
        CantorSetJson {
            m: spec.m,
            r: RatioRepr::Number(spec.r),
            lo: spec.lo,
            hi: spec.hi,
        }
    }
}
