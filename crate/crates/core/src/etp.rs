//! Exponential-trig-power-log profiles in the staircase coordinate `s`.
//!
//! A [`Profile`] is a finite sum of terms `c·s^p·(ln s)^k·e^{λs}·trig(νs)` with
//! `k ∈ {0, 1}` and `trig ∈ {1, cos, sin}`. The F^α-derivative of a function of
//! `s = S(x)` acts as `d/ds`, so the algebra is closed under differentiation and
//! residuals of closed-form solutions can be checked exactly.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FalconError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    None,
    Cos,
    Sin,
}

/// `coef · s^power · (ln s)^log_exp · e^{rate·s} · phase(freq·s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    pub power: f64,
    pub log_exp: u8,
    pub rate: f64,
    pub freq: f64,
    pub phase: Phase,
}

fn unsigned_zero(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

impl Term {
    pub fn new(coef: f64, power: f64, log_exp: u8, rate: f64, freq: f64, phase: Phase) -> Self {
        Self {
            coef,
            power,
            log_exp,
            rate,
            freq,
            phase,
        }
        .normalized()
    }

    pub fn constant(c: f64) -> Self {
        Self::new(c, 0.0, 0, 0.0, 0.0, Phase::None)
    }

    /// Folds the sign of the frequency into the coefficient and drops `sin 0`.
    fn normalized(mut self) -> Self {
        self.power = unsigned_zero(self.power);
        self.rate = unsigned_zero(self.rate);
        self.freq = unsigned_zero(self.freq);
        if self.phase == Phase::None {
            self.freq = 0.0;
        }
        if self.freq < 0.0 {
            self.freq = -self.freq;
            if self.phase == Phase::Sin {
                self.coef = -self.coef;
            }
        }
        if self.freq == 0.0 {
            match self.phase {
                Phase::Cos => self.phase = Phase::None,
                Phase::Sin => self.coef = 0.0,
                Phase::None => {}
            }
        }
        self.coef = unsigned_zero(self.coef);
        self
    }

    fn key_cmp(&self, other: &Self) -> Ordering {
        self.power
            .total_cmp(&other.power)
            .then(self.log_exp.cmp(&other.log_exp))
            .then(other.rate.total_cmp(&self.rate))
            .then(self.freq.total_cmp(&other.freq))
            .then(self.phase.cmp(&other.phase))
    }

    /// Same `(p, k, λ, ν, phase)`.
    pub fn same_key(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }

    pub fn is_trig(&self) -> bool {
        self.phase != Phase::None
    }

    fn needs_positive_s(&self) -> bool {
        self.log_exp > 0 || self.power < 0.0
    }

    fn check_domain(&self, s: f64) -> Result<()> {
        if self.needs_positive_s() && s <= 0.0 {
            return Err(FalconError::Domain(format!(
                "term {self} needs s > 0, got s = {s}"
            )));
        }
        if s < 0.0 && self.power.fract() != 0.0 {
            return Err(FalconError::Domain(format!(
                "non-integer power in {self} needs s >= 0, got s = {s}"
            )));
        }
        Ok(())
    }

    fn value_unchecked(&self, s: f64) -> f64 {
        let mut v = self.coef;
        if self.power != 0.0 {
            v *= if self.power.fract() == 0.0 && self.power.abs() < i32::MAX as f64 {
                s.powi(self.power as i32)
            } else {
                s.powf(self.power)
            };
        }
        if self.log_exp == 1 {
            v *= s.ln();
        }
        if self.rate != 0.0 {
            v *= (self.rate * s).exp();
        }
        match self.phase {
            Phase::None => v,
            Phase::Cos => v * (self.freq * s).cos(),
            Phase::Sin => v * (self.freq * s).sin(),
        }
    }

    pub fn evaluate(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        Ok(self.value_unchecked(s))
    }

    fn with_coef(mut self, coef: f64) -> Self {
        self.coef = coef;
        self
    }

    fn derivative_terms(&self) -> Vec<Term> {
        let mut out = Vec::with_capacity(4);
        let c = self.coef;
        if self.power != 0.0 {
            out.push(Term::new(c * self.power, self.power - 1.0, self.log_exp, self.rate, self.freq, self.phase));
        }
        if self.log_exp == 1 {
            out.push(Term::new(c, self.power - 1.0, 0, self.rate, self.freq, self.phase));
        }
        if self.rate != 0.0 {
            out.push(self.with_coef(c * self.rate));
        }
        match self.phase {
            Phase::None => {}
            Phase::Cos => out.push(Term::new(-c * self.freq, self.power, self.log_exp, self.rate, self.freq, Phase::Sin)),
            Phase::Sin => out.push(Term::new(c * self.freq, self.power, self.log_exp, self.rate, self.freq, Phase::Cos)),
        }
        out
    }

    fn product(&self, other: &Term) -> Result<Vec<Term>> {
        let log_exp = self.log_exp + other.log_exp;
        if log_exp > 1 {
            return Err(FalconError::UnsupportedTerm(format!(
                "({self}) * ({other}) needs (ln s)^2"
            )));
        }
        let c = self.coef * other.coef;
        let p = self.power + other.power;
        let l = self.rate + other.rate;
        let (a, b) = (self.freq, other.freq);
        let t = |coef: f64, freq: f64, phase: Phase| Term::new(coef, p, log_exp, l, freq, phase);
        use Phase::*;
        Ok(match (self.phase, other.phase) {
            (None, ph) => vec![t(c, b, ph)],
            (ph, None) => vec![t(c, a, ph)],
            (Cos, Cos) => vec![t(0.5 * c, a - b, Cos), t(0.5 * c, a + b, Cos)],
            (Sin, Sin) => vec![t(0.5 * c, a - b, Cos), t(-0.5 * c, a + b, Cos)],
            (Sin, Cos) => vec![t(0.5 * c, a + b, Sin), t(0.5 * c, a - b, Sin)],
            (Cos, Sin) => vec![t(0.5 * c, a + b, Sin), t(-0.5 * c, a - b, Sin)],
        })
    }

    fn antiderivative_terms(&self) -> Result<Vec<Term>> {
        let c = self.coef;
        let p = self.power;
        if self.rate == 0.0 && self.phase == Phase::None {
            return match (self.log_exp, p == -1.0) {
                (0, false) => Ok(vec![Term::new(c / (p + 1.0), p + 1.0, 0, 0.0, 0.0, Phase::None)]),
                (0, true) => Ok(vec![Term::new(c, 0.0, 1, 0.0, 0.0, Phase::None)]),
                (_, false) => {
                    let q = p + 1.0;
                    Ok(vec![
                        Term::new(c / q, q, 1, 0.0, 0.0, Phase::None),
                        Term::new(-c / (q * q), q, 0, 0.0, 0.0, Phase::None),
                    ])
                }
                (_, true) => Err(FalconError::NonElementary(format!(
                    "antiderivative of {self} is (ln s)^2 / 2"
                ))),
            };
        }
        if self.log_exp != 0 || p < 0.0 || p.fract() != 0.0 {
            return Err(FalconError::NonElementary(format!(
                "no closed-form antiderivative of {self} in the algebra"
            )));
        }
        // ∫ s^n e^{zs} ds = e^{zs} Σ_j (-1)^j n!/(n-j)! s^{n-j} / z^{j+1}, z = λ + iν.
        let n = p as i32;
        let z = Complex64::new(self.rate, self.freq);
        let mut out = Vec::with_capacity(2 * (n as usize + 1));
        let mut falling = 1.0;
        for j in 0..=n {
            if j > 0 {
                falling *= (n - j + 1) as f64;
            }
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let w = sign * falling / z.powi(j + 1);
            let q = (n - j) as f64;
            match self.phase {
                Phase::None => out.push(Term::new(c * w.re, q, 0, self.rate, 0.0, Phase::None)),
                Phase::Cos => {
                    out.push(Term::new(c * w.re, q, 0, self.rate, self.freq, Phase::Cos));
                    out.push(Term::new(-c * w.im, q, 0, self.rate, self.freq, Phase::Sin));
                }
                Phase::Sin => {
                    out.push(Term::new(c * w.re, q, 0, self.rate, self.freq, Phase::Sin));
                    out.push(Term::new(c * w.im, q, 0, self.rate, self.freq, Phase::Cos));
                }
            }
        }
        Ok(out)
    }
}

/// Normalised sum of [`Term`]s; the empty profile is zero.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Profile {
    terms: Vec<Term>,
}

impl Profile {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: impl IntoIterator<Item = Term>) -> Self {
        let mut terms: Vec<Term> = terms.into_iter().map(Term::normalized).collect();
        terms.sort_by(|a, b| a.key_cmp(b));
        let mut merged: Vec<Term> = Vec::with_capacity(terms.len());
        for t in terms {
            match merged.last_mut() {
                Some(last) if last.same_key(&t) => last.coef += t.coef,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coef != 0.0);
        for t in &mut merged {
            t.coef = unsigned_zero(t.coef);
        }
        Self { terms: merged }
    }

    pub fn term(t: Term) -> Self {
        Self::from_terms([t])
    }

    pub fn constant(c: f64) -> Self {
        Self::term(Term::constant(c))
    }

    /// `e^{rate·s}`.
    pub fn exp(rate: f64) -> Self {
        Self::term(Term::new(1.0, 0.0, 0, rate, 0.0, Phase::None))
    }

    /// `s^p`.
    pub fn power(p: f64) -> Self {
        Self::term(Term::new(1.0, p, 0, 0.0, 0.0, Phase::None))
    }

    /// `ln s`.
    pub fn ln() -> Self {
        Self::term(Term::new(1.0, 0.0, 1, 0.0, 0.0, Phase::None))
    }

    /// `e^{λs} cos(νs)`.
    pub fn exp_cos(rate: f64, freq: f64) -> Self {
        Self::term(Term::new(1.0, 0.0, 0, rate, freq, Phase::Cos))
    }

    /// `e^{λs} sin(νs)`.
    pub fn exp_sin(rate: f64, freq: f64) -> Self {
        Self::term(Term::new(1.0, 0.0, 0, rate, freq, Phase::Sin))
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_abs_coef(&self) -> f64 {
        self.terms.iter().fold(0.0, |m, t| m.max(t.coef.abs()))
    }

    /// True when evaluation needs `s > 0`.
    pub fn needs_positive_s(&self) -> bool {
        self.terms.iter().any(Term::needs_positive_s)
    }

    pub fn evaluate(&self, s: f64) -> Result<f64> {
        let mut sum = 0.0;
        for t in &self.terms {
            sum += t.evaluate(s)?;
        }
        Ok(sum)
    }

    pub fn differentiate(&self) -> Profile {
        Self::from_terms(self.terms.iter().flat_map(Term::derivative_terms))
    }

    /// `ca·a + cb·b`.
    pub fn combine(a: &Profile, b: &Profile, ca: f64, cb: f64) -> Profile {
        Self::from_terms(
            a.terms
                .iter()
                .map(|t| t.with_coef(ca * t.coef))
                .chain(b.terms.iter().map(|t| t.with_coef(cb * t.coef))),
        )
    }

    pub fn scale(&self, c: f64) -> Profile {
        Self::from_terms(self.terms.iter().map(|t| t.with_coef(c * t.coef)))
    }

    pub fn multiply(&self, other: &Profile) -> Result<Profile> {
        let mut out = Vec::with_capacity(2 * self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                out.extend(a.product(b)?);
            }
        }
        Ok(Self::from_terms(out))
    }

    /// Term-wise antiderivative with zero constant; `NonElementary` when a
    /// term has no closed form in the algebra.
    pub fn antiderivative(&self) -> Result<Profile> {
        let mut out = Vec::new();
        for t in &self.terms {
            out.extend(t.antiderivative_terms()?);
        }
        Ok(Self::from_terms(out))
    }

    /// Drops terms with `|coef| <= tol`.
    pub fn chop(&self, tol: f64) -> Profile {
        Self {
            terms: self.terms.iter().copied().filter(|t| t.coef.abs() > tol).collect(),
        }
    }

    /// Drops every term whose key occurs in `other`.
    pub fn without_keys_of(&self, other: &Profile) -> Profile {
        Self {
            terms: self
                .terms
                .iter()
                .copied()
                .filter(|t| !other.terms.iter().any(|o| o.same_key(t)))
                .collect(),
        }
    }

    /// Coefficient of the term sharing `key`'s key, or 0.
    pub fn coefficient_of(&self, key: &Term) -> f64 {
        self.terms
            .iter()
            .find(|t| t.same_key(key))
            .map_or(0.0, |t| t.coef)
    }

    /// Multiplicative inverse of a single non-trig, non-log term.
    pub fn inverse(&self) -> Result<Profile> {
        match self.terms.as_slice() {
            [t] if !t.is_trig() && t.log_exp == 0 => Ok(Self::term(Term::new(
                1.0 / t.coef,
                -t.power,
                0,
                -t.rate,
                0.0,
                Phase::None,
            ))),
            _ => Err(FalconError::UnsupportedTerm(format!(
                "1/({self}) is not a single exponential-power term"
            ))),
        }
    }

    /// `exp` of a profile built from `c0 + c1·s + c_ln·ln s`: `e^{c0}·s^{c_ln}·e^{c1·s}`.
    pub fn exp_of(&self) -> Result<Profile> {
        let mut c0 = 0.0;
        let mut c1 = 0.0;
        let mut c_ln = 0.0;
        for t in &self.terms {
            let plain = !t.is_trig() && t.rate == 0.0;
            match (plain, t.power, t.log_exp) {
                (true, 0.0, 0) => c0 += t.coef,
                (true, 1.0, 0) => c1 += t.coef,
                (true, 0.0, 1) => c_ln += t.coef,
                _ => {
                    return Err(FalconError::UnsupportedTerm(format!(
                        "exp({self}) leaves the algebra"
                    )))
                }
            }
        }
        Ok(Self::term(Term::new(c0.exp(), c_ln, 0, c1, 0.0, Phase::None)))
    }
}

impl Add for Profile {
    type Output = Profile;
    fn add(self, rhs: Profile) -> Profile {
        Profile::combine(&self, &rhs, 1.0, 1.0)
    }
}

impl Add for &Profile {
    type Output = Profile;
    fn add(self, rhs: &Profile) -> Profile {
        Profile::combine(self, rhs, 1.0, 1.0)
    }
}

impl Sub for Profile {
    type Output = Profile;
    fn sub(self, rhs: Profile) -> Profile {
        Profile::combine(&self, &rhs, 1.0, -1.0)
    }
}

impl Sub for &Profile {
    type Output = Profile;
    fn sub(self, rhs: &Profile) -> Profile {
        Profile::combine(self, rhs, 1.0, -1.0)
    }
}

impl Neg for Profile {
    type Output = Profile;
    fn neg(self) -> Profile {
        self.scale(-1.0)
    }
}

impl Mul<f64> for Profile {
    type Output = Profile;
    fn mul(self, c: f64) -> Profile {
        self.scale(c)
    }
}

impl Mul<f64> for &Profile {
    type Output = Profile;
    fn mul(self, c: f64) -> Profile {
        self.scale(c)
    }
}

fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn fmt_linear(c: f64) -> String {
    if c == 1.0 {
        "s".into()
    } else if c == -1.0 {
        "-s".into()
    } else {
        format!("{}*s", fmt_num(c))
    }
}

/// Formats `|coef|·factors`; the sign is handled by the caller.
fn fmt_magnitude(t: &Term, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let mut factors: Vec<String> = Vec::new();
    if t.power == 1.0 {
        factors.push("s".into());
    } else if t.power != 0.0 {
        factors.push(format!("s^{}", fmt_num(t.power)));
    }
    if t.log_exp == 1 {
        factors.push("ln(s)".into());
    }
    if t.rate != 0.0 {
        factors.push(format!("exp({})", fmt_linear(t.rate)));
    }
    match t.phase {
        Phase::None => {}
        Phase::Cos => factors.push(format!("cos({})", fmt_linear(t.freq))),
        Phase::Sin => factors.push(format!("sin({})", fmt_linear(t.freq))),
    }
    let c = t.coef.abs();
    if factors.is_empty() {
        write!(f, "{}", fmt_num(c))
    } else if c == 1.0 {
        write!(f, "{}", factors.join("*"))
    } else {
        write!(f, "{}*{}", fmt_num(c), factors.join("*"))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coef < 0.0 {
            f.write_str("-")?;
        }
        fmt_magnitude(self, f)
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            match (i, t.coef < 0.0) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            fmt_magnitude(t, f)?;
        }
        Ok(())
    }
}

impl From<Profile> for String {
    fn from(p: Profile) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for Profile {
    type Error = FalconError;
    fn try_from(s: String) -> Result<Profile> {
        s.parse()
    }
}

impl FromStr for Profile {
    type Err = FalconError;

    fn from_str(text: &str) -> Result<Profile> {
        let mut p = Parser { src: text.as_bytes(), pos: 0 };
        let out = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(out)
    }
}

/// Recursive-descent parser for sums of products of
/// `number | s[^e] | ln(s)[^1] | exp(lin) | cos(lin) | sin(lin) | (expr)`.
struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: impl Into<String>) -> FalconError {
        FalconError::Parse {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{}'", c as char)))
        }
    }

    fn eat_word(&mut self, w: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(w.as_bytes()) {
            self.pos += w.len();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Profile> {
        let mut sign = 1.0;
        if self.eat(b'-') {
            sign = -1.0;
        } else {
            self.eat(b'+');
        }
        let mut acc = self.product()?.scale(sign);
        loop {
            let sign = if self.eat(b'+') {
                1.0
            } else if self.eat(b'-') {
                -1.0
            } else {
                break;
            };
            let next = self.product()?;
            acc = Profile::combine(&acc, &next, 1.0, sign);
        }
        Ok(acc)
    }

    fn product(&mut self) -> Result<Profile> {
        let mut acc = self.factor()?;
        while self.eat(b'*') {
            let rhs = self.factor()?;
            acc = acc.multiply(&rhs).map_err(|e| self.error(e.to_string()))?;
        }
        Ok(acc)
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let s = self.src;
        let digits = |p: &mut usize| {
            while *p < s.len() && s[*p].is_ascii_digit() {
                *p += 1;
            }
        };
        let mut p = self.pos;
        digits(&mut p);
        if p < s.len() && s[p] == b'.' {
            p += 1;
            digits(&mut p);
        }
        if p < s.len() && (s[p] == b'e' || s[p] == b'E') {
            let mut q = p + 1;
            if q < s.len() && (s[q] == b'+' || s[q] == b'-') {
                q += 1;
            }
            if q < s.len() && s[q].is_ascii_digit() {
                digits(&mut q);
                p = q;
            }
        }
        let text = std::str::from_utf8(&s[start..p]).unwrap_or("");
        match text.parse::<f64>() {
            Ok(v) => {
                self.pos = p;
                Ok(v)
            }
            Err(_) => Err(self.error("expected a number")),
        }
    }

    fn signed_number(&mut self) -> Result<f64> {
        if self.eat(b'(') {
            let v = self.signed_number()?;
            self.expect(b')')?;
            return Ok(v);
        }
        if self.eat(b'-') {
            return Ok(-self.number()?);
        }
        self.eat(b'+');
        self.number()
    }

    /// `[sign] (number [* s] | s [* number])`.
    fn linear(&mut self) -> Result<(f64, bool)> {
        let sign = if self.eat(b'-') {
            -1.0
        } else {
            self.eat(b'+');
            1.0
        };
        if self.eat(b's') {
            let c = if self.eat(b'*') { self.number()? } else { 1.0 };
            return Ok((sign * c, true));
        }
        let c = self.number()?;
        if self.eat(b'*') {
            self.expect(b's')?;
            return Ok((sign * c, true));
        }
        Ok((sign * c, false))
    }

    fn factor(&mut self) -> Result<Profile> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(b's') if !self.src[self.pos..].starts_with(b"sin") => {
                self.pos += 1;
                let p = if self.eat(b'^') { self.signed_number()? } else { 1.0 };
                Ok(Profile::power(p))
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => Ok(Profile::constant(self.number()?)),
            Some(b'-') => {
                self.pos += 1;
                Ok(self.factor()?.scale(-1.0))
            }
            _ => {
                if self.eat_word("ln") {
                    self.expect(b'(')?;
                    self.expect(b's')?;
                    self.expect(b')')?;
                    if self.eat(b'^') {
                        let k = self.signed_number()?;
                        if k != 1.0 {
                            return Err(self.error("only ln(s)^1 is supported"));
                        }
                    }
                    return Ok(Profile::ln());
                }
                for (name, phase) in [("exp", Phase::None), ("cos", Phase::Cos), ("sin", Phase::Sin)] {
                    if self.eat_word(name) {
                        self.expect(b'(')?;
                        let (c, has_s) = self.linear()?;
                        self.expect(b')')?;
                        return Ok(match (phase, has_s) {
                            (Phase::None, true) => Profile::exp(c),
                            (Phase::None, false) => Profile::constant(c.exp()),
                            (Phase::Cos, true) => Profile::exp_cos(0.0, c),
                            (Phase::Cos, false) => Profile::constant(c.cos()),
                            (Phase::Sin, true) => Profile::exp_sin(0.0, c),
                            (Phase::Sin, false) => Profile::constant(c.sin()),
                        });
                    }
                }
                Err(self.error("expected a factor"))
            }
        }
    }
}
