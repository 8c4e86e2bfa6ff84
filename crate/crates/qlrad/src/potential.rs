//! Radial potential expressions.
//!
//! The three coefficient functions of the problem are entered as small
//! symbolic expressions in the radial variable `r`, e.g.
//! `min(r^0.5, r^1.5)` or `exp(2*r)`. This module parses and evaluates
//! them, estimates their power-law behaviour near `0` and near infinity,
//! and runs the structural checks (positivity, local integrability,
//! admissible exponent range) that the downstream theory relies on.

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;
use std::fmt;
use std::str::FromStr;

/// Ratio threshold above which a monotone trend toward an interval endpoint
/// is reported as divergence by [`ess_sup_ratio`].
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// Expression tree over the single radial variable `r > 0`.
///
/// Node kinds: positive constants, `r` itself, powers with a real exponent,
/// sums, differences, products, `min`, `max`, `exp` and `log`.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialExpr {
    Const(f64),
    Radius,
    Pow(Box<PotentialExpr>, f64),
    Add(Box<PotentialExpr>, Box<PotentialExpr>),
    Sub(Box<PotentialExpr>, Box<PotentialExpr>),
    Mul(Box<PotentialExpr>, Box<PotentialExpr>),
    Min(Box<PotentialExpr>, Box<PotentialExpr>),
    Max(Box<PotentialExpr>, Box<PotentialExpr>),
    Exp(Box<PotentialExpr>),
    Log(Box<PotentialExpr>),
}

impl PotentialExpr {
    /// Parse an expression string.
    ///
    /// Grammar (whitespace insignificant):
    /// ```text
    /// expr   := term (('+'|'-') term)*
    /// term   := factor ('*' factor)*
    /// factor := atom ('^' number)?
    /// atom   := number | 'r' | '(' expr ')' | func '(' expr (',' expr)? ')'
    /// func   := 'min' | 'max' | 'exp' | 'log'
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        Parser::new(text, false).parse()
    }

    /// Like [`parse`](Self::parse), but rejects non-positive numeric
    /// literals. Used for the potential `K`, which must be strictly
    /// positive.
    pub fn parse_positive(text: &str) -> Result<Self> {
        Parser::new(text, true).parse()
    }

    /// Evaluate at `r > 0`. Non-finite results (overflow, log of a
    /// non-positive subexpression) are reported as errors so that callers
    /// can shrink their sample domain.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Eval {
                r,
                message: "potentials are defined for r > 0 only".into(),
            });
        }
        let v = self.eval_raw(r);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Eval {
                r,
                message: format!("expression evaluated to {v}"),
            })
        }
    }

    fn eval_raw(&self, r: f64) -> f64 {
        match self {
            PotentialExpr::Const(c) => *c,
            PotentialExpr::Radius => r,
            PotentialExpr::Pow(b, e) => b.eval_raw(r).powf(*e),
            PotentialExpr::Add(a, b) => a.eval_raw(r) + b.eval_raw(r),
            PotentialExpr::Sub(a, b) => a.eval_raw(r) - b.eval_raw(r),
            PotentialExpr::Mul(a, b) => a.eval_raw(r) * b.eval_raw(r),
            PotentialExpr::Min(a, b) => a.eval_raw(r).min(b.eval_raw(r)),
            PotentialExpr::Max(a, b) => a.eval_raw(r).max(b.eval_raw(r)),
            PotentialExpr::Exp(a) => a.eval_raw(r).exp(),
            PotentialExpr::Log(a) => a.eval_raw(r).ln(),
        }
    }

    /// Depth of the expression tree (a leaf has depth 1).
    pub fn depth(&self) -> usize {
        match self {
            PotentialExpr::Const(_) | PotentialExpr::Radius => 1,
            PotentialExpr::Pow(a, _) | PotentialExpr::Exp(a) | PotentialExpr::Log(a) => {
                1 + a.depth()
            }
            PotentialExpr::Add(a, b)
            | PotentialExpr::Sub(a, b)
            | PotentialExpr::Mul(a, b)
            | PotentialExpr::Min(a, b)
            | PotentialExpr::Max(a, b) => 1 + a.depth().max(b.depth()),
        }
    }
}

impl FromStr for PotentialExpr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PotentialExpr::parse(s)
    }
}

impl fmt::Display for PotentialExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialExpr::Const(c) => write!(f, "{c}"),
            PotentialExpr::Radius => write!(f, "r"),
            PotentialExpr::Pow(b, e) => write!(f, "({b})^{e}"),
            PotentialExpr::Add(a, b) => write!(f, "({a} + {b})"),
            PotentialExpr::Sub(a, b) => write!(f, "({a} - {b})"),
            PotentialExpr::Mul(a, b) => write!(f, "({a} * {b})"),
            PotentialExpr::Min(a, b) => write!(f, "min({a}, {b})"),
            PotentialExpr::Max(a, b) => write!(f, "max({a}, {b})"),
            PotentialExpr::Exp(a) => write!(f, "exp({a})"),
            PotentialExpr::Log(a) => write!(f, "log({a})"),
        }
    }
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
    require_positive: bool,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, require_positive: bool) -> Self {
        Parser {
            text: text.as_bytes(),
            pos: 0,
            require_positive,
        }
    }

    fn err(&self, pos: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            position: pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.text.get(self.pos).copied()
    }

    fn parse(mut self) -> Result<PotentialExpr> {
        let expr = self.parse_expr()?;
        if let Some(c) = self.peek() {
            return Err(self.err(self.pos, format!("unexpected trailing '{}'", c as char)));
        }
        Ok(expr)
    }

    fn parse_expr(&mut self) -> Result<PotentialExpr> {
        let mut lhs = self.parse_term()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.parse_term()?;
            lhs = if op == b'+' {
                PotentialExpr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                PotentialExpr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn parse_term(&mut self) -> Result<PotentialExpr> {
        let mut lhs = self.parse_factor()?;
        while let Some(b'*') = self.peek() {
            self.pos += 1;
            let rhs = self.parse_factor()?;
            lhs = PotentialExpr::Mul(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_factor(&mut self) -> Result<PotentialExpr> {
        let atom = self.parse_atom()?;
        if let Some(b'^') = self.peek() {
            self.pos += 1;
            let e = self.parse_number(true)?;
            return Ok(PotentialExpr::Pow(Box::new(atom), e));
        }
        Ok(atom)
    }

    fn parse_atom(&mut self) -> Result<PotentialExpr> {
        match self.peek() {
            None => Err(self.err(self.pos, "unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.parse_expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                let v = self.parse_number(false)?;
                if self.require_positive && v <= 0.0 {
                    return Err(self.err(start, format!("constant {v} must be positive here")));
                }
                Ok(PotentialExpr::Const(v))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                let name = self.parse_ident();
                match name {
                    "r" => Ok(PotentialExpr::Radius),
                    "min" | "max" => {
                        self.expect(b'(')?;
                        let a = self.parse_expr()?;
                        self.expect(b',')?;
                        let b = self.parse_expr()?;
                        self.expect(b')')?;
                        Ok(if name == "min" {
                            PotentialExpr::Min(Box::new(a), Box::new(b))
                        } else {
                            PotentialExpr::Max(Box::new(a), Box::new(b))
                        })
                    }
                    "exp" | "log" => {
                        self.expect(b'(')?;
                        let a = self.parse_expr()?;
                        self.expect(b')')?;
                        Ok(if name == "exp" {
                            PotentialExpr::Exp(Box::new(a))
                        } else {
                            PotentialExpr::Log(Box::new(a))
                        })
                    }
                    other => Err(self.err(start, format!("unknown identifier '{other}'"))),
                }
            }
            Some(c) => Err(self.err(self.pos, format!("unexpected character '{}'", c as char))),
        }
    }

    fn parse_ident(&mut self) -> &'a str {
        let start = self.pos;
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.text[start..self.pos]).expect("ascii")
    }

    /// Decimal literal. A sign is only admitted in exponent position
    /// (after `^`), where negative powers such as `r^-2` are common.
    fn parse_number(&mut self, allow_sign: bool) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        if allow_sign {
            if let Some(b'+' | b'-') = self.text.get(self.pos) {
                self.pos += 1;
            }
        }
        let digits_start = self.pos;
        while self.pos < self.text.len()
            && (self.text[self.pos].is_ascii_digit() || self.text[self.pos] == b'.')
        {
            self.pos += 1;
        }
        if self.pos == digits_start {
            return Err(self.err(start, "expected a number"));
        }
        let s = std::str::from_utf8(&self.text[start..self.pos]).expect("ascii");
        let v: f64 = s
            .parse()
            .map_err(|_| self.err(start, format!("invalid number '{s}'")))?;
        if !v.is_finite() {
            return Err(self.err(start, "constant must be finite"));
        }
        Ok(v)
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        match self.peek() {
            Some(found) if found == c => {
                self.pos += 1;
                Ok(())
            }
            Some(found) => Err(self.err(
                self.pos,
                format!("expected '{}', found '{}'", c as char, found as char),
            )),
            None => Err(self.err(
                self.pos,
                format!("expected '{}', found end of input", c as char),
            )),
        }
    }
}

/// Power-law behaviour of a potential near the origin and near infinity,
/// together with the smallest observed ratios against the fitted powers
/// (the liminf constants) and the quality of each fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticProfile {
    /// Fitted exponent near `r = 0`.
    pub a0: f64,
    /// Fitted exponent near `r = +inf`.
    pub a_inf: f64,
    /// Minimal sampled ratio `A(r) / r^a0` on the origin-side grid.
    pub c0: f64,
    /// Minimal sampled ratio `A(r) / r^a_inf` on the infinity-side grid.
    pub c_inf: f64,
    /// Maximal absolute log-residual of the origin-side fit.
    pub fit_residual0: f64,
    /// Maximal absolute log-residual of the infinity-side fit.
    pub fit_residual_inf: f64,
}

impl AsymptoticProfile {
    /// Whether the exponents sit in the admissible range `(p - N, p]`
    /// required of the gradient-weight potential.
    pub fn exponents_admissible(&self, p: f64, n: u32) -> bool {
        let lo = p - n as f64;
        // Small tolerance at the closed upper end: fitted exponents land on
        // the boundary value up to rounding.
        let hi = p + 1e-9;
        self.a0 > lo && self.a0 <= hi && self.a_inf > lo && self.a_inf <= hi
    }
}

/// Default origin-side sample grid: 32 points per decade, decreasing over
/// `[1e-5, 1e-1]`.
pub fn default_origin_samples() -> Vec<f64> {
    geometric_samples(1e-1, 1e-5, 129)
}

/// Default infinity-side sample grid: 32 points per decade, increasing over
/// `[1e1, 1e5]`.
pub fn default_infinity_samples() -> Vec<f64> {
    geometric_samples(1e1, 1e5, 129)
}

/// `count` geometrically spaced points from `from` to `to` (inclusive).
pub fn geometric_samples(from: f64, to: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && from > 0.0 && to > 0.0);
    let l0 = from.ln();
    let l1 = to.ln();
    (0..count)
        .map(|i| (l0 + (l1 - l0) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Least-squares power-law fit on both tails of a potential.
///
/// `grid0` must head toward the origin and `grid_inf` toward infinity, each
/// with at least 8 strictly positive samples. The returned exponents are the
/// slopes of `ln A` against `ln r`; a large `fit_residual*` means the tail is
/// not power-like and the exponent should be supplied manually.
pub fn estimate_asymptotics(
    expr: &PotentialExpr,
    grid0: &[f64],
    grid_inf: &[f64],
) -> Result<AsymptoticProfile> {
    let (a0, c0, fit_residual0) = fit_side(expr, grid0)?;
    let (a_inf, c_inf, fit_residual_inf) = fit_side(expr, grid_inf)?;
    Ok(AsymptoticProfile {
        a0,
        a_inf,
        c0,
        c_inf,
        fit_residual0,
        fit_residual_inf,
    })
}

fn fit_side(expr: &PotentialExpr, grid: &[f64]) -> Result<(f64, f64, f64)> {
    if grid.len() < 8 {
        return Err(Error::InvalidParams(format!(
            "asymptotic fit needs at least 8 samples per side, got {}",
            grid.len()
        )));
    }
    let mut xs = Vec::with_capacity(grid.len());
    let mut ys = Vec::with_capacity(grid.len());
    for &r in grid {
        let v = expr.eval(r)?;
        if v <= 0.0 {
            return Err(Error::Eval {
                r,
                message: format!("potential is not positive at r = {r} (value {v})"),
            });
        }
        xs.push(r.ln());
        ys.push(v.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - slope * x - intercept).abs())
        .fold(0.0f64, f64::max);
    let c = grid
        .iter()
        .map(|&r| expr.eval_checked_ratio(r, slope))
        .fold(f64::INFINITY, f64::min);
    Ok((slope, c, residual))
}

impl PotentialExpr {
    fn eval_checked_ratio(&self, r: f64, a: f64) -> f64 {
        // Ratios against the fitted power; callers have already validated
        // finiteness on the sample grid.
        self.eval_raw(r) / r.powf(a)
    }
}

/// Outcome of a sampled essential-supremum estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EssSup {
    /// Maximal sampled ratio.
    Finite(f64),
    /// Ratios exceed the divergence threshold with a monotone trend toward
    /// an interval endpoint, or an individual sample is infinite.
    Divergent,
}

impl EssSup {
    pub fn is_finite(&self) -> bool {
        matches!(self, EssSup::Finite(_))
    }

    pub fn value(&self) -> f64 {
        match self {
            EssSup::Finite(v) => *v,
            EssSup::Divergent => f64::INFINITY,
        }
    }
}

/// Sampled essential supremum of `K(r) / (r^alpha * V(r)^beta)` over a
/// radial interval.
///
/// `V(r)^0` is taken to be `1` even where `V(r) = 0`. A sample with
/// `V(r) = 0` and `beta > 0` yields an infinite ratio and the whole
/// estimate is reported divergent. Since a sampled maximum can never prove
/// an essential supremum infinite, growth is additionally detected by a
/// trend test: ratios above [`DIVERGENCE_THRESHOLD`] that increase
/// monotonically through the decade adjacent to an endpoint are flagged.
pub fn ess_sup_ratio(
    k: &PotentialExpr,
    v: &PotentialExpr,
    alpha: f64,
    beta: f64,
    interval: (f64, f64),
    samples: usize,
) -> Result<EssSup> {
    let (lo, hi) = interval;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidParams(format!(
            "ess-sup interval must satisfy 0 < lo < hi, got ({lo}, {hi})"
        )));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidParams(format!("beta must be in [0,1], got {beta}")));
    }
    let samples = samples.max(16);
    let rs = geometric_samples(lo, hi, samples);
    let mut ratios = Vec::with_capacity(samples);
    for &r in &rs {
        let kv = k.eval(r)?;
        let vv = v.eval(r)?;
        let denom = if beta == 0.0 { 1.0 } else { vv.powf(beta) };
        let ratio = kv / (r.powf(alpha) * denom);
        if !ratio.is_finite() {
            return Ok(EssSup::Divergent);
        }
        ratios.push(ratio);
    }
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max > DIVERGENCE_THRESHOLD {
        let per_decade = ((samples - 1) as f64 / (hi / lo).log10()).ceil() as usize;
        let w = per_decade.min(ratios.len() - 1).max(2);
        let toward_lo = ratios[..w].windows(2).all(|p| p[0] >= p[1]);
        let toward_hi = ratios[ratios.len() - w..].windows(2).all(|p| p[0] <= p[1]);
        if toward_lo || toward_hi {
            return Ok(EssSup::Divergent);
        }
    }
    Ok(EssSup::Finite(max))
}

/// Numerical check of the standing structural hypotheses on a potential
/// triple.
#[derive(Debug, Clone)]
pub struct HypothesisReport {
    pub a_ok: bool,
    pub v_ok: bool,
    pub k_ok: bool,
    /// Estimated power-law profile of the gradient weight.
    pub profile: AsymptoticProfile,
    pub a_positive: bool,
    pub k_positive: bool,
    pub v_nonnegative: bool,
    /// Quadrature value of the local integral of `V` over `[1/2, 2]`.
    pub v_local_integral: f64,
    /// Quadrature value of the local integral of `K^s` over `[1/2, 2]`.
    pub k_s_local_integral: f64,
    pub notes: Vec<String>,
}

impl HypothesisReport {
    pub fn all_ok(&self) -> bool {
        self.a_ok && self.v_ok && self.k_ok
    }
}

/// Check positivity, local integrability and the exponent range for a
/// potential triple. Failures are recorded in the report, never raised.
///
/// The integrability checks are advisory: sampling cannot prove a function
/// locally integrable, so a finite quadrature value on `[1/2, 2]` merely
/// fails to falsify the hypothesis.
pub fn verify_hypotheses(
    a: &PotentialExpr,
    v: &PotentialExpr,
    k: &PotentialExpr,
    n: u32,
    p: f64,
    s: f64,
) -> Result<HypothesisReport> {
    if s <= 1.0 {
        return Err(Error::InvalidParams(format!(
            "the local-integrability order s must exceed 1, got {s}"
        )));
    }
    verify_hypotheses_with_profile(a, v, k, n, p, s, None)
}

/// Same as [`verify_hypotheses`] but accepting a manually supplied profile
/// for the gradient weight (overriding the least-squares fit).
pub fn verify_hypotheses_with_profile(
    a: &PotentialExpr,
    v: &PotentialExpr,
    k: &PotentialExpr,
    n: u32,
    p: f64,
    s: f64,
    profile_override: Option<AsymptoticProfile>,
) -> Result<HypothesisReport> {
    let mut notes = Vec::new();
    let samples = geometric_samples(1e-4, 1e3, 225);

    let mut a_positive = true;
    let mut k_positive = true;
    let mut v_nonnegative = true;
    for &r in &samples {
        match a.eval(r) {
            Ok(val) if val > 0.0 => {}
            _ => {
                a_positive = false;
                notes.push(format!("A is not positive near r = {r:.3e}"));
                break;
            }
        }
    }
    for &r in &samples {
        match k.eval(r) {
            Ok(val) if val > 0.0 => {}
            _ => {
                k_positive = false;
                notes.push(format!("K is not positive near r = {r:.3e}"));
                break;
            }
        }
    }
    for &r in &samples {
        match v.eval(r) {
            Ok(val) if val >= 0.0 => {}
            _ => {
                v_nonnegative = false;
                notes.push(format!("V is negative near r = {r:.3e}"));
                break;
            }
        }
    }

    let profile = match profile_override {
        Some(p) => p,
        None => estimate_asymptotics(a, &default_origin_samples(), &default_infinity_samples())?,
    };
    if profile.fit_residual0.max(profile.fit_residual_inf) > 1e-2 {
        notes.push(
            "asymptotic fit residual is large; supply exponents manually if the tails are not power-like"
                .into(),
        );
    }

    let v_local_integral = adaptive_simpson(&|r| v.eval_raw(r).max(0.0), 0.5, 2.0, 1e-10);
    let k_s_local_integral = adaptive_simpson(&|r| k.eval_raw(r).abs().powf(s), 0.5, 2.0, 1e-10);

    let a_ok = a_positive && profile.exponents_admissible(p, n);
    if a_positive && !profile.exponents_admissible(p, n) {
        notes.push(format!(
            "fitted exponents a0 = {:.6}, a_inf = {:.6} fall outside ({}, {}]",
            profile.a0,
            profile.a_inf,
            p - n as f64,
            p
        ));
    }
    let v_ok = v_nonnegative && v_local_integral.is_finite();
    let k_ok = k_positive && k_s_local_integral.is_finite();

    Ok(HypothesisReport {
        a_ok,
        v_ok,
        k_ok,
        profile,
        a_positive,
        k_positive,
        v_nonnegative,
        v_local_integral,
        k_s_local_integral,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(text: &str) -> PotentialExpr {
        PotentialExpr::parse(text).unwrap()
    }

    #[test]
    fn parses_example_potentials() {
        // min{r^1/2, r^3/2} evaluates to min of the branches
        let e = p("min(r^0.5, r^1.5)");
        assert_relative_eq!(e.eval(4.0).unwrap(), 2.0);
        assert_relative_eq!(e.eval(0.25).unwrap(), 0.125);

        let one = p("1");
        assert_relative_eq!(one.eval(0.3).unwrap(), 1.0);
        assert_relative_eq!(one.eval(30.0).unwrap(), 1.0);

        let e2 = p("exp(2*r)");
        assert_relative_eq!(e2.eval(1.0).unwrap(), 7.389056098930650, epsilon = 1e-12);
    }

    #[test]
    fn max_of_equal_branches() {
        let e = p("max(r^0.5, r^1.5)");
        assert_relative_eq!(e.eval(1.0).unwrap(), 1.0);
    }

    #[test]
    fn negative_exponents_parse() {
        let e = p("max(r^-2, r^-1)");
        assert_relative_eq!(e.eval(0.5).unwrap(), 4.0);
        assert_relative_eq!(e.eval(2.0).unwrap(), 0.5);
    }

    #[test]
    fn sums_products_and_parens() {
        let e = p("2*r + (r - 1)*r^2");
        // 2r + (r-1)r^2 at r = 3: 6 + 2*9 = 24
        assert_relative_eq!(e.eval(3.0).unwrap(), 24.0);
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match PotentialExpr::parse("min(r,") {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 6),
            other => panic!("expected parse error, got {other:?}"),
        }
        match PotentialExpr::parse("r + @") {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(PotentialExpr::parse("foo(r)").is_err());
        assert!(PotentialExpr::parse("min(r)").is_err());
    }

    #[test]
    fn positivity_gate_rejects_nonpositive_constants() {
        assert!(PotentialExpr::parse_positive("0").is_err());
        assert!(PotentialExpr::parse_positive("r + 0.0").is_err());
        assert!(PotentialExpr::parse_positive("exp(r)").is_ok());
        // plain parse admits zero constants
        assert!(PotentialExpr::parse("0").is_ok());
    }

    #[test]
    fn eval_rejects_nonpositive_radius_and_overflow() {
        let e = p("r");
        assert!(e.eval(0.0).is_err());
        assert!(e.eval(-1.0).is_err());
        let big = p("exp(exp(r))");
        assert!(big.eval(10.0).is_err());
    }

    #[test]
    fn asymptotics_of_example_weights() {
        let a = p("min(r^0.5, r^1.5)");
        let prof =
            estimate_asymptotics(&a, &default_origin_samples(), &default_infinity_samples())
                .unwrap();
        assert_relative_eq!(prof.a0, 1.5, epsilon = 1e-9);
        assert_relative_eq!(prof.a_inf, 0.5, epsilon = 1e-9);
        assert!(prof.fit_residual0 < 1e-10);
        assert!(prof.fit_residual_inf < 1e-10);

        let flat = p("1");
        let prof = estimate_asymptotics(&flat, &default_origin_samples(), &default_infinity_samples())
            .unwrap();
        assert_relative_eq!(prof.a0, 0.0, epsilon = 1e-12);
        assert_relative_eq!(prof.a_inf, 0.0, epsilon = 1e-12);

        let sing = p("max(r^-2, r^-1)");
        let prof = estimate_asymptotics(&sing, &default_origin_samples(), &default_infinity_samples())
            .unwrap();
        assert_relative_eq!(prof.a0, -2.0, epsilon = 1e-9);
        assert_relative_eq!(prof.a_inf, -1.0, epsilon = 1e-9);
    }

    #[test]
    fn pure_power_fit_is_exact() {
        for a in [-1.75, -0.5, 0.0, 1.0, 2.25] {
            let e = PotentialExpr::Pow(Box::new(PotentialExpr::Radius), a);
            let prof =
                estimate_asymptotics(&e, &default_origin_samples(), &default_infinity_samples())
                    .unwrap();
            assert_relative_eq!(prof.a0, a, epsilon = 1e-10);
            assert_relative_eq!(prof.a_inf, a, epsilon = 1e-10);
            assert!(prof.fit_residual0 <= 1e-10, "residual {}", prof.fit_residual0);
            assert!(prof.fit_residual_inf <= 1e-10);
        }
    }

    #[test]
    fn ess_sup_of_first_example_near_origin() {
        // K = max{r^1/2, r^3/2} against r^{1/2}: ratio max{1, r} = 1 on (0,1]
        let k = p("max(r^0.5, r^1.5)");
        let v = p("min(1, r^-1.5)");
        let got = ess_sup_ratio(&k, &v, 0.5, 0.0, (1e-6, 1.0), 400).unwrap();
        match got {
            EssSup::Finite(m) => assert_relative_eq!(m, 1.0, epsilon = 1e-12),
            EssSup::Divergent => panic!("unexpected divergence"),
        }
    }

    #[test]
    fn ess_sup_of_second_example_at_infinity() {
        let k = p("exp(r)");
        let v = p("exp(2*r)");
        let got = ess_sup_ratio(&k, &v, 0.0, 0.5, (1.0, 200.0), 400).unwrap();
        match got {
            EssSup::Finite(m) => assert_relative_eq!(m, 1.0, epsilon = 1e-12),
            EssSup::Divergent => panic!("unexpected divergence"),
        }
    }

    #[test]
    fn ess_sup_trivial_and_divergent_cases() {
        let one = p("1");
        let got = ess_sup_ratio(&one, &one, 0.0, 1.0, (0.5, 2.0), 64).unwrap();
        assert_relative_eq!(got.value(), 1.0);

        // K/r^alpha with alpha too large diverges at the origin
        let k = p("r^0.5");
        let got = ess_sup_ratio(&k, &one, 8.0, 0.0, (1e-12, 1.0), 512).unwrap();
        assert_eq!(got, EssSup::Divergent);

        // V vanishing with beta > 0 is divergent immediately
        let v0 = p("0");
        let got = ess_sup_ratio(&k, &v0, 0.0, 1.0, (0.5, 2.0), 64).unwrap();
        assert_eq!(got, EssSup::Divergent);
    }

    #[test]
    fn ess_sup_scaling_in_k() {
        let k = p("max(r^0.5, r^1.5)");
        let k3 = p("3 * max(r^0.5, r^1.5)");
        let v = p("1");
        let a = ess_sup_ratio(&k, &v, 0.5, 0.0, (1e-3, 1.0), 128).unwrap().value();
        let b = ess_sup_ratio(&k3, &v, 0.5, 0.0, (1e-3, 1.0), 128).unwrap().value();
        assert_relative_eq!(b, 3.0 * a);
    }

    #[test]
    fn hypothesis_checks_on_first_example() {
        let a = p("min(r^0.5, r^1.5)");
        let v = p("min(1, r^-1.5)");
        let k = p("max(r^0.5, r^1.5)");
        let rep = verify_hypotheses(&a, &v, &k, 4, 2.0, 2.0).unwrap();
        assert!(rep.all_ok(), "notes: {:?}", rep.notes);
    }

    #[test]
    fn hypothesis_check_flags_out_of_range_exponent() {
        // A = r^{p+1} violates a <= p
        let a = p("r^3");
        let v = p("1");
        let k = p("1");
        let rep = verify_hypotheses(&a, &v, &k, 4, 2.0, 2.0).unwrap();
        assert!(!rep.a_ok);
        assert!(rep.v_ok);
        assert!(rep.k_ok);
    }

    #[test]
    fn constants_are_locally_integrable() {
        let one = p("1");
        let rep = verify_hypotheses(&one, &one, &one, 3, 2.0, 1.5).unwrap();
        assert!(rep.v_ok);
        assert_relative_eq!(rep.v_local_integral, 1.5, epsilon = 1e-9);
    }

    #[test]
    fn s_must_exceed_one() {
        let one = p("1");
        assert!(verify_hypotheses(&one, &one, &one, 3, 2.0, 1.0).is_err());
    }
}
