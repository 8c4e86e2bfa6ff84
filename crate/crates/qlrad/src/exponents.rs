//! Exponent maps and admissibility windows.
//!
//! These are the closed-form maps that turn potential asymptotics into
//! admissible nonlinearity-growth windows: the threshold map
//! `alpha*(a, beta)`, the critical exponent map `q*(a, alpha, beta)`, the
//! limiting embedding exponents `p0`/`p_inf`, the window of exponents whose
//! small-ball embedding suprema vanish, the corresponding condition at
//! infinity, and the decay rates the vanishing obeys.
//!
//! Everything here is pure arithmetic. The maps are evaluated in
//! double-double precision internally (see `dd`) so that the algebraic
//! identities relating them survive verbatim near the boundary of the
//! parameter domain.

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::potential::{ess_sup_ratio, EssSup, PotentialExpr};
use serde::{Deserialize, Serialize};

/// Validated problem parameters.
///
/// `N >= 3` is the space dimension, `p in (1, N)` the quasilinear exponent,
/// `a0`/`a_inf` the power-law exponents of the gradient weight near zero and
/// infinity (both in `(p - N, p]`), `(alpha0, beta0)` and
/// `(alpha_inf, beta_inf)` the growth-comparison pairs for `K` against `V`
/// on `(0, R1)` and `(R2, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub n: u32,
    pub p: f64,
    pub a0: f64,
    pub a_inf: f64,
    pub alpha0: f64,
    pub beta0: f64,
    pub alpha_inf: f64,
    pub beta_inf: f64,
    pub r1: f64,
    pub r2: f64,
}

impl ProblemParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: u32,
        p: f64,
        a0: f64,
        a_inf: f64,
        alpha0: f64,
        beta0: f64,
        alpha_inf: f64,
        beta_inf: f64,
        r1: f64,
        r2: f64,
    ) -> Result<Self> {
        let params = ProblemParams {
            n,
            p,
            a0,
            a_inf,
            alpha0,
            beta0,
            alpha_inf,
            beta_inf,
            r1,
            r2,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let nf = self.n as f64;
        if self.n < 3 {
            return Err(Error::InvalidParams(format!("N must be >= 3, got {}", self.n)));
        }
        if !(self.p > 1.0 && self.p < nf) {
            return Err(Error::InvalidParams(format!(
                "p must lie in (1, N) = (1, {nf}), got {}",
                self.p
            )));
        }
        for (name, a) in [("a0", self.a0), ("a_inf", self.a_inf)] {
            if !(a > self.p - nf && a <= self.p) {
                return Err(Error::InvalidParams(format!(
                    "{name} must lie in (p - N, p] = ({}, {}], got {a}",
                    self.p - nf,
                    self.p
                )));
            }
        }
        for (name, b) in [("beta0", self.beta0), ("beta_inf", self.beta_inf)] {
            if !(0.0..=1.0).contains(&b) {
                return Err(Error::InvalidParams(format!("{name} must lie in [0,1], got {b}")));
            }
        }
        if !(self.r1 > 0.0 && self.r2 > self.r1) {
            return Err(Error::InvalidParams(format!(
                "radii must satisfy 0 < R1 < R2, got R1 = {}, R2 = {}",
                self.r1, self.r2
            )));
        }
        if !self.alpha0.is_finite() || !self.alpha_inf.is_finite() {
            return Err(Error::InvalidParams("alpha0 and alpha_inf must be finite".into()));
        }
        Ok(())
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }
}

fn alpha_star_dd(a: f64, beta: f64, p: f64, n: u32) -> Dd {
    let nf = n as f64;
    // first branch: p*beta - 1 - (p-1)/p * N - a*beta + a/p
    let b1 = Dd::prod(p, beta)
        .add_f64(-1.0)
        .sub(Dd::prod(p - 1.0, nf).div(Dd::from_f64(p)))
        .sub(Dd::prod(a, beta))
        .add(Dd::from_f64(a).div(Dd::from_f64(p)));
    // second branch: -(1 - beta) * N
    let b2 = Dd::prod(1.0 - beta, nf).neg();
    b1.max(b2)
}

fn q_star_dd(a: f64, alpha: Dd, beta: f64, p: f64, n: u32) -> Dd {
    let nf = n as f64;
    // numerator: alpha - p*beta + N + a*beta
    let num = alpha
        .sub(Dd::prod(p, beta))
        .add_f64(nf)
        .add(Dd::prod(a, beta));
    // q* = p * num / (N - p + a)
    let den = Dd::from_f64(nf).add_f64(-p).add_f64(a);
    num.mul_f64(p).div(den)
}

/// The threshold map `alpha*(a, beta)`.
///
/// Returns `max{ p*beta - 1 - (p-1)N/p - a*beta + a/p, -(1-beta)N }`; the
/// first branch is active for `beta <= 1/p`, the second for `beta >= 1/p`,
/// and the two agree at `beta = 1/p`.
pub fn alpha_star(a: f64, beta: f64, p: f64, n: u32) -> f64 {
    alpha_star_dd(a, beta, p, n).to_f64()
}

/// The critical exponent map `q*(a, alpha, beta) = p(alpha - p·beta + N + a·beta)/(N - p + a)`.
pub fn q_star(a: f64, alpha: f64, beta: f64, p: f64, n: u32) -> f64 {
    q_star_dd(a, Dd::from_f64(alpha), beta, p, n).to_f64()
}

/// Difference between the two branches of `alpha*` at given `beta`.
/// Identically zero at `beta = 1/p`; used by the verification suite.
pub fn alpha_star_branch_gap(a: f64, beta: f64, p: f64, n: u32) -> f64 {
    let nf = n as f64;
    let b1 = Dd::prod(p, beta)
        .add_f64(-1.0)
        .sub(Dd::prod(p - 1.0, nf).div(Dd::from_f64(p)))
        .sub(Dd::prod(a, beta))
        .add(Dd::from_f64(a).div(Dd::from_f64(p)));
    let b2 = Dd::prod(1.0 - beta, nf).neg();
    b1.sub(b2).to_f64()
}

/// Residual of the identity `q*(a, alpha*(a, beta), beta) = max{1, p*beta}`,
/// evaluated end to end in extended precision.
///
/// The identity is exact algebra; this audit helper returns the numerical
/// gap, which stays below 1e-12 across the whole admissible domain.
pub fn remark_identity_gap(a: f64, beta: f64, p: f64, n: u32) -> f64 {
    let alpha = alpha_star_dd(a, beta, p, n);
    let q = q_star_dd(a, alpha, beta, p, n);
    let rhs = Dd::prod(p, beta).max(Dd::from_f64(1.0));
    q.sub(rhs).to_f64()
}

/// Limiting embedding exponents `p0 = pN/(N + a0 - p)` and
/// `p_inf = pN/(N + a_inf - p)`; both are `>= p`.
pub fn sobolev_exponents(params: &ProblemParams) -> (f64, f64) {
    let nf = params.nf();
    let p0 = params.p * nf / (nf + params.a0 - params.p);
    let p_inf = params.p * nf / (nf + params.a_inf - params.p);
    (p0, p_inf)
}

/// Decay law `delta(q) = coefficient * (q_star - q)` of an embedding
/// supremum, with `coefficient = (N + a - p)/p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayLaw {
    pub coefficient: f64,
    pub q_star: f64,
}

impl DecayLaw {
    pub fn rate(&self, q: f64) -> f64 {
        self.coefficient * (self.q_star - q)
    }
}

/// Admissible exponent windows and decay laws for a parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentWindow {
    /// Open lower bound for `q1` (origin side), `max{1, p*beta0}`.
    pub q1_lo: f64,
    /// Open upper bound for `q1`, `q*(a0, alpha0, beta0)`.
    pub q1_hi: f64,
    /// Open lower bound for `q2` (infinity side),
    /// `max{1, p*beta_inf, q*(a_inf, alpha_inf, beta_inf)}`.
    pub q2_lo: f64,
    /// Decay law of the small-ball supremum, positive strictly inside the
    /// `q1` window.
    pub origin_decay: DecayLaw,
    /// Decay law of the exterior supremum, negative for `q2 > q2_lo`.
    pub infinity_decay: DecayLaw,
    /// Whether the `q1` window is nonempty, equivalently
    /// `alpha0 > alpha*(a0, beta0)`.
    pub feasible: bool,
}

/// Window of origin-side exponents: `(max{1, p*beta0}, q*(a0, alpha0, beta0))`.
///
/// The window is nonempty exactly when `alpha0 > alpha*(a0, beta0)`; an
/// empty window is a valid return, not an error.
pub fn window_at_origin(params: &ProblemParams) -> (f64, f64) {
    let lo = 1.0f64.max(params.p * params.beta0);
    let hi = q_star(params.a0, params.alpha0, params.beta0, params.p, params.n);
    (lo, hi)
}

/// Lower bound for infinity-side exponents:
/// `max{1, p*beta_inf, q*(a_inf, alpha_inf, beta_inf)}`. Any `q2` strictly
/// above it is admissible.
pub fn window_at_infinity(params: &ProblemParams) -> f64 {
    let q = q_star(
        params.a_inf,
        params.alpha_inf,
        params.beta_inf,
        params.p,
        params.n,
    );
    1.0f64.max(params.p * params.beta_inf).max(q)
}

/// Assemble the full window record.
pub fn exponent_window(params: &ProblemParams) -> ExponentWindow {
    let (q1_lo, q1_hi) = window_at_origin(params);
    let q2_lo = window_at_infinity(params);
    ExponentWindow {
        q1_lo,
        q1_hi,
        q2_lo,
        origin_decay: DecayLaw {
            coefficient: (params.nf() + params.a0 - params.p) / params.p,
            q_star: q1_hi,
        },
        infinity_decay: DecayLaw {
            coefficient: (params.nf() + params.a_inf - params.p) / params.p,
            q_star: q_star(
                params.a_inf,
                params.alpha_inf,
                params.beta_inf,
                params.p,
                params.n,
            ),
        },
        feasible: q1_lo < q1_hi,
    }
}

/// Proven decay rate of the small-ball supremum for `q1` strictly inside
/// the origin window: `delta = (N + a0 - p)/p * (q* - q1) > 0`.
pub fn decay_rate_origin(params: &ProblemParams, q1: f64) -> Result<f64> {
    let (lo, hi) = window_at_origin(params);
    if !(q1 > lo && q1 < hi) {
        return Err(Error::OutOfWindow(format!(
            "q1 = {q1} is not strictly inside ({lo}, {hi})"
        )));
    }
    Ok((params.nf() + params.a0 - params.p) / params.p * (hi - q1))
}

/// Proven decay rate of the exterior supremum for admissible `q2`:
/// `delta = (N + a_inf - p)/p * (q* - q2) < 0`.
pub fn decay_rate_infinity(params: &ProblemParams, q2: f64) -> Result<f64> {
    let lo = window_at_infinity(params);
    if !(q2 > lo) {
        return Err(Error::OutOfWindow(format!("q2 = {q2} must exceed {lo}")));
    }
    let q = q_star(
        params.a_inf,
        params.alpha_inf,
        params.beta_inf,
        params.p,
        params.n,
    );
    Ok((params.nf() + params.a_inf - params.p) / params.p * (q - q2))
}

/// Verdict of an admissibility check, with one entry per failed condition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Admissibility {
    pub admissible: bool,
    pub failures: Vec<String>,
}

/// Check a candidate pair `(q1, q2)` against both windows.
///
/// With `existence` set (the default used by the solver pipeline) the
/// stricter requirement `q1, q2 > p` of the existence theorem is enforced
/// on top of the embedding windows.
pub fn admissible_pair(params: &ProblemParams, q1: f64, q2: f64, existence: bool) -> Admissibility {
    let (lo, hi) = window_at_origin(params);
    let q2_lo = window_at_infinity(params);
    let mut failures = Vec::new();
    if !(q1 > lo) {
        failures.push(format!("q1 = {q1} must exceed max(1, p*beta0) = {lo}"));
    }
    if !(q1 < hi) {
        failures.push(format!("q1 = {q1} must be strictly below q* = {hi}"));
    }
    if !(q2 > q2_lo) {
        failures.push(format!(
            "q2 = {q2} must strictly exceed max(1, p*beta_inf, q*) = {q2_lo}"
        ));
    }
    if existence {
        if !(q1 > params.p) {
            failures.push(format!("existence requires q1 = {q1} > p = {}", params.p));
        }
        if !(q2 > params.p) {
            failures.push(format!("existence requires q2 = {q2} > p = {}", params.p));
        }
    }
    Admissibility {
        admissible: failures.is_empty(),
        failures,
    }
}

/// Coarse scan for the supremal origin-side `alpha` with
/// `K(r)/r^alpha` bounded near zero, at `beta = 0`.
///
/// Larger `alpha0` widens the `q1` window, so the best choice is the
/// largest exponent keeping the ratio bounded. The scan walks a 1/16-step
/// grid and judges boundedness by the log-log slope of the ratio toward the
/// endpoint (advisory; the hypothesis pair can always be supplied by hand).
pub fn best_alpha_origin(k: &PotentialExpr, r1: f64) -> Result<f64> {
    scan_alpha(k, r1, true)
}

/// Coarse scan for the infimal infinity-side `alpha` with
/// `K(r)/r^alpha` bounded beyond `r2`, at `beta = 0`. Smaller `alpha_inf`
/// lowers the `q2` threshold.
pub fn best_alpha_infinity(k: &PotentialExpr, r2: f64) -> Result<f64> {
    scan_alpha(k, r2, false)
}

fn scan_alpha(k: &PotentialExpr, edge: f64, origin_side: bool) -> Result<f64> {
    let step = 1.0 / 16.0;
    let grid: Vec<f64> = (-160..=160).map(|i| i as f64 * step).collect();
    let one = PotentialExpr::Const(1.0);
    let mut best: Option<f64> = None;
    for &alpha in &grid {
        let interval = if origin_side {
            (edge * 1e-6, edge)
        } else {
            (edge, edge * 1e4)
        };
        let bounded = match ess_sup_ratio(k, &one, alpha, 0.0, interval, 257)? {
            EssSup::Divergent => false,
            EssSup::Finite(_) => ratio_slope_bounded(k, alpha, interval, origin_side)?,
        };
        if bounded {
            best = Some(match best {
                None => alpha,
                Some(b) if origin_side => b.max(alpha),
                Some(b) => b.min(alpha),
            });
        }
    }
    best.ok_or_else(|| {
        Error::InvalidParams("no bounded alpha found in the scan range [-10, 10]".into())
    })
}

fn ratio_slope_bounded(
    k: &PotentialExpr,
    alpha: f64,
    interval: (f64, f64),
    origin_side: bool,
) -> Result<bool> {
    // Fit log(K/r^alpha) against log r on the decade next to the endpoint;
    // divergence toward the endpoint means a slope of the wrong sign.
    let (lo, hi) = interval;
    let window = if origin_side { (lo, lo * 10.0) } else { (hi / 10.0, hi) };
    let rs = crate::potential::geometric_samples(window.0, window.1, 33);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut mx = 0.0;
    let mut my = 0.0;
    let mut vals = Vec::with_capacity(rs.len());
    for &r in &rs {
        let ratio = k.eval(r)? / r.powf(alpha);
        if !(ratio > 0.0) || !ratio.is_finite() {
            return Ok(false);
        }
        vals.push((r.ln(), ratio.ln()));
        mx += r.ln();
        my += ratio.ln();
    }
    mx /= vals.len() as f64;
    my /= vals.len() as f64;
    for (x, y) in &vals {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let tol = 1.0 / 64.0;
    Ok(if origin_side { slope >= -tol } else { slope <= tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ex1_params(n: u32, p: f64) -> ProblemParams {
        ProblemParams::new(n, p, 1.5, 0.5, 0.5, 0.0, 1.5, 0.0, 1.0, 2.0).unwrap()
    }

    fn ex2_params(n: u32, p: f64) -> ProblemParams {
        ProblemParams::new(n, p, -2.0, -1.0, 0.0, 0.0, 0.0, 0.5, 1.0, 2.0).unwrap()
    }

    #[test]
    fn alpha_star_values() {
        assert_relative_eq!(alpha_star(0.0, 0.0, 2.0, 4), -3.0);
        // beta = 1 always gives 0
        for a in [-1.0, 0.0, 1.5] {
            assert_relative_eq!(alpha_star(a, 1.0, 2.0, 4), 0.0);
        }
        // at beta = 1/p both branches agree with -(1 - 1/p) N
        assert_relative_eq!(alpha_star(1.0, 0.5, 2.0, 4), -2.0, epsilon = 1e-14);
    }

    #[test]
    fn q_star_values() {
        assert_relative_eq!(q_star(0.0, 0.0, 0.0, 2.0, 3), 6.0);
        assert_relative_eq!(q_star(1.5, 0.5, 0.0, 2.0, 4), 18.0 / 7.0, epsilon = 1e-14);
    }

    #[test]
    fn sobolev_exponent_values() {
        let p = ProblemParams::new(3, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 2.0).unwrap();
        let (p0, p_inf) = sobolev_exponents(&p);
        assert_relative_eq!(p0, 6.0);
        assert_relative_eq!(p_inf, 6.0);

        let q = ex1_params(4, 2.0);
        assert_relative_eq!(sobolev_exponents(&q).0, 16.0 / 7.0, epsilon = 1e-14);

        // boundary a = p collapses to p
        let b = ProblemParams::new(4, 2.0, 2.0, 2.0, 0.0, 0.0, 0.0, 0.0, 1.0, 2.0).unwrap();
        assert_relative_eq!(sobolev_exponents(&b).0, 2.0);
    }

    #[test]
    fn origin_window_examples() {
        let (lo, hi) = window_at_origin(&ex1_params(4, 2.0));
        assert_relative_eq!(lo, 1.0);
        assert_relative_eq!(hi, 18.0 / 7.0, epsilon = 1e-14);

        let (lo, hi) = window_at_origin(&ex2_params(4, 1.5));
        assert_relative_eq!(lo, 1.0);
        assert_relative_eq!(hi, 12.0, epsilon = 1e-12);

        // beta0 = 1 with alpha0 = alpha* degenerates to lo = hi = p
        let a0 = 1.5;
        let astar = alpha_star(a0, 1.0, 2.0, 4);
        let p = ProblemParams::new(4, 2.0, a0, 0.5, astar, 1.0, 0.0, 0.0, 1.0, 2.0).unwrap();
        let (lo, hi) = window_at_origin(&p);
        assert_relative_eq!(lo, 2.0);
        assert_relative_eq!(hi, 2.0, epsilon = 1e-13);
        assert!(!exponent_window(&p).feasible);
    }

    #[test]
    fn infinity_window_examples() {
        assert_relative_eq!(
            window_at_infinity(&ex1_params(4, 2.0)),
            22.0 / 5.0,
            epsilon = 1e-14
        );

        // alpha_inf at the threshold pushes q* to at most 1
        let a = 0.5;
        let astar = alpha_star(a, 0.0, 2.0, 4);
        let p = ProblemParams::new(4, 2.0, 1.5, a, 0.5, 0.0, astar, 0.0, 1.0, 2.0).unwrap();
        assert_relative_eq!(window_at_infinity(&p), 1.0, epsilon = 1e-13);

        // second example: the definition gives p(2N - p - 1)/(2(N - p - 1))
        let q = window_at_infinity(&ex2_params(4, 1.5));
        let n = 4.0;
        let pp = 1.5;
        assert_relative_eq!(
            q,
            pp * (2.0 * n - pp - 1.0) / (2.0 * (n - pp - 1.0)),
            epsilon = 1e-14
        );
        assert_relative_eq!(q, 2.75, epsilon = 1e-14);
    }

    #[test]
    fn decay_rates() {
        let p = ex1_params(4, 2.0);
        assert_relative_eq!(
            decay_rate_origin(&p, 2.2).unwrap(),
            0.65,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            decay_rate_infinity(&p, 5.0).unwrap(),
            -0.75,
            epsilon = 1e-12
        );

        // vanishing at the window edge
        let (_, hi) = window_at_origin(&p);
        let d = decay_rate_origin(&p, hi - 1e-9).unwrap();
        assert!(d > 0.0 && d < 1e-8);
        assert!(decay_rate_origin(&p, hi).is_err());

        let unweighted =
            ProblemParams::new(3, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 2.0).unwrap();
        assert_relative_eq!(decay_rate_origin(&unweighted, 2.0).unwrap(), 2.0);
        // infinity side needs q2 above q2_lo; with beta_inf = 1 the window
        // opens at p and the rate formula matches direct substitution
        let massy = ProblemParams::new(3, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 2.0).unwrap();
        assert_relative_eq!(decay_rate_infinity(&massy, 8.0).unwrap(), 0.5 * (2.0 - 8.0));
    }

    #[test]
    fn admissible_pairs() {
        let p = ex1_params(4, 2.0);
        assert!(admissible_pair(&p, 2.3, 4.5, true).admissible);

        let (_, hi) = window_at_origin(&p);
        let at_edge = admissible_pair(&p, hi, 10.0, true);
        assert!(!at_edge.admissible);
        assert_eq!(at_edge.failures.len(), 1);

        let q = ex2_params(4, 1.5);
        assert!(admissible_pair(&q, 2.0, 4.0, true).admissible);

        // theorem mode admits q1 <= p that existence mode rejects
        let thm = admissible_pair(&q, 1.2, 4.0, false);
        assert!(thm.admissible);
        let exi = admissible_pair(&q, 1.2, 4.0, true);
        assert!(!exi.admissible);
    }

    #[test]
    fn window_width_vanishes_at_threshold() {
        let a0 = 1.5;
        let beta0 = 0.25;
        let astar = alpha_star(a0, beta0, 2.0, 4);
        let mut widths = Vec::new();
        for eps in [1e-1, 1e-3, 1e-6] {
            let p = ProblemParams::new(4, 2.0, a0, 0.5, astar + eps, beta0, 1.5, 0.0, 1.0, 2.0)
                .unwrap();
            let (lo, hi) = window_at_origin(&p);
            assert!(hi > lo);
            widths.push(hi - lo);
        }
        assert!(widths[0] > widths[1] && widths[1] > widths[2]);
        assert!(widths[2] < 1e-4);
    }

    #[test]
    fn alpha_scan_recovers_example_pairs() {
        let k = PotentialExpr::parse("max(r^0.5, r^1.5)").unwrap();
        let a0 = best_alpha_origin(&k, 1.0).unwrap();
        assert_relative_eq!(a0, 0.5, epsilon = 1e-12);
        let a_inf = best_alpha_infinity(&k, 1.0).unwrap();
        assert_relative_eq!(a_inf, 1.5, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn branch_continuity_at_kink(
            n in 3u32..=8,
            pt in 0.0f64..1.0,
            at in 0.0f64..1.0,
        ) {
            let p = 1.0 + (n as f64 - 1.0) * pt.max(1e-9);
            let p = p.min(n as f64 - 1e-9);
            let a = (p - n as f64) + n as f64 * at.max(1e-12);
            let a = a.min(p);
            let gap = alpha_star_branch_gap(a, 1.0 / p, p, n);
            prop_assert!(gap.abs() <= 1e-12, "gap {} at a={} p={} n={}", gap, a, p, n);
        }

        #[test]
        fn identity_q_star_at_alpha_star(
            n in 3u32..=8,
            pt in 0.0f64..1.0,
            at in 0.0f64..1.0,
            beta in 0.0f64..=1.0,
        ) {
            let p = (1.0 + (n as f64 - 1.0) * pt.max(1e-9)).min(n as f64 - 1e-9);
            let a = ((p - n as f64) + n as f64 * at.max(1e-12)).min(p);
            let gap = remark_identity_gap(a, beta, p, n);
            prop_assert!(gap.abs() <= 1e-12, "gap {} at a={} p={} n={} beta={}", gap, a, p, n, beta);
        }

        #[test]
        fn q_star_strictly_increasing_in_alpha(
            n in 3u32..=8,
            pt in 0.05f64..0.95,
            at in 0.05f64..1.0,
            beta in 0.0f64..=1.0,
            alpha in -10.0f64..10.0,
            dalpha in 0.01f64..5.0,
        ) {
            let p = 1.0 + (n as f64 - 1.0) * pt;
            let a = ((p - n as f64) + n as f64 * at).min(p);
            let q1 = q_star(a, alpha, beta, p, n);
            let q2 = q_star(a, alpha + dalpha, beta, p, n);
            prop_assert!(q2 > q1);
        }

        #[test]
        fn decay_signs_on_admissible_samples(
            n in 3u32..=8,
            pt in 0.05f64..0.95,
            t in 0.01f64..0.99,
        ) {
            let p = 1.0 + (n as f64 - 1.0) * pt;
            // fixed benign hypothesis pair
            let a = (p - 0.5).max(p - n as f64 + 0.25).min(p);
            let params = ProblemParams::new(n, p, a, a, 1.0, 0.0, 1.0, 0.0, 1.0, 2.0).unwrap();
            let (lo, hi) = window_at_origin(&params);
            prop_assume!(lo < hi);
            let q1 = lo + t * (hi - lo);
            prop_assume!(q1 > lo && q1 < hi);
            prop_assert!(decay_rate_origin(&params, q1).unwrap() > 0.0);
            let q2_lo = window_at_infinity(&params);
            let q2 = q2_lo + t * 10.0 + 1e-9;
            prop_assert!(decay_rate_infinity(&params, q2).unwrap() < 0.0);
        }
    }
}
