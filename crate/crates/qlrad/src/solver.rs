//! Mountain-pass solver for the discrete energy functional
//! `I(u) = (1/p) ||u||^p - int K F(u) dx`.
//!
//! The pipeline mirrors the variational existence argument: certify the
//! mountain-pass geometry (a positive ridge at radius `rho` and a far point
//! with negative energy), walk the segment path from zero to the far point,
//! descend from the path maximum, and polish on the Nehari set
//! `||u||^p = int K f(u) u dx` until the weak-form residual meets the
//! tolerance. The nonlinearity is truncated to `f(t) = 0` for `t < 0`, so
//! converged critical points are nonnegative.

use crate::assembly::EnergyForms;
use crate::error::{Error, Result};
use crate::exponents::ProblemParams;
use crate::grid::{bump, GridFunction, RadialGrid};
use crate::potential::PotentialExpr;
use crate::probe::{annulus_bound, AscentConfig, Prober};
use crate::quad::adaptive_simpson;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Supported double-power model nonlinearities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum NonlinearityKind {
    /// `f(t) = min{ t^{q1-1}, t^{q2-1} }` for `t >= 0`.
    DoublePowerMin,
    /// `f(t) = t^{q2-1} / (1 + t^{q2-q1})` for `t >= 0`.
    SmoothQuotient,
    /// `f(t) = t^{q-1}` with `q = q1 = q2`.
    PurePower,
}

/// A superlinear nonlinearity with double-power growth `q1 <= q2` and
/// superlinearity constant `theta = q1`. All kinds vanish for `t < 0`.
#[derive(Debug, Clone)]
pub struct Nonlinearity {
    pub kind: NonlinearityKind,
    pub q1: f64,
    pub q2: f64,
    /// Anchor table for the quotient kind: `F` accumulated at geometric
    /// nodes, so each evaluation only integrates a short tail.
    anchors: Vec<(f64, f64)>,
}

impl Nonlinearity {
    pub fn new(kind: NonlinearityKind, q1: f64, q2: f64) -> Result<Self> {
        if !(q1 > 1.0 && q2 >= q1) {
            return Err(Error::InvalidParams(format!(
                "nonlinearity needs 1 < q1 <= q2, got q1 = {q1}, q2 = {q2}"
            )));
        }
        if kind == NonlinearityKind::PurePower && q1 != q2 {
            return Err(Error::InvalidParams(format!(
                "pure power uses q1 = q2, got {q1} and {q2}"
            )));
        }
        let mut nl = Nonlinearity {
            kind,
            q1,
            q2,
            anchors: Vec::new(),
        };
        if kind == NonlinearityKind::SmoothQuotient {
            nl.build_anchors();
        }
        Ok(nl)
    }

    pub fn double_power_min(q1: f64, q2: f64) -> Result<Self> {
        Self::new(NonlinearityKind::DoublePowerMin, q1, q2)
    }

    pub fn smooth_quotient(q1: f64, q2: f64) -> Result<Self> {
        Self::new(NonlinearityKind::SmoothQuotient, q1, q2)
    }

    pub fn pure_power(q: f64) -> Result<Self> {
        Self::new(NonlinearityKind::PurePower, q, q)
    }

    /// The superlinearity constant of hypothesis `0 <= theta F(t) <= f(t) t`.
    pub fn theta(&self) -> f64 {
        self.q1
    }

    /// Pointwise nonlinearity `f(t)`; zero for `t < 0`.
    pub fn f(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self.kind {
            NonlinearityKind::PurePower => t.powf(self.q1 - 1.0),
            NonlinearityKind::DoublePowerMin => t.powf(self.q1 - 1.0).min(t.powf(self.q2 - 1.0)),
            NonlinearityKind::SmoothQuotient => {
                t.powf(self.q2 - 1.0) / (1.0 + t.powf(self.q2 - self.q1))
            }
        }
    }

    /// Derivative `f'(t)` for `t > 0` (used by the Nehari projection).
    fn f_prime(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self.kind {
            NonlinearityKind::PurePower => (self.q1 - 1.0) * t.powf(self.q1 - 2.0),
            NonlinearityKind::DoublePowerMin => {
                if t < 1.0 {
                    (self.q2 - 1.0) * t.powf(self.q2 - 2.0)
                } else {
                    (self.q1 - 1.0) * t.powf(self.q1 - 2.0)
                }
            }
            NonlinearityKind::SmoothQuotient => {
                let d = self.q2 - self.q1;
                let den = 1.0 + t.powf(d);
                ((self.q2 - 1.0) * t.powf(self.q2 - 2.0) * den
                    - t.powf(self.q2 - 1.0) * d * t.powf(d - 1.0))
                    / (den * den)
            }
        }
    }

    /// Antiderivative `F(t) = int_0^t f`; zero for `t <= 0`.
    ///
    /// Closed forms for the pure-power and min kinds; cached-anchor
    /// quadrature for the quotient kind.
    pub fn big_f(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self.kind {
            NonlinearityKind::PurePower => t.powf(self.q1) / self.q1,
            NonlinearityKind::DoublePowerMin => {
                if t <= 1.0 {
                    t.powf(self.q2) / self.q2
                } else {
                    1.0 / self.q2 + (t.powf(self.q1) - 1.0) / self.q1
                }
            }
            NonlinearityKind::SmoothQuotient => {
                // nearest anchor at or below t
                let idx = self
                    .anchors
                    .partition_point(|(a, _)| *a <= t)
                    .checked_sub(1);
                match idx {
                    None => adaptive_simpson(&|s| self.f(s), 0.0, t, 1e-14),
                    Some(i) => {
                        let (a, fa) = self.anchors[i];
                        fa + adaptive_simpson(&|s| self.f(s), a, t, 1e-13 * fa.max(1.0))
                    }
                }
            }
        }
    }

    fn build_anchors(&mut self) {
        let mut anchors = Vec::with_capacity(140);
        let mut acc = 0.0f64;
        let mut prev = 0.0;
        let mut t = 1e-9;
        while t <= 1.2e9 {
            acc += adaptive_simpson(&|s| self.f(s), prev, t, 1e-14 * acc.max(1e-30));
            anchors.push((t, acc));
            prev = t;
            t *= 10.0f64.powf(0.25);
        }
        self.anchors = anchors;
    }
}

/// Controls for [`MountainPass::solve`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub residual_tol: f64,
    /// Sample count of the segment path from zero to the far point.
    pub path_resolution: usize,
    pub seed: u64,
    /// Peak value of the far-point seed bump.
    pub initial_amplitude: f64,
    /// Ascent controls for the geometry probes.
    pub ascent: AscentConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 20_000,
            residual_tol: 1e-6,
            path_resolution: 32,
            seed: 0,
            initial_amplitude: 2.0,
            ascent: AscentConfig::default(),
        }
    }
}

/// Mountain-pass geometry certificate.
#[derive(Debug, Clone)]
pub struct MpGeometry {
    /// Ridge radius: `inf { I(u) : ||u|| = rho } > 0` holds for the
    /// measured constants.
    pub rho: f64,
    /// Value of the ridge lower bound `g(rho) = rho^p/p - c1 rho^{q1} - c2 rho^{q2}`.
    pub ridge_value: f64,
    /// A point beyond the ridge with negative energy.
    pub far_point: GridFunction,
    pub far_energy: f64,
    pub far_norm: f64,
    pub c1: f64,
    pub c2: f64,
}

/// Certified solver output.
#[derive(Debug, Clone)]
pub struct SolutionReport {
    pub profile: GridFunction,
    pub energy: f64,
    /// Max-norm of the discrete weak-form residual.
    pub residual_norm: f64,
    /// `| ||u||^p - int K f(u) u dx |`.
    pub nehari_gap: f64,
    pub nonnegative: bool,
    pub rho: f64,
    /// Energy norm of the solution.
    pub norm: f64,
    /// Fitted slope of `log |u|` against `log r` near the inner edge,
    /// against the proven pointwise bound exponent (informational).
    pub decay_fit_origin: f64,
    /// Same near the outer edge.
    pub decay_fit_infinity: f64,
    /// False when the residual tolerance was not finite or not certified.
    pub verified: bool,
    pub iterations: usize,
}

/// Solver context: one potential triple, one nonlinearity, one grid.
pub struct MountainPass {
    forms: Arc<EnergyForms>,
    nl: Nonlinearity,
    params: ProblemParams,
    k_expr: PotentialExpr,
    s: f64,
}

impl MountainPass {
    pub fn new(
        grid: Arc<RadialGrid>,
        a: &PotentialExpr,
        v: &PotentialExpr,
        k: &PotentialExpr,
        nl: Nonlinearity,
        params: ProblemParams,
        s: f64,
    ) -> Result<Self> {
        params.validate()?;
        if !(nl.q1 > params.p) {
            return Err(Error::InvalidParams(format!(
                "superlinearity requires q1 = {} > p = {}",
                nl.q1, params.p
            )));
        }
        Ok(MountainPass {
            forms: Arc::new(EnergyForms::new(grid, a, v, k)?),
            nl,
            params,
            k_expr: k.clone(),
            s,
        })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.forms.grid
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nl
    }

    /// Discrete energy `I(u) = (1/p)||u||^p - int K F(u) dx`.
    pub fn energy(&self, u: &GridFunction) -> f64 {
        self.energy_vec(u.values(), 0.0)
    }

    /// Discrete weak-form residual: the exact nodal derivative of the
    /// discrete energy.
    pub fn gradient(&self, u: &GridFunction) -> GridFunction {
        let mut g = vec![0.0; u.values().len()];
        self.gradient_vec(u.values(), 0.0, &mut g);
        GridFunction::new(self.forms.grid.clone(), g).expect("gradient values are finite")
    }

    fn energy_vec(&self, u: &[f64], eps: f64) -> f64 {
        let p = self.params.p;
        self.forms.norm_energy_reg(u, p, eps) - self.forms.k_integral(u, |t| self.nl.big_f(t))
    }

    fn gradient_vec(&self, u: &[f64], eps: f64, out: &mut [f64]) {
        out.fill(0.0);
        self.forms.add_norm_gradient(u, self.params.p, eps, out);
        for i in 0..u.len() {
            out[i] -= self.forms.wq[i] * self.forms.k_at[i] * self.nl.f(u[i]);
        }
    }

    fn norm(&self, u: &[f64]) -> f64 {
        self.forms.norm_p(u, self.params.p).powf(1.0 / self.params.p)
    }

    /// `||u||^p - int K f(u) u dx`, the Nehari defect.
    fn nehari_defect(&self, u: &[f64]) -> f64 {
        self.forms.norm_p(u, self.params.p) - self.forms.k_integral_pair(u, |t| self.nl.f(t) * t)
    }

    /// Scale factor `t > 0` with `t u` on the Nehari set. The defect
    /// `t^p ||u||^p - int K f(tu) tu` is positive for small `t` and
    /// eventually negative since `f(t) t / t^p` is nondecreasing and
    /// unbounded, so the zero is unique; dyadic bracketing plus bisection
    /// with Newton acceleration finds it. `None` if the function never
    /// couples to `K f` (for instance when it is nonpositive everywhere).
    fn nehari_scale(&self, u: &[f64]) -> Option<f64> {
        self.nehari_scale_hint(u, 1.0)
    }

    fn nehari_scale_hint(&self, u: &[f64], hint: f64) -> Option<f64> {
        let p = self.params.p;
        let norm_p = self.forms.norm_p(u, p);
        if !(norm_p > 0.0) || !norm_p.is_finite() {
            return None;
        }
        // pure power factors the scale out of the coupling integral
        if self.nl.kind == NonlinearityKind::PurePower {
            let q = self.nl.q1;
            let b = self.forms.k_integral_pair(u, |ui| self.nl.f(ui) * ui);
            if !(b > 0.0) {
                return None;
            }
            return Some((norm_p / b).powf(1.0 / (q - p)));
        }
        let g = |t: f64| -> f64 {
            t.powf(p) * norm_p
                - self
                    .forms
                    .k_integral_pair(u, |ui| self.nl.f(t * ui) * t * ui)
        };
        // bracket around the hint (during descent the scale moves slowly)
        let hint = if hint.is_finite() && hint > 0.0 { hint } else { 1.0 };
        let (mut lo, mut hi);
        if g(hint) > 0.0 {
            lo = hint;
            hi = 2.0 * hint;
            let mut steps = 0;
            while g(hi) > 0.0 {
                lo = hi;
                hi *= 2.0;
                steps += 1;
                if steps > 120 {
                    return None;
                }
            }
        } else {
            hi = hint;
            lo = 0.5 * hint;
            let mut steps = 0;
            while g(lo) < 0.0 {
                hi = lo;
                lo *= 0.5;
                steps += 1;
                if steps > 120 {
                    return None;
                }
            }
        }
        let mut t = 0.5 * (lo + hi);
        for _ in 0..60 {
            let gt = g(t);
            if gt > 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let dg = p * t.powf(p - 1.0) * norm_p
                - self.forms.k_integral_pair(u, |ui| {
                    let s = t * ui;
                    self.nl.f_prime(s) * s * ui + self.nl.f(s) * ui
                });
            let tn = if dg != 0.0 { t - gt / dg } else { t };
            t = if tn > lo && tn < hi { tn } else { 0.5 * (lo + hi) };
            if (hi - lo) < 1e-14 * t.max(1e-300) {
                break;
            }
        }
        Some(t)
    }

    /// Static diagonal preconditioner (quadratic-case stiffness plus mass)
    /// equalizing the scale spread of the graded grid.
    fn preconditioner(&self) -> Vec<f64> {
        let n = self.forms.len();
        let mut p = vec![0.0; n];
        for i in 0..n {
            p[i] = self.forms.wq[i] * (1.0 + self.forms.v_at[i]);
        }
        for i in 0..n - 1 {
            let c = self.forms.seg_weight[i] / (self.forms.seg_len[i] * self.forms.seg_len[i]);
            p[i] += c;
            p[i + 1] += c;
        }
        p[n - 1] += self.forms.seg_weight[n - 1]
            / (self.forms.seg_len[n - 1] * self.forms.seg_len[n - 1]);
        for v in p.iter_mut() {
            *v = v.max(f64::MIN_POSITIVE);
        }
        p
    }

    /// Certify the mountain-pass geometry: measure the ridge constants from
    /// probe estimates, maximize the ridge lower bound, and scan a dyadic
    /// ladder for a far point with negative energy beyond the ridge.
    pub fn mp_geometry(&self, cfg: &SolverConfig) -> Result<MpGeometry> {
        let p = self.params.p;
        let (q1, q2) = (self.nl.q1, self.nl.q2);
        let theta = self.nl.theta();
        let prober = Prober::from_forms(self.forms.clone(), p);

        let s0 = prober.estimate_s0(q1, self.params.r1, &cfg.ascent)?;
        let s_inf = prober.estimate_sinf(q2, self.params.r2, &cfg.ascent)?;
        let ann = annulus_bound(
            &prober,
            self.params.r1,
            self.params.r2,
            q1,
            self.s,
            &self.k_expr,
            &self.params,
        )?;
        // middle-annulus constant: pointwise-exterior bound integrated in
        // L^p over the annulus closes the interpolation inequality
        let c_emb = self.annulus_embedding_constant()?;
        let c_ann = ann.c_tilde * ann.k_norm_s * c_emb.powf(ann.l);
        let c1 = (s0.value + c_ann) / theta;
        let c2 = s_inf.value / theta;

        // maximize g(rho) = rho^p/p - c1 rho^{q1} - c2 rho^{q2} on a log grid
        let g = |rho: f64| rho.powf(p) / p - c1 * rho.powf(q1) - c2 * rho.powf(q2);
        let mut best_rho = 0.0;
        let mut best_val = f64::NEG_INFINITY;
        for i in 0..=4800 {
            let rho = 10f64.powf(-12.0 + i as f64 * 0.005);
            let v = g(rho);
            if v > best_val {
                best_val = v;
                best_rho = rho;
            }
        }
        if !(best_val > 0.0) {
            return Err(Error::NonConvergence {
                message: "mountain-pass ridge is not positive for the measured constants".into(),
                best_residual: best_val,
            });
        }

        // far point: scale a fixed bump until the energy goes negative
        let far_seed: Vec<f64> = self
            .forms
            .grid
            .nodes()
            .iter()
            .map(|&r| bump(r, 0.5, 2.0, cfg.initial_amplitude))
            .collect();
        let mut lambda = 1.0;
        let mut far = None;
        while lambda <= 1e6 {
            let cand: Vec<f64> = far_seed.iter().map(|&x| lambda * x).collect();
            let e = self.energy_vec(&cand, 0.0);
            if e < 0.0 && self.norm(&cand) > best_rho {
                far = Some((cand, e));
                break;
            }
            lambda *= 2.0;
        }
        let (far_vec, far_energy) = far.ok_or_else(|| Error::NonConvergence {
            message: "no negative-energy far point below the scale cap 1e6; the problem looks mis-specified"
                .into(),
            best_residual: f64::NAN,
        })?;
        let far_norm = self.norm(&far_vec);
        Ok(MpGeometry {
            rho: best_rho,
            ridge_value: best_val,
            far_point: GridFunction::new(self.forms.grid.clone(), far_vec)?,
            far_energy,
            far_norm,
            c1,
            c2,
        })
    }

    /// `int_{R1<|x|<R2} |u|^p dx <= C ||u||^p` with the exterior pointwise
    /// constant; the closing piece of the middle-annulus estimate.
    fn annulus_embedding_constant(&self) -> Result<f64> {
        let p = self.params.p;
        let nf = self.params.n as f64;
        let omega = self.forms.grid.omega_n();
        let mut c_inf = f64::INFINITY;
        for (i, &r) in self.forms.grid.nodes().iter().enumerate() {
            if r >= self.params.r1 {
                c_inf = c_inf.min(self.forms.a_at[i] / r.powf(self.params.a_inf));
            }
        }
        let m = omega.powf(-1.0 / p)
            * c_inf.powf(-1.0 / p)
            * ((p - 1.0) / (nf + self.params.a_inf - p)).powf((p - 1.0) / p);
        let nu = (nf + self.params.a_inf - p) / p;
        // omega int_{R1}^{R2} r^{N-1-p nu} dr in closed form
        let e = nf - p * nu;
        let integral = if e.abs() < 1e-12 {
            (self.params.r2 / self.params.r1).ln()
        } else {
            (self.params.r2.powf(e) - self.params.r1.powf(e)) / e
        };
        Ok(m.powf(p) * omega * integral)
    }

    /// Run the full mountain-pass pipeline.
    pub fn solve(&self, cfg: &SolverConfig) -> Result<SolutionReport> {
        let geometry = self.mp_geometry(cfg)?;
        self.solve_with_geometry(cfg, &geometry)
    }

    /// As [`solve`](Self::solve) with a precomputed geometry certificate.
    pub fn solve_with_geometry(
        &self,
        cfg: &SolverConfig,
        geometry: &MpGeometry,
    ) -> Result<SolutionReport> {
        let m = cfg.path_resolution.max(8);
        let far = geometry.far_point.values();
        let eps = if self.params.p < 2.0 { 1e-10 } else { 0.0 };

        let mut best: Option<(Vec<f64>, f64, usize)> = None; // (u, energy, iterations)
        let mut rng_state = cfg.seed;
        for restart in 0..3 {
            // segment path 0 -> far, with a small seeded perturbation on
            // restarts; locate the energy maximum along it
            let mut path_max: Option<(Vec<f64>, f64)> = None;
            for i in 1..=m {
                let lam = i as f64 / m as f64;
                let mut point: Vec<f64> = far.iter().map(|&x| lam * x).collect();
                if restart > 0 {
                    for (j, v) in point.iter_mut().enumerate() {
                        // deterministic low-amplitude jitter, nonnegative
                        rng_state = rng_state
                            .wrapping_mul(6364136223846793005)
                            .wrapping_add(1442695040888963407 + j as u64);
                        let x = ((rng_state >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
                        *v = (*v * (1.0 + 0.05 * x)).max(0.0);
                    }
                }
                let e = self.energy_vec(&point, eps);
                if path_max.as_ref().map_or(true, |(_, pe)| e > *pe) {
                    path_max = Some((point, e));
                }
            }
            let (start, _) = path_max.expect("path has at least one point");

            // global phase: ride the Nehari set until the iterate sits in
            // the Newton basin, then let Newton finish; if Newton stalls,
            // hand back to the descent with a tighter exit
            let coarse_exit = cfg.residual_tol.max(1e-12).sqrt();
            let coarse = SolverConfig {
                max_iterations: cfg.max_iterations.min(1500),
                ..cfg.clone()
            };
            let (u, iters) = self.descend(start, &coarse, eps, coarse_exit);
            debug_state(self, "descend", &u);
            let (mut u, mut newton_iters) = self.newton_polish(u, cfg);
            debug_state(self, "newton", &u);
            if self.residual_norm(&u, 0.0) > cfg.residual_tol {
                let (u2, i2) = self.descend(u, cfg, eps, 0.25 * cfg.residual_tol);
                debug_state(self, "descend2", &u2);
                let (u3, i3) = self.newton_polish(u2, cfg);
                debug_state(self, "newton2", &u3);
                u = u3;
                newton_iters += i2 + i3;
            }
            let e = self.energy_vec(&u, 0.0);
            if best.as_ref().map_or(true, |(_, be, _)| {
                // prefer converged candidates at the lowest positive level
                e > 0.0 && (*be <= 0.0 || e < *be)
            }) {
                best = Some((u, e, iters + newton_iters));
            }
            if let Some((bu, be, _)) = &best {
                let res = self.residual_norm(bu, 0.0);
                if *be > 0.0 && res <= cfg.residual_tol {
                    break;
                }
            }
        }
        let (mut u, _, iterations) = best.expect("at least one restart ran");

        // nonnegativity clamp and a final polish at the clamped point
        let mut clamp_hit = false;
        for v in u.iter_mut() {
            if *v < 0.0 {
                if *v < -1e-12 {
                    clamp_hit = true;
                }
                *v = 0.0;
            }
        }
        let (u, extra_iters) = self.newton_polish(u, cfg);
        let iterations = iterations + extra_iters;

        let residual_norm = self.residual_norm(&u, 0.0);
        let energy = self.energy_vec(&u, 0.0);
        let nehari_gap = self.nehari_defect(&u).abs();
        let norm = self.norm(&u);
        let nonnegative = u.iter().all(|&v| v >= 0.0) && !clamp_hit;

        let verified = cfg.residual_tol.is_finite()
            && residual_norm <= cfg.residual_tol
            && energy > 0.0
            && nehari_gap <= cfg.residual_tol * norm.powf(self.params.p).max(f64::MIN_POSITIVE)
            && nonnegative
            && norm > 0.0;
        if cfg.residual_tol.is_finite() && !verified {
            return Err(Error::NonConvergence {
                message: format!(
                    "mountain-pass iteration stalled (energy {energy:.6e}, gap {nehari_gap:.3e})"
                ),
                best_residual: residual_norm,
            });
        }

        let (decay_fit_origin, decay_fit_infinity) = self.decay_fits(&u);
        Ok(SolutionReport {
            profile: GridFunction::new(self.forms.grid.clone(), u)?,
            energy,
            residual_norm,
            nehari_gap,
            nonnegative,
            rho: geometry.rho,
            norm,
            decay_fit_origin,
            decay_fit_infinity,
            verified,
            iterations,
        })
    }

    /// Nehari-constrained energy descent: every iterate is rescaled onto
    /// the Nehari set, where the mountain-pass level is the minimum of the
    /// energy, then moved along the preconditioned negative gradient with
    /// backtracking. The multiplier vanishes at the constrained minimum,
    /// so the unconstrained weak-form residual is driven to zero.
    fn descend(
        &self,
        mut u: Vec<f64>,
        cfg: &SolverConfig,
        eps: f64,
        exit_tol: f64,
    ) -> (Vec<f64>, usize) {
        let n = u.len();
        let precond = self.preconditioner();
        let mut g = vec![0.0; n];
        let mut dir = vec![0.0; n];
        let mut dir_prev = vec![0.0; n];
        let mut u_prev = vec![0.0; n];
        let mut have_prev = false;
        let mut step = 0.0f64;
        let mut t_hint = 1.0;
        let mut iters = 0;

        match self.nehari_scale_hint(&u, t_hint) {
            Some(t) => {
                for v in u.iter_mut() {
                    *v *= t;
                }
            }
            None => return (u, 0),
        }
        let mut energy = self.energy_vec(&u, eps);

        for k in 0..cfg.max_iterations {
            iters = k + 1;
            self.gradient_vec(&u, eps, &mut g);
            let gmax = g.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
            if gmax <= exit_tol {
                break;
            }
            for i in 0..n {
                dir[i] = g[i] / precond[i];
            }

            if have_prev {
                let mut ss = 0.0;
                let mut sy = 0.0;
                for i in 0..n {
                    let s = u[i] - u_prev[i];
                    let y = dir[i] - dir_prev[i];
                    ss += s * s;
                    sy += s * y;
                }
                if sy > 0.0 && ss > 0.0 {
                    step = ss / sy;
                }
            }
            let dmax = dir.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
            if !(step > 0.0) || !step.is_finite() {
                step = 1e-3 * u.iter().fold(0.0f64, |m, &x| m.max(x.abs())).max(1e-6) / dmax;
            }

            u_prev.copy_from_slice(&u);
            dir_prev.copy_from_slice(&dir);
            have_prev = true;

            let mut eta = step;
            let mut accepted = false;
            for _ in 0..60 {
                let mut cand: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| a - eta * b).collect();
                if let Some(t) = self.nehari_scale_hint(&cand, t_hint) {
                    for v in cand.iter_mut() {
                        *v *= t;
                    }
                    let ce = self.energy_vec(&cand, eps);
                    if ce < energy {
                        u = cand;
                        energy = ce;
                        accepted = true;
                        step = eta;
                        t_hint = 1.0; // iterates stay on the set; rescale is near identity
                        break;
                    }
                }
                eta *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        (u, iters)
    }

    fn residual_norm(&self, u: &[f64], eps: f64) -> f64 {
        let mut g = vec![0.0; u.len()];
        self.gradient_vec(u, eps, &mut g);
        g.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }

    /// Damped Newton iterations on the weak form. The piecewise-linear
    /// energy makes the Jacobian tridiagonal, so each step is a Thomas
    /// solve. The slope nonlinearity is regularized in the Jacobian only;
    /// residuals stay exact. Returns the improved iterate.
    fn newton_polish(&self, mut u: Vec<f64>, cfg: &SolverConfig) -> (Vec<f64>, usize) {
        let n = u.len();
        let p = self.params.p;
        let eps = 1e-10;
        let mut g = vec![0.0; n];
        let mut res = {
            self.gradient_vec(&u, 0.0, &mut g);
            g.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
        };
        let mut iters = 0;

        for _ in 0..60 {
            if res <= 1e-3 * cfg.residual_tol {
                break;
            }
            iters += 1;
            // assemble tridiagonal Jacobian of the weak form at u
            let mut diag = vec![0.0; n];
            let mut lower = vec![0.0; n - 1]; // J[i+1][i]
            let mut upper = vec![0.0; n - 1]; // J[i][i+1]
            for i in 0..n {
                let t = u[i];
                let dphi_v = (t * t + eps * eps).powf(0.5 * (p - 4.0))
                    * ((p - 1.0) * t * t + eps * eps);
                diag[i] += self.forms.wq[i] * self.forms.v_at[i] * dphi_v;
                diag[i] -= self.forms.wq[i] * self.forms.k_at[i] * self.nl.f_prime(t);
            }
            for i in 0..n - 1 {
                let s = (u[i + 1] - u[i]) / self.forms.seg_len[i];
                let dphi = (s * s + eps * eps).powf(0.5 * (p - 4.0))
                    * ((p - 1.0) * s * s + eps * eps);
                let c = self.forms.seg_weight[i] * dphi
                    / (self.forms.seg_len[i] * self.forms.seg_len[i]);
                diag[i] += c;
                diag[i + 1] += c;
                lower[i] -= c;
                upper[i] -= c;
            }
            {
                let s = -u[n - 1] / self.forms.seg_len[n - 1];
                let dphi = (s * s + eps * eps).powf(0.5 * (p - 4.0))
                    * ((p - 1.0) * s * s + eps * eps);
                diag[n - 1] += self.forms.seg_weight[n - 1] * dphi
                    / (self.forms.seg_len[n - 1] * self.forms.seg_len[n - 1]);
            }

            self.gradient_vec(&u, 0.0, &mut g);
            let step = match thomas_solve(&lower, &diag, &upper, &g) {
                Some(d) => d,
                None => break,
            };
            // damping: shrink toward the Newton point while the residual
            // improves; keep the iteration local (norm window, positive
            // energy) so it cannot slide onto the zero solution or the
            // large-norm far-field branch
            let entry_norm = self.norm(&u);
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let cand: Vec<f64> = u.iter().zip(&step).map(|(a, b)| a - alpha * b).collect();
                let cres = self.residual_norm(&cand, 0.0);
                let cnorm = self.norm(&cand);
                if cres < res
                    && cnorm > 0.25 * entry_norm
                    && cnorm < 4.0 * entry_norm
                    && self.energy_vec(&cand, 0.0) > 0.0
                {
                    u = cand;
                    res = cres;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        (u, iters)
    }

    fn decay_fits(&self, u: &[f64]) -> (f64, f64) {
        let nodes = self.forms.grid.nodes();
        let slope = |idx: Vec<usize>| -> f64 {
            let pts: Vec<(f64, f64)> = idx
                .into_iter()
                .filter(|&i| u[i].abs() > 1e-200)
                .map(|i| (nodes[i].ln(), u[i].abs().ln()))
                .collect();
            if pts.len() < 3 {
                return f64::NAN;
            }
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            sxy / sxx
        };
        // inner edge: first half-decade of nodes
        let r0 = nodes[0];
        let inner: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i] <= r0 * 10f64.powf(0.5)).collect();
        // outer edge: last decade where the solution is still alive
        let alive_max = nodes
            .iter()
            .enumerate()
            .filter(|(i, _)| u[*i].abs() > 1e-12)
            .map(|(_, &r)| r)
            .fold(r0, f64::max);
        let outer: Vec<usize> = (0..nodes.len())
            .filter(|&i| nodes[i] >= alive_max / 10.0 && nodes[i] <= alive_max)
            .collect();
        (slope(inner), slope(outer))
    }
}

impl EnergyForms {
    /// `int K g(u) dx` variant taking the nodal value, for pair products.
    pub(crate) fn k_integral_pair(&self, u: &[f64], g: impl Fn(f64) -> f64) -> f64 {
        self.k_integral(u, g)
    }
}

/// Tridiagonal solve by the Thomas algorithm; `None` on a vanishing pivot.
fn thomas_solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    if diag[0] == 0.0 {
        return None;
    }
    c[0] = upper.first().copied().unwrap_or(0.0) / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - lower[i - 1] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return None;
        }
        if i < n - 1 {
            c[i] = upper[i] / denom;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / denom;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let xi = x[i] - c[i] * x[i + 1];
        x[i] = xi;
    }
    Some(x)
}

/// Audit of the structural nonlinearity hypotheses on a log grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NonlinearityAudit {
    /// Max over the grid of `(theta F(t) - f(t) t) / f(t) t`
    /// (nonpositive up to rounding).
    pub superlinearity_excess: f64,
    /// Min over the grid of `F(t)` (should be >= 0).
    pub min_big_f: f64,
    /// `F(1)`, positive for all kinds.
    pub big_f_at_one: f64,
    /// Max of `|f(t)| / min(t^{q1-1}, t^{q2-1})` (growth constant, <= 1).
    pub growth_constant: f64,
    pub pass: bool,
}

/// Check `0 <= theta F(t) <= f(t) t`, `F(1) > 0` and the double-power
/// growth bound with constant one, over `points` log-spaced values of `t`
/// in `[1e-8, 1e8]`. The superlinearity excess is tracked relative to
/// `f(t) t`, which for the pure power is an exact equality.
pub fn audit_nonlinearity(nl: &Nonlinearity, points: usize) -> NonlinearityAudit {
    let theta = nl.theta();
    let mut excess = f64::NEG_INFINITY;
    let mut min_f = f64::INFINITY;
    let mut growth = 0.0f64;
    for i in 0..points {
        let t = 10f64.powf(-8.0 + 16.0 * i as f64 / (points - 1) as f64);
        let f = nl.f(t);
        let big_f = nl.big_f(t);
        excess = excess.max((theta * big_f - f * t) / (f * t).max(f64::MIN_POSITIVE));
        min_f = min_f.min(big_f);
        let envelope = t.powf(nl.q1 - 1.0).min(t.powf(nl.q2 - 1.0));
        growth = growth.max(f.abs() / envelope);
    }
    let big_f_at_one = nl.big_f(1.0);
    let pass = excess <= 1e-8 && min_f >= 0.0 && big_f_at_one > 0.0 && growth <= 1.0 + 1e-9;
    NonlinearityAudit {
        superlinearity_excess: excess,
        min_big_f: min_f,
        big_f_at_one,
        growth_constant: growth,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn double_power_min_closed_forms() {
        let nl = Nonlinearity::double_power_min(3.0, 4.0).unwrap();
        assert_relative_eq!(nl.big_f(1.0), 0.25, epsilon = 1e-15);
        assert_relative_eq!(nl.big_f(2.0), 0.25 + 7.0 / 3.0, epsilon = 1e-14);
        assert_eq!(nl.f(-5.0), 0.0);
        assert_eq!(nl.big_f(-5.0), 0.0);
        // branch continuity at t = 1: both closed forms agree exactly
        let below = 1.0f64.powf(4.0) / 4.0;
        let above = 1.0 / 4.0 + (1.0f64.powf(3.0) - 1.0) / 3.0;
        assert_eq!(below, above);
    }

    #[test]
    fn smooth_quotient_antiderivative_matches_quadrature() {
        let nl = Nonlinearity::smooth_quotient(2.5, 4.0).unwrap();
        for t in [1e-6, 0.037, 1.0, 3.7, 120.0, 4.2e6] {
            let direct = adaptive_simpson(&|s| nl.f(s), 0.0, t, 1e-13 * t.max(1.0));
            assert_relative_eq!(nl.big_f(t), direct, max_relative = 1e-9);
        }
    }

    #[test]
    fn pure_power_forms() {
        let nl = Nonlinearity::pure_power(4.0).unwrap();
        assert_relative_eq!(nl.f(2.0), 8.0);
        assert_relative_eq!(nl.big_f(2.0), 4.0);
        assert!(Nonlinearity::new(NonlinearityKind::PurePower, 3.0, 4.0).is_err());
    }

    #[test]
    fn audits_pass_for_all_kinds() {
        for nl in [
            Nonlinearity::double_power_min(3.0, 4.0).unwrap(),
            Nonlinearity::smooth_quotient(3.0, 4.0).unwrap(),
            Nonlinearity::pure_power(3.5).unwrap(),
        ] {
            let audit = audit_nonlinearity(&nl, 2000);
            assert!(audit.pass, "{audit:?}");
        }
    }

    #[test]
    fn pure_power_superlinearity_is_equality() {
        let nl = Nonlinearity::pure_power(3.0).unwrap();
        for t in [0.1, 1.0, 7.3] {
            assert_relative_eq!(nl.theta() * nl.big_f(t), nl.f(t) * t, epsilon = 1e-12);
        }
    }
}
