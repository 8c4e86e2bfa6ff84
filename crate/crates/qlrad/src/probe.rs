//! Numerical probes of the embedding suprema.
//!
//! The quantities probed are, for a potential triple and an exponent `q`,
//! the supremum of `int_{B_R} K |u|^q dx` (small ball) and of
//! `int_{B_R^c} K |u|^q dx` (exterior) over the unit sphere of the discrete
//! energy norm. Each probe runs a multi-start projected gradient ascent on
//! that sphere; the returned value is a lower bound of the discrete
//! supremum, deterministic given the seed. For `p = q = 2` the same
//! quantity is the top eigenvalue of a generalized symmetric eigenproblem,
//! which serves as an independent oracle.

use crate::assembly::EnergyForms;
use crate::error::{Error, Result};
use crate::exponents::{decay_rate_infinity, decay_rate_origin, ProblemParams};
use crate::grid::{bump, GridFunction, RadialGrid};
use crate::potential::PotentialExpr;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Which side of the domain a probe targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Origin,
    Infinity,
}

/// Ascent controls. The defaults favour reproducibility over speed:
/// a fixed number of random starts, step halving on objective decrease,
/// renormalization to the constraint sphere after every step and a tight
/// relative-change stop.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AscentConfig {
    pub starts: usize,
    pub max_iterations: usize,
    pub rel_tolerance: f64,
    pub seed: u64,
}

impl Default for AscentConfig {
    fn default() -> Self {
        AscentConfig {
            starts: 8,
            max_iterations: 2000,
            rel_tolerance: 1e-10,
            seed: 0,
        }
    }
}

/// One probe estimate: the best objective value found, its maximizer and
/// a convergence flag (`false` means the iteration cap was hit while the
/// objective was still moving).
#[derive(Debug, Clone)]
pub struct Estimate {
    pub value: f64,
    pub maximizer: GridFunction,
    pub converged: bool,
}

/// Shared problem data for a sequence of probes on one grid.
pub struct Prober {
    forms: Arc<EnergyForms>,
    p: f64,
}

impl Prober {
    pub fn new(
        grid: Arc<RadialGrid>,
        a: &PotentialExpr,
        v: &PotentialExpr,
        k: &PotentialExpr,
        params: &ProblemParams,
    ) -> Result<Self> {
        params.validate()?;
        Ok(Prober {
            forms: Arc::new(EnergyForms::new(grid, a, v, k)?),
            p: params.p,
        })
    }

    pub(crate) fn from_forms(forms: Arc<EnergyForms>, p: f64) -> Self {
        Prober { forms, p }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.forms.grid
    }

    pub(crate) fn forms(&self) -> &EnergyForms {
        &self.forms
    }

    /// Lower-bound estimate of the small-ball supremum at radius `R`.
    pub fn estimate_s0(&self, q: f64, radius: f64, cfg: &AscentConfig) -> Result<Estimate> {
        self.estimate(q, (0.0, radius), cfg)
    }

    /// Lower-bound estimate of the exterior supremum at radius `R`.
    pub fn estimate_sinf(&self, q: f64, radius: f64, cfg: &AscentConfig) -> Result<Estimate> {
        self.estimate(q, (radius, f64::INFINITY), cfg)
    }

    fn estimate(&self, q: f64, window: (f64, f64), cfg: &AscentConfig) -> Result<Estimate> {
        if !(q > 1.0) {
            return Err(Error::InvalidParams(format!("probe exponent must exceed 1, got {q}")));
        }
        let starts = cfg.starts.max(1);
        let outcomes = run_starts(self, q, window, cfg, starts)?;
        // order-independent reduction: max value, ties to the lowest start index
        let mut best: Option<(usize, AscentOutcome)> = None;
        for (idx, out) in outcomes.into_iter().enumerate() {
            let replace = match &best {
                None => true,
                Some((bi, b)) => out.value > b.value || (out.value == b.value && idx < *bi),
            };
            if replace {
                best = Some((idx, out));
            }
        }
        let (_, out) = best.expect("at least one start");
        Ok(Estimate {
            value: out.value,
            maximizer: GridFunction::new(self.forms.grid.clone(), out.point)?,
            converged: out.converged,
        })
    }

    /// Objective `int_window K |u|^q dx` at a nodal vector.
    fn objective(&self, u: &[f64], q: f64, window: (f64, f64)) -> f64 {
        self.forms.k_window_integral(u, q, window.0, window.1)
    }

    /// Normalize a nodal vector onto the unit sphere of the energy norm and
    /// evaluate the window objective there. `None` when the norm degenerates.
    pub fn evaluate_normalized(&self, u: &[f64], q: f64, window: (f64, f64)) -> Option<f64> {
        let mut v = u.to_vec();
        if !self.normalize(&mut v) {
            return None;
        }
        Some(self.objective(&v, q, window))
    }

    fn objective_gradient(&self, u: &[f64], q: f64, window: (f64, f64), out: &mut [f64]) {
        let nodes = self.forms.grid.nodes();
        for (i, &r) in nodes.iter().enumerate() {
            out[i] = if r >= window.0 && r < window.1 {
                let t = u[i];
                if t == 0.0 {
                    0.0
                } else {
                    q * self.forms.wq[i] * self.forms.k_at[i] * t.abs().powf(q - 2.0) * t
                }
            } else {
                0.0
            };
        }
    }

    /// Scale `u` onto the unit sphere of the discrete energy norm.
    fn normalize(&self, u: &mut [f64]) -> bool {
        let norm_p = self.forms.norm_p(u, self.p);
        if !(norm_p > 0.0) || !norm_p.is_finite() {
            return false;
        }
        let s = norm_p.powf(-1.0 / self.p);
        for v in u.iter_mut() {
            *v *= s;
        }
        true
    }

    /// Diagonal preconditioner: the quadratic-case energy diagonal
    /// (stiffness plus mass), which captures the huge scale spread of the
    /// graded grid. Independent of `K`, so homogeneity in `K` is exact.
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

    fn ascend(&self, start: &[f64], q: f64, window: (f64, f64), cfg: &AscentConfig) -> AscentOutcome {
        let n = start.len();
        let mut u = start.to_vec();
        if !self.normalize(&mut u) {
            return AscentOutcome {
                value: 0.0,
                point: vec![0.0; n],
                converged: true,
            };
        }
        let precond = self.preconditioner();
        let mut obj = self.objective(&u, q, window);
        let mut g = vec![0.0; n];
        let mut ng = vec![0.0; n];
        let mut dir = vec![0.0; n];
        let mut dir_prev = vec![0.0; n];
        let mut u_prev = vec![0.0; n];
        let mut have_prev = false;
        let mut step = 0.0f64;
        let mut small_streak = 0;
        let mut converged = false;

        for _ in 0..cfg.max_iterations {
            self.objective_gradient(&u, q, window, &mut g);
            ng.fill(0.0);
            self.forms.add_norm_gradient(&u, self.p, 0.0, &mut ng);
            // ascent direction in the preconditioner metric, with the
            // constraint normal projected out so fixed points are critical
            // pairs of the constrained problem
            let mut gn = 0.0;
            let mut nn = 0.0;
            for i in 0..n {
                gn += g[i] * ng[i] / precond[i];
                nn += ng[i] * ng[i] / precond[i];
            }
            let lambda = if nn > 0.0 { gn / nn } else { 0.0 };
            for i in 0..n {
                dir[i] = (g[i] - lambda * ng[i]) / precond[i];
            }
            let dmax = dir.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
            if dmax == 0.0 {
                converged = true;
                break;
            }

            // Barzilai-Borwein step on the preconditioned direction; the
            // direction and the step jointly cancel a constant factor in K,
            // so estimates are exactly homogeneous in K
            if have_prev {
                let mut ss = 0.0;
                let mut sy = 0.0;
                for i in 0..n {
                    let s = u[i] - u_prev[i];
                    let y = dir_prev[i] - dir[i]; // ascent: curvature sign flips
                    ss += s * s;
                    sy += s * y;
                }
                if sy > 0.0 && ss > 0.0 {
                    step = (ss / sy).clamp(1e-14 * step.max(1e-300), 1e14);
                }
            }
            if !(step > 0.0) || !step.is_finite() {
                step = 0.2 / dmax;
            }

            u_prev.copy_from_slice(&u);
            dir_prev.copy_from_slice(&dir);
            have_prev = true;

            let mut improved = false;
            let mut eta = step;
            for _ in 0..70 {
                let mut cand: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| a + eta * b).collect();
                if self.normalize(&mut cand) {
                    let cobj = self.objective(&cand, q, window);
                    if cobj > obj {
                        let rel = (cobj - obj) / cobj.max(f64::MIN_POSITIVE);
                        u = cand;
                        obj = cobj;
                        improved = true;
                        step = eta;
                        if rel < cfg.rel_tolerance {
                            small_streak += 1;
                            if small_streak >= 4 {
                                converged = true;
                            }
                        } else {
                            small_streak = 0;
                        }
                        break;
                    }
                }
                eta *= 0.5;
            }
            if !improved {
                converged = true;
                break;
            }
            if converged {
                break;
            }
        }
        AscentOutcome {
            value: obj,
            point: u,
            converged,
        }
    }

    fn start_profile(&self, rng: &mut ChaCha8Rng, window: (f64, f64)) -> Vec<f64> {
        let grid = &self.forms.grid;
        let (lo, hi) = window;
        let lo = lo.max(grid.r_min());
        let hi = hi.min(grid.r_max());
        // random bump centered inside the active window, log-uniform scale
        let llo = lo.max(grid.r_min() * 1.5).ln();
        let lhi = hi.min(grid.r_max() * 0.7).max(lo * 1.01).ln();
        let c = (llo + (lhi - llo) * rng.gen::<f64>()).exp();
        let width: f64 = rng.gen_range(0.3..2.5);
        let amp: f64 = rng.gen_range(0.5..2.0);
        grid.nodes()
            .iter()
            .map(|&r| bump(r, c * (1.0 - 0.8 * width), c * (1.0 + 1.2 * width), amp))
            .collect()
    }

    /// Dense generalized-eigenproblem oracle for the quadratic case
    /// `p = q = 2`: the probed supremum equals the top eigenvalue of
    /// `M_K x = lambda (S + M_V) x` on the discrete space.
    pub fn eigen_oracle(&self, window: (f64, f64)) -> Result<f64> {
        let n = self.forms.len();
        if n > 1200 {
            return Err(Error::InvalidParams(format!(
                "dense eigen oracle is limited to 1200 nodes, grid has {n}"
            )));
        }
        // B = S + M_V (segment stiffness incl. ghost drop, nodal mass)
        let mut b = DMatrix::<f64>::zeros(n, n);
        for i in 0..n - 1 {
            let c = self.forms.seg_weight[i] / (self.forms.seg_len[i] * self.forms.seg_len[i]);
            b[(i, i)] += c;
            b[(i + 1, i + 1)] += c;
            b[(i, i + 1)] -= c;
            b[(i + 1, i)] -= c;
        }
        let cg = self.forms.seg_weight[n - 1] / (self.forms.seg_len[n - 1] * self.forms.seg_len[n - 1]);
        b[(n - 1, n - 1)] += cg;
        for i in 0..n {
            b[(i, i)] += self.forms.wq[i] * self.forms.v_at[i];
        }
        // M_K restricted to the window
        let nodes = self.forms.grid.nodes();
        let mk: Vec<f64> = (0..n)
            .map(|i| {
                if nodes[i] >= window.0 && nodes[i] < window.1 {
                    self.forms.wq[i] * self.forms.k_at[i]
                } else {
                    0.0
                }
            })
            .collect();

        // Cholesky of B, then symmetric eigen of L^{-1} M_K L^{-T}
        let chol = nalgebra::linalg::Cholesky::new(b)
            .ok_or_else(|| Error::InvalidParams("discrete energy form is not positive definite".into()))?;
        let l = chol.l();
        // columns of L^{-1} diag(mk) L^{-T}
        let mut m = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            m[(j, j)] = mk[j];
        }
        let linv_m = l.clone().solve_lower_triangular(&m).ok_or_else(|| {
            Error::InvalidParams("triangular solve failed in the eigen oracle".into())
        })?;
        let sym = l
            .solve_lower_triangular(&linv_m.transpose())
            .ok_or_else(|| Error::InvalidParams("triangular solve failed in the eigen oracle".into()))?;
        let sym = 0.5 * (&sym + sym.transpose());
        let eig = SymmetricEigen::new(sym);
        Ok(eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }
}

struct AscentOutcome {
    value: f64,
    point: Vec<f64>,
    converged: bool,
}

/// Fan the starts out over a bounded worker pool. Each start owns a stream
/// seeded from `(seed, start index)`, so the outcome set is independent of
/// the parallel schedule; the caller reduces it deterministically.
fn run_starts(
    prober: &Prober,
    q: f64,
    window: (f64, f64),
    cfg: &AscentConfig,
    starts: usize,
) -> Result<Vec<AscentOutcome>> {
    let threads = thread_cap().min(starts).max(1);
    if threads == 1 {
        return Ok((0..starts)
            .map(|i| run_one_start(prober, q, window, cfg, i))
            .collect());
    }
    let mut outcomes: Vec<Option<AscentOutcome>> = (0..starts).map(|_| None).collect();
    let counter = std::sync::atomic::AtomicUsize::new(0);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for _ in 0..threads {
            let counter = &counter;
            handles.push(scope.spawn(move || {
                let mut mine = Vec::new();
                loop {
                    let i = counter.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if i >= starts {
                        break;
                    }
                    mine.push((i, run_one_start(prober, q, window, cfg, i)));
                }
                mine
            }));
        }
        for h in handles {
            for (i, out) in h.join().expect("probe worker panicked") {
                outcomes[i] = Some(out);
            }
        }
    });
    Ok(outcomes.into_iter().map(|o| o.expect("all starts ran")).collect())
}

fn run_one_start(
    prober: &Prober,
    q: f64,
    window: (f64, f64),
    cfg: &AscentConfig,
    index: usize,
) -> AscentOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9e3779b97f4a7c15) ^ index as u64);
    let start = prober.start_profile(&mut rng, window);
    prober.ascend(&start, q, window, cfg)
}

/// Worker cap for multi-start fan-out, from the `TOOL_THREADS` environment
/// variable (defaults to the machine parallelism).
fn thread_cap() -> usize {
    match std::env::var("TOOL_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        Some(n) if n >= 1 => n,
        _ => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    }
}

/// Result of a decay study over a radius ladder.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProbeResult {
    pub side: Side,
    pub q: f64,
    pub radii: Vec<f64>,
    pub estimates: Vec<f64>,
    /// Log-log slope of the estimates against the radius.
    pub fitted_slope: f64,
    /// The decay exponent proven for this side and exponent.
    pub predicted_slope: f64,
    pub pass: bool,
    /// True when every ascent in the ladder converged.
    pub converged: bool,
}

impl ProbeResult {
    /// CSV rows `R,estimate`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "R,estimate")?;
        for (r, e) in self.radii.iter().zip(&self.estimates) {
            writeln!(w, "{r},{e}")?;
        }
        Ok(())
    }
}

/// Tolerance on the fitted slope against the proven decay exponent.
pub const SLOPE_TOLERANCE: f64 = 0.25;

/// Estimate the embedding supremum over a geometric radius ladder, fit the
/// decay slope, and compare with the proven rate.
///
/// The pass flag requires (a) estimates decaying toward zero in the
/// direction the theory guarantees, monotonically up to `1e-6` ascent
/// noise, and (b) a fitted slope consistent with the proven bound
/// (`fitted >= delta - tol` at the origin, `fitted <= delta + tol` at
/// infinity).
pub fn decay_study(
    prober: &Prober,
    side: Side,
    q: f64,
    radii: &[f64],
    params: &ProblemParams,
    cfg: &AscentConfig,
) -> Result<ProbeResult> {
    if radii.len() < 2 {
        return Err(Error::InvalidParams("decay study needs at least two radii".into()));
    }
    let predicted = match side {
        Side::Origin => decay_rate_origin(params, q)?,
        Side::Infinity => decay_rate_infinity(params, q)?,
    };

    let mut estimates = Vec::with_capacity(radii.len());
    let mut maximizers: Vec<Vec<f64>> = Vec::with_capacity(radii.len());
    let mut converged = true;
    for &radius in radii {
        let est = match side {
            Side::Origin => prober.estimate_s0(q, radius, cfg)?,
            Side::Infinity => prober.estimate_sinf(q, radius, cfg)?,
        };
        converged &= est.converged;
        estimates.push(est.value);
        maximizers.push(est.maximizer.values().to_vec());
    }
    // Every maximizer is feasible for every radius, so cross-evaluating
    // tightens the lower bounds and removes ascent noise between rungs.
    for (i, &radius) in radii.iter().enumerate() {
        let window = match side {
            Side::Origin => (0.0, radius),
            Side::Infinity => (radius, f64::INFINITY),
        };
        for m in &maximizers {
            let v = prober.objective(m, q, window);
            if v > estimates[i] {
                estimates[i] = v;
            }
        }
    }

    // slope of log(estimate) against log(R)
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = estimates.iter().map(|e| e.max(f64::MIN_POSITIVE).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let fitted = sxy / sxx;

    // monotone decay toward zero in the guaranteed direction
    let mut ordered: Vec<(f64, f64)> = radii.iter().copied().zip(estimates.iter().copied()).collect();
    ordered.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let monotone = match side {
        // smaller R, smaller estimate
        Side::Origin => ordered.windows(2).all(|w| w[0].1 <= w[1].1 + 1e-6),
        // larger R, smaller estimate
        Side::Infinity => ordered.windows(2).all(|w| w[0].1 + 1e-6 >= w[1].1),
    };
    let slope_ok = match side {
        Side::Origin => fitted >= predicted - SLOPE_TOLERANCE,
        Side::Infinity => fitted <= predicted + SLOPE_TOLERANCE,
    };

    Ok(ProbeResult {
        side,
        q,
        radii: radii.to_vec(),
        estimates,
        fitted_slope: fitted,
        predicted_slope: predicted,
        pass: monotone && slope_ok,
        converged,
    })
}

/// Rescaled normalized bump family used to witness non-vanishing of the
/// embedding suprema outside the admissible windows.
#[derive(Debug, Clone)]
pub struct WitnessFamily {
    pub scales: Vec<f64>,
    pub objectives: Vec<f64>,
    pub members: Vec<GridFunction>,
    /// Infimum of the objective over the family.
    pub inf_objective: f64,
}

/// Concentrate unit-norm bumps at a ladder of scales and evaluate the
/// probe objective on each.
///
/// In the classical scale-invariant case (`A = 1`, `V = 0`,
/// `q = pN/(N-p)`) the objective stays bounded below along the family,
/// demonstrating failure of the vanishing property; for `q` strictly
/// inside an admissible window the same family's objective tends to zero.
pub fn witness_nonvanishing(
    prober: &Prober,
    side: Side,
    q: f64,
    scales: &[f64],
) -> Result<WitnessFamily> {
    if !(q > 1.0) {
        return Err(Error::InvalidParams(format!("witness exponent must exceed 1, got {q}")));
    }
    let grid = prober.grid().clone();
    let mut members = Vec::with_capacity(scales.len());
    let mut objectives = Vec::with_capacity(scales.len());
    for &scale in scales {
        let mut u: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|&r| bump(r, 0.25 * scale, 2.0 * scale, 1.0))
            .collect();
        if !prober.normalize(&mut u) {
            return Err(Error::InvalidParams(format!(
                "witness bump at scale {scale} degenerates on this grid"
            )));
        }
        let window = match side {
            Side::Origin => (0.0, 2.0 * scale),
            Side::Infinity => (0.5 * scale, f64::INFINITY),
        };
        objectives.push(prober.objective(&u, q, window));
        members.push(GridFunction::new(grid.clone(), u)?);
    }
    let inf_objective = objectives.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(WitnessFamily {
        scales: scales.to_vec(),
        objectives,
        members,
        inf_objective,
    })
}

/// The annulus interpolation constant: output of [`annulus_bound`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnnulusBound {
    /// Constant multiplying `||K||_{L^s} ||u||^{q - l p} (int |u|^p)^l`.
    pub c_tilde: f64,
    /// The interpolation exponent `l = (t-1)/t`.
    pub l: f64,
    /// The Hoelder split parameter actually used.
    pub t: f64,
    /// `||K||_{L^s}` over the annulus, by quadrature.
    pub k_norm_s: f64,
    /// Quadrature measure of the annulus.
    pub annulus_measure: f64,
}

/// Assemble the annulus bound
/// `int_{r<|x|<R} K |u|^q dx <= C ||K||_{L^s} ||u||^{q-lp} (int |u|^p dx)^l`.
///
/// The split parameter is `t = (1+s)/2`, halved toward 1 while the
/// constraint `t' q > p` fails, so the returned `l` always satisfies
/// `q - l p > 0`. `C` is `|ann|^{1/t - 1/s} (M / r^{(N-p+a0)/p})^{q - p/t'}`
/// with `M` the interior pointwise constant measured on the grid.
pub fn annulus_bound(
    prober: &Prober,
    r_lo: f64,
    r_hi: f64,
    q: f64,
    s: f64,
    k: &PotentialExpr,
    params: &ProblemParams,
) -> Result<AnnulusBound> {
    if !(r_lo > 0.0 && r_hi > r_lo) {
        return Err(Error::InvalidParams(format!(
            "annulus needs 0 < r < R, got ({r_lo}, {r_hi})"
        )));
    }
    if !(q > 1.0 && s > 1.0) {
        return Err(Error::InvalidParams("annulus bound needs q > 1 and s > 1".into()));
    }
    let mut t = 0.5 * (1.0 + s);
    for _ in 0..64 {
        let t_prime = t / (t - 1.0);
        if t_prime * q > params.p {
            break;
        }
        t = 1.0 + 0.5 * (t - 1.0);
    }
    let t_prime = t / (t - 1.0);
    let l = 1.0 / t_prime;

    let forms = prober.forms();
    let nodes = forms.grid.nodes();
    let nf = params.n as f64;
    let omega = forms.grid.omega_n();
    // annulus measure and ||K||_{L^s} by adaptive quadrature so the
    // constant is independent of how grid nodes straddle the annulus
    let nm1 = nf - 1.0;
    let measure = omega * crate::quad::adaptive_simpson(&|r: f64| r.powf(nm1), r_lo, r_hi, 1e-12);
    let k_s = omega
        * crate::quad::adaptive_simpson(
            &|r: f64| k.eval(r).map(|v| v.powf(s) * r.powf(nm1)).unwrap_or(f64::NAN),
            r_lo,
            r_hi,
            1e-12,
        );
    if !k_s.is_finite() {
        return Err(Error::Overflow {
            context: "annulus K-norm quadrature".into(),
        });
    }
    let k_norm_s = k_s.powf(1.0 / s);

    // interior pointwise constant with the support ball covering the grid
    let mut c0 = f64::INFINITY;
    for (i, &r) in nodes.iter().enumerate() {
        c0 = c0.min(forms.a_at[i] / r.powf(params.a0));
    }
    let m = omega.powf(-1.0 / params.p)
        * c0.powf(-1.0 / params.p)
        * ((params.p - 1.0) / (nf + params.a0 - params.p)).powf((params.p - 1.0) / params.p);

    let nu = (nf - params.p + params.a0) / params.p;
    let c_tilde = measure.powf(1.0 / t - 1.0 / s) * (m / r_lo.powf(nu)).powf(q - params.p / t_prime);
    if !c_tilde.is_finite() {
        return Err(Error::Overflow {
            context: "annulus constant".into(),
        });
    }
    Ok(AnnulusBound {
        c_tilde,
        l,
        t,
        k_norm_s,
        annulus_measure: measure,
    })
}

/// Geometric radius ladder `base * factor^k`, `k = 0..count`.
pub fn radius_ladder(base: f64, factor: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| base * factor.powi(k as i32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder() {
        let l = radius_ladder(1.0, 0.5, 3);
        assert_eq!(l, vec![1.0, 0.5, 0.25]);
    }

    #[test]
    fn samples_helper() {
        let s = crate::potential::geometric_samples(1.0, 4.0, 3);
        assert!((s[1] - 2.0).abs() < 1e-12);
    }
}
