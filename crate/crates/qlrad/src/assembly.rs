//! Discrete energy forms shared by the embedding probe and the solver.
//!
//! The gradient seminorm is assembled segment-wise from first-order slopes
//! of the piecewise-linear interpolant,
//! `sum_i s_i |(u_{i+1} - u_i)/(r_{i+1} - r_i)|^p` with
//! `s_i = omega_N int_seg A r^{N-1} dr`, plus a final segment to an implicit
//! ghost node beyond `r_max` where the function drops to zero. The slope map
//! annihilates constants only, so the form is a genuine norm on the
//! compact-support space even when `V` vanishes, which nodal-collocation
//! differences do not guarantee (their central-difference kernel contains
//! oscillatory modes). Mass terms use nodal trapezoid weights.

use crate::error::Result;
use crate::grid::RadialGrid;
use crate::potential::PotentialExpr;
use std::sync::Arc;

/// Precomputed quadrature data for one potential triple on one grid.
#[derive(Debug, Clone)]
pub(crate) struct EnergyForms {
    pub grid: Arc<RadialGrid>,
    /// Nodal quadrature weights `omega_N w_i r_i^{N-1}`.
    pub wq: Vec<f64>,
    /// `A` sampled at nodes.
    pub a_at: Vec<f64>,
    /// `V` sampled at nodes.
    pub v_at: Vec<f64>,
    /// `K` sampled at nodes.
    pub k_at: Vec<f64>,
    /// Per segment (`n-1` interior + 1 ghost): `omega_N int_seg A r^{N-1} dr`.
    pub seg_weight: Vec<f64>,
    /// Per segment: its length.
    pub seg_len: Vec<f64>,
}

impl EnergyForms {
    pub fn new(
        grid: Arc<RadialGrid>,
        a: &PotentialExpr,
        v: &PotentialExpr,
        k: &PotentialExpr,
    ) -> Result<Self> {
        let nodes = grid.nodes();
        let n = nodes.len();
        let omega = grid.omega_n();
        let nm1 = (grid.dim() - 1) as i32;
        let tw = grid.trapezoid_weights();

        let mut wq = Vec::with_capacity(n);
        let mut a_at = Vec::with_capacity(n);
        let mut v_at = Vec::with_capacity(n);
        let mut k_at = Vec::with_capacity(n);
        let mut a_w = Vec::with_capacity(n + 1);
        for (&r, &w) in nodes.iter().zip(&tw) {
            wq.push(omega * w * r.powi(nm1));
            let av = a.eval(r)?;
            a_at.push(av);
            v_at.push(v.eval(r)?);
            k_at.push(k.eval(r)?);
            a_w.push(av * r.powi(nm1));
        }
        let ghost = grid.ghost_spacing();
        let r_ghost = grid.r_max() + ghost;
        a_w.push(a.eval(r_ghost)? * r_ghost.powi(nm1));

        let mut seg_weight = Vec::with_capacity(n);
        let mut seg_len = Vec::with_capacity(n);
        for i in 0..n - 1 {
            let dr = nodes[i + 1] - nodes[i];
            seg_weight.push(omega * 0.5 * (a_w[i] + a_w[i + 1]) * dr);
            seg_len.push(dr);
        }
        seg_weight.push(omega * 0.5 * (a_w[n - 1] + a_w[n]) * ghost);
        seg_len.push(ghost);

        Ok(EnergyForms {
            grid,
            wq,
            a_at,
            v_at,
            k_at,
            seg_weight,
            seg_len,
        })
    }

    pub fn len(&self) -> usize {
        self.wq.len()
    }

    /// `||u||_A^p` via segment slopes, including the ghost drop.
    pub fn grad_term(&self, u: &[f64], p: f64) -> f64 {
        let n = u.len();
        let mut total = 0.0;
        for i in 0..n - 1 {
            let slope = (u[i + 1] - u[i]) / self.seg_len[i];
            total += self.seg_weight[i] * slope.abs().powf(p);
        }
        let slope = -u[n - 1] / self.seg_len[n - 1];
        total += self.seg_weight[n - 1] * slope.abs().powf(p);
        total
    }

    /// `||u||_{V,p}^p` by nodal quadrature.
    pub fn mass_term(&self, u: &[f64], p: f64) -> f64 {
        u.iter()
            .zip(self.wq.iter().zip(&self.v_at))
            .map(|(&ui, (&w, &vi))| w * vi * ui.abs().powf(p))
            .sum()
    }

    /// `||u||_X^p = ||u||_A^p + ||u||_{V,p}^p`.
    pub fn norm_p(&self, u: &[f64], p: f64) -> f64 {
        self.grad_term(u, p) + self.mass_term(u, p)
    }

    /// Adds the derivative of `(1/p) ||u||_X^p` to `out`.
    ///
    /// For `1 < p < 2` the slope magnitude is regularized as
    /// `(t^2 + eps^2)^{(p-2)/2} t`; pass `eps = 0` for the exact form.
    pub fn add_norm_gradient(&self, u: &[f64], p: f64, eps: f64, out: &mut [f64]) {
        let n = u.len();
        for i in 0..n {
            out[i] += self.wq[i] * self.v_at[i] * phi_p(u[i], p, eps);
        }
        for i in 0..n - 1 {
            let slope = (u[i + 1] - u[i]) / self.seg_len[i];
            let g = self.seg_weight[i] * phi_p(slope, p, eps) / self.seg_len[i];
            out[i] -= g;
            out[i + 1] += g;
        }
        let slope = -u[n - 1] / self.seg_len[n - 1];
        let g = self.seg_weight[n - 1] * phi_p(slope, p, eps) / self.seg_len[n - 1];
        out[n - 1] -= g;
    }

    /// Regularized `(1/p)||u||_X^p` consistent with [`add_norm_gradient`]:
    /// slope magnitudes are smoothed with the same `eps`.
    pub fn norm_energy_reg(&self, u: &[f64], p: f64, eps: f64) -> f64 {
        let n = u.len();
        let mut total = 0.0;
        for i in 0..n {
            total += self.wq[i] * self.v_at[i] * pow_reg(u[i], p, eps);
        }
        for i in 0..n - 1 {
            let slope = (u[i + 1] - u[i]) / self.seg_len[i];
            total += self.seg_weight[i] * pow_reg(slope, p, eps);
        }
        let slope = -u[n - 1] / self.seg_len[n - 1];
        total += self.seg_weight[n - 1] * pow_reg(slope, p, eps);
        total / p
    }

    /// `int K g(u) dx` for a pointwise map `g`.
    pub fn k_integral(&self, u: &[f64], g: impl Fn(f64) -> f64) -> f64 {
        u.iter()
            .zip(self.wq.iter().zip(&self.k_at))
            .map(|(&ui, (&w, &ki))| w * ki * g(ui))
            .sum()
    }

    /// `int_window K |u|^q dx` restricted to nodes with
    /// `lo <= r < hi`.
    pub fn k_window_integral(&self, u: &[f64], q: f64, lo: f64, hi: f64) -> f64 {
        let mut total = 0.0;
        for (i, &r) in self.grid.nodes().iter().enumerate() {
            if r >= lo && r < hi {
                total += self.wq[i] * self.k_at[i] * u[i].abs().powf(q);
            }
        }
        total
    }
}

/// `|t|^{p-2} t`, optionally regularized for `p < 2`.
#[inline]
pub(crate) fn phi_p(t: f64, p: f64, eps: f64) -> f64 {
    if eps == 0.0 {
        if t == 0.0 {
            0.0
        } else {
            t.abs().powf(p - 2.0) * t
        }
    } else {
        (t * t + eps * eps).powf(0.5 * (p - 2.0)) * t
    }
}

/// Antiderivative pair of [`phi_p`]: `|t|^p` for `eps = 0`, else the
/// smoothed version whose derivative is `p * phi_p(t, p, eps)`.
#[inline]
fn pow_reg(t: f64, p: f64, eps: f64) -> f64 {
    if eps == 0.0 {
        t.abs().powf(p)
    } else {
        // d/dt (t^2 + eps^2)^{p/2} = p t (t^2+eps^2)^{(p-2)/2}; subtract the
        // value at 0 so the map vanishes there like |t|^p
        (t * t + eps * eps).powf(0.5 * p) - (eps * eps).powf(0.5 * p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::bump;
    use approx::assert_relative_eq;

    fn forms(npd: usize) -> EnergyForms {
        let grid = RadialGrid::geometric(1e-3, 30.0, npd, 3).unwrap();
        let one = PotentialExpr::Const(1.0);
        EnergyForms::new(grid, &one, &one, &one).unwrap()
    }

    #[test]
    fn quadratic_forms_match_analytic_values() {
        let f = forms(512);
        let u: Vec<f64> = f.grid.nodes().iter().map(|&r| (-r).exp()).collect();
        // both terms equal pi for e^{-r} in dimension 3
        assert_relative_eq!(f.mass_term(&u, 2.0), std::f64::consts::PI, epsilon = 1e-4);
        assert_relative_eq!(f.grad_term(&u, 2.0), std::f64::consts::PI, max_relative = 1e-3);
    }

    #[test]
    fn constants_cost_energy_through_the_ghost_drop() {
        let f = forms(64);
        let u = vec![1.0; f.len()];
        assert!(f.grad_term(&u, 2.0) > 0.0);
    }

    #[test]
    fn norm_gradient_is_derivative_of_norm_energy() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let f = forms(24);
        let n = f.len();
        let u: Vec<f64> = f
            .grid
            .nodes()
            .iter()
            .map(|&r| bump(r, 0.01, 10.0, 1.2))
            .collect();
        for p in [1.5, 2.0, 2.7] {
            for eps in [0.0, 1e-10, 1e-3] {
                let mut g = vec![0.0; n];
                f.add_norm_gradient(&u, p, eps, &mut g);
                for _ in 0..4 {
                    let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let h = 1e-6;
                    let up: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| a + h * b).collect();
                    let um: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| a - h * b).collect();
                    let fd = (f.norm_energy_reg(&up, p, eps) - f.norm_energy_reg(&um, p, eps))
                        / (2.0 * h);
                    let dot: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
                    assert_relative_eq!(fd, dot, max_relative = 1e-5, epsilon = 1e-10);
                }
            }
        }
    }
}
