use qlrad::exponents::ProblemParams;
use qlrad::grid::RadialGrid;
use qlrad::potential::PotentialExpr;
use qlrad::solver::{MountainPass, Nonlinearity, SolverConfig};

fn main() {
    let a = PotentialExpr::parse("max(r^-2, r^-1)").unwrap();
    let v = PotentialExpr::parse("exp(2*r)").unwrap();
    let k = PotentialExpr::parse("exp(r)").unwrap();
    let params = ProblemParams::new(4, 1.5, -2.0, -1.0, 0.0, 0.0, 0.0, 0.5, 1.0, 2.0).unwrap();
    let npd: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(64);
    let rmax: f64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(10.0);
    let grid = RadialGrid::geometric(1e-4, rmax, npd, 4).unwrap();
    println!("nodes {}", grid.len());
    let nl = Nonlinearity::pure_power(4.0).unwrap();
    let mp = MountainPass::new(grid, &a, &v, &k, nl, params, 2.0).unwrap();
    let cfg = SolverConfig::default();
    let t0 = std::time::Instant::now();
    match mp.solve(&cfg) {
        Ok(rep) => {
            let u = rep.profile.values();
            let umax = u.iter().cloned().fold(0.0f64, f64::max);
            println!("ok: energy {:.8} residual {:.3e} gap {:.3e} norm {:.6} umax {:.6} nonneg {} iters {} [{:?}]",
                rep.energy, rep.residual_norm, rep.nehari_gap, rep.norm, umax, rep.nonnegative, rep.iterations, t0.elapsed());
            println!("u[0] {:.6} at r=1e-4; decay fits {:.3} {:.3}", u[0], rep.decay_fit_origin, rep.decay_fit_infinity);
        }
        Err(e) => println!("solve failed: {e} [{:?}]", t0.elapsed()),
    }
}
