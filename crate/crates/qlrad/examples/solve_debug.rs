use qlrad::exponents::ProblemParams;
use qlrad::grid::RadialGrid;
use qlrad::potential::PotentialExpr;
use qlrad::solver::{MountainPass, Nonlinearity, SolverConfig};

fn main() {
    let one = PotentialExpr::Const(1.0);
    let params = ProblemParams::new(3, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 2.0).unwrap();
    let n_nodes: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(400);
    let max_iters: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(20000);
    let grid = RadialGrid::uniform(1e-3, 25.0, n_nodes, 3).unwrap();
    let nl = Nonlinearity::pure_power(4.0).unwrap();
    let mp = MountainPass::new(grid, &one, &one, &one, nl, params, 2.0).unwrap();
    let cfg = SolverConfig { max_iterations: max_iters, ..Default::default() };
    let t0 = std::time::Instant::now();
    let geom = mp.mp_geometry(&cfg).unwrap();
    println!("geometry: rho {:.4e} ridge {:.4e} far_norm {:.3} [{:?}]", geom.rho, geom.ridge_value, geom.far_norm, t0.elapsed());
    let t0 = std::time::Instant::now();
    match mp.solve_with_geometry(&cfg, &geom) {
        Ok(rep) => {
            let u = rep.profile.values();
            let umax = u.iter().cloned().fold(0.0f64, f64::max);
            println!("ok: energy {:.8} residual {:.3e} gap {:.3e} norm {:.6} umax {:.6} iters {} [{:?}]",
                rep.energy, rep.residual_norm, rep.nehari_gap, rep.norm, umax, rep.iterations, t0.elapsed());
        }
        Err(e) => println!("solve failed: {e} [{:?}]", t0.elapsed()),
    }
}
