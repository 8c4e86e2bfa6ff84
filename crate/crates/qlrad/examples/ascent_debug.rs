use qlrad::exponents::ProblemParams;
use qlrad::grid::RadialGrid;
use qlrad::potential::PotentialExpr;
use qlrad::probe::{AscentConfig, Prober};

fn main() {
    let one = PotentialExpr::Const(1.0);
    let params = ProblemParams::new(3, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 2.0).unwrap();
    let grid = RadialGrid::geometric(1e-2, 20.0, 16, 3).unwrap();
    println!("nodes: {}", grid.len());
    let prober = Prober::new(grid, &one, &one, &one, &params).unwrap();
    let eig = prober.eigen_oracle((0.0, 1.0)).unwrap();
    println!("eig: {eig:.12}");
    for iters in [2000usize, 10000, 40000, 160000] {
        let cfg = AscentConfig { starts: 8, max_iterations: iters, rel_tolerance: 1e-14, seed: 1 };
        let est = prober.estimate_s0(2.0, 1.0, &cfg).unwrap();
        println!("iters {iters}: est {:.12} gap {:.3e} converged {}", est.value, (eig - est.value).abs(), est.converged);
    }
}
