use qlrad::exponents::ProblemParams;
use qlrad::grid::RadialGrid;
use qlrad::potential::PotentialExpr;
use qlrad::probe::{witness_nonvanishing, Prober, Side};

fn main() {
    let one = PotentialExpr::Const(1.0);
    let params = ProblemParams::new(3, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 2.0).unwrap();
    let zero = PotentialExpr::Const(0.0);
    let grid = RadialGrid::geometric(1e-6, 10.0, 32, 3).unwrap();
    let prober = Prober::new(grid, &one, &zero, &one, &params).unwrap();
    let scales: Vec<f64> = (0..5).map(|k| 0.5f64.powi(k) * 0.2).collect();
    let w = witness_nonvanishing(&prober, Side::Origin, 6.0, &scales).unwrap();
    println!("scales {:?}", w.scales);
    println!("objs   {:?}", w.objectives);
    let w3 = witness_nonvanishing(&prober, Side::Origin, 3.0, &scales).unwrap();
    println!("q=3    {:?}", w3.objectives);
}
