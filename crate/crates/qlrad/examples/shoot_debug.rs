use qlrad::exponents::ProblemParams;
use qlrad::grid::RadialGrid;
use qlrad::potential::PotentialExpr;
use qlrad::solver::{MountainPass, Nonlinearity, SolverConfig};

// Shooting method for u'' + (2/r) u' - u + u^3 = 0, u'(0) = 0, u(inf) = 0.
// Ground state separatrix: above it the solution crosses zero, below it
// turns around and grows.
fn shoot(s: f64, r_end: f64, h: f64) -> (i32, Vec<(f64, f64)>) {
    let r0 = 1e-8;
    let mut r = r0;
    let mut u = s + (s - s * s * s) / 6.0 * r0 * r0;
    let mut v = (s - s * s * s) / 3.0 * r0; // u'
    let mut path = Vec::new();
    let f = |r: f64, u: f64, v: f64| -> (f64, f64) {
        (v, -2.0 / r * v + u - u * u * u)
    };
    while r < r_end {
        path.push((r, u));
        let (k1u, k1v) = f(r, u, v);
        let (k2u, k2v) = f(r + 0.5 * h, u + 0.5 * h * k1u, v + 0.5 * h * k1v);
        let (k3u, k3v) = f(r + 0.5 * h, u + 0.5 * h * k2u, v + 0.5 * h * k2v);
        let (k4u, k4v) = f(r + h, u + h * k3u, v + h * k3v);
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        r += h;
        if u < 0.0 {
            return (1, path); // crossed zero: overshoot
        }
        if u > s * 1.5 || (u > 2.0 * 1e-3 && v > 0.0 && u < 0.5) {
            return (-1, path); // turned around: undershoot
        }
    }
    (0, path)
}

fn main() {
    // bisect the initial height
    let (mut lo, mut hi) = (4.0, 4.7);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let (c, _) = shoot(mid, 30.0, 1e-3);
        if c >= 1 { hi = mid; } else { lo = mid; }
    }
    let s = 0.5 * (lo + hi);
    println!("ground state height: {s:.10}");
    let (_, path) = shoot(s, 30.0, 1e-3);

    // solver side
    let one = PotentialExpr::Const(1.0);
    let params = ProblemParams::new(3, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 2.0).unwrap();
    let npd: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(256);
    let grid = RadialGrid::geometric(1e-3, 25.0, npd, 3).unwrap();
    let nl = Nonlinearity::pure_power(4.0).unwrap();
    let mp = MountainPass::new(grid.clone(), &one, &one, &one, nl, params, 2.0).unwrap();
    let cfg = SolverConfig::default();
    let rep = mp.solve(&cfg).unwrap();
    let u = rep.profile.values();

    // interpolate the shooting path onto grid nodes and compare
    let interp = |r: f64| -> f64 {
        let idx = path.partition_point(|(rr, _)| *rr <= r);
        if idx == 0 { return path[0].1; }
        if idx >= path.len() { return 0.0; }
        let (r0, u0) = path[idx - 1];
        let (r1, u1) = path[idx];
        u0 + (u1 - u0) * (r - r0) / (r1 - r0)
    };
    let mut max_err = 0.0f64;
    let mut max_u = 0.0f64;
    let mut worst_r = 0.0;
    for (&r, &uv) in grid.nodes().iter().zip(u) {
        let us = interp(r);
        if (uv - us).abs() > max_err { max_err = (uv - us).abs(); worst_r = r; }
        max_u = max_u.max(us.abs());
    }
    println!("solver peak {:.6}; L_inf err {:.3e} at r = {:.4}; relative {:.3e}",
        u.iter().cloned().fold(0.0f64, f64::max), max_err, worst_r, max_err / max_u);
}
