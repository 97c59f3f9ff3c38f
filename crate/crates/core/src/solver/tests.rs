use super::*;
use crate::linalg::solve_dense;
use crate::mat::Mat;
use crate::integrands::{NonconvexKind, NonconvexSpec, PhaseFunction};
use crate::microstructure::{sample_poisson, BoxSpec, PointSample};

fn quad_spec(d: usize, a: f64, b: f64) -> IntegrandSpec {
    IntegrandSpec::new(
        PhaseFunction::quadratic_isotropic(d, a),
        PhaseFunction::quadratic_isotropic(d, b),
        2.0,
        1,
        d,
        1.0,
    )
    .unwrap()
}

fn with_inclusions(dim: usize, side: f64, centers: &[[f64; 3]], r: f64) -> PointSample {
    PointSample {
        points: centers.to_vec(),
        radii: vec![r; centers.len()],
        ..PointSample::empty(BoxSpec::new(dim, side).unwrap())
    }
}

/// Minimum of a quadratic energy over the unconstrained entries by one dense solve.
fn dense_minimum(e: &CellEnergy<'_>) -> f64 {
    let n = e.len();
    let zero = vec![0.0; n];
    let (_, b) = e.value_grad(&zero).unwrap().unwrap();
    // Periodic problems are invariant under constants; pin node 0.
    let pinned = usize::from(matches!(e.bc(), BCSpec::Periodic(_)));
    let free: Vec<usize> = (pinned..n).filter(|i| !e.constrained_nodes().contains(i)).collect();
    let k = free.len();
    let mut a = vec![0.0; k * k];
    for (col, &j) in free.iter().enumerate() {
        let mut x = zero.clone();
        x[j] = 1.0;
        let (_, gj) = e.value_grad(&x).unwrap().unwrap();
        for (row, &i) in free.iter().enumerate() {
            a[row * k + col] = gj[i] - b[i];
        }
    }
    let rhs: Vec<f64> = free.iter().map(|&i| -b[i]).collect();
    let sol = solve_dense(k, &a, &rhs).unwrap();
    let mut x = zero;
    for (&i, v) in free.iter().zip(sol) {
        x[i] = v;
    }
    e.value(&x).unwrap().to_f64()
}

#[test]
fn constant_density_converges_immediately() {
    let spec = quad_spec(2, 1.0, 1.0);
    let grid = Grid::new(2, 4.0, 8).unwrap();
    let medium = with_inclusions(2, 4.0, &[[0.0; 3]], 1.0);
    let lam = Mat::from_slice(1, 2, &[1.0, 2.0]);
    let (f, rep) =
        minimize_convex(&grid, &spec, &medium, BCSpec::Periodic(lam), None, 1.0, &SolverOptions::default()).unwrap();
    assert_eq!(rep.iterations, 0);
    assert!(rep.converged);
    assert!((rep.final_energy - 5.0).abs() < 1e-14);
    assert!(f.values().iter().all(|v| *v == 0.0));
}

#[test]
fn one_dimensional_dense_oracle() {
    let spec = quad_spec(1, 1.0, 4.0);
    let opts = SolverOptions::default();
    for (n, centers) in [(3, vec![[0.4, 0.0, 0.0]]), (4, vec![[-0.6, 0.0, 0.0], [0.9, 0.0, 0.0]])] {
        let grid = Grid::new(1, 3.0, n).unwrap();
        let medium = with_inclusions(1, 3.0, &centers, 0.5);
        for bc in [BCSpec::DirichletAffine(Mat::scalar(1.3)), BCSpec::Periodic(Mat::scalar(-0.7))] {
            let e = CellEnergy::new(&grid, &spec, &medium, bc, None, 1.0).unwrap();
            let oracle = dense_minimum(&e);
            let (_, rep) = minimize(&e, None, &opts).unwrap();
            assert!(rep.converged);
            assert!((rep.final_energy - oracle).abs() <= 1e-8, "{} vs {oracle}", rep.final_energy);
        }
    }
}

#[test]
fn energy_trace_is_monotone() {
    let spec = IntegrandSpec::new(
        PhaseFunction::PowerLaw { c: 1.0, p: 3.0 },
        PhaseFunction::Barrier { r: 1.5, c: 1.0, p: 3.0 },
        3.0,
        1,
        2,
        1.0,
    )
    .unwrap();
    let grid = Grid::new(2, 4.0, 12).unwrap();
    let medium = sample_poisson(0.3, 0.6, BoxSpec::new(2, 4.0).unwrap(), 7, "m").unwrap();
    let lam = Mat::from_slice(1, 2, &[0.6, 0.3]);
    let e = CellEnergy::new(&grid, &spec, &medium, BCSpec::DirichletAffine(lam), None, 1.0).unwrap();
    let (_, rep) = minimize(&e, None, &SolverOptions::default()).unwrap();
    assert!(rep.converged, "{rep:?}");
    assert!(rep.trace.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn boundary_condition_ordering() {
    let spec = quad_spec(2, 1.0, 6.0);
    let opts = SolverOptions::default();
    for seed in 0..4u64 {
        let bbox = BoxSpec::new(2, 4.0).unwrap();
        let medium = sample_poisson(0.4, 0.5, bbox, seed, "ordering").unwrap();
        let grid = Grid::new(2, 4.0, 16).unwrap();
        let lam = Mat::from_slice(1, 2, &[1.0, -0.5 + 0.3 * seed as f64]);
        let solve = |bc| minimize_convex(&grid, &spec, &medium, bc, None, 1.0, &opts).unwrap().1;
        let d = solve(BCSpec::DirichletAffine(lam));
        let p = solve(BCSpec::Periodic(lam));
        let m = solve(BCSpec::MeanZero(lam));
        assert!(d.converged && p.converged && m.converged);
        let tol = 10.0 * opts.tol_e * d.final_energy;
        assert!(d.final_energy >= p.final_energy - tol, "{} < {}", d.final_energy, p.final_energy);
        assert!(p.final_energy >= m.final_energy - tol, "{} < {}", p.final_energy, m.final_energy);
    }
}

#[test]
fn sweep_on_constant_density_stabilizes() {
    let spec = quad_spec(2, 1.0, 1.0);
    let grid = Grid::new(2, 4.0, 8).unwrap();
    let medium = with_inclusions(2, 4.0, &[], 1.0);
    let lam = Mat::from_slice(1, 2, &[0.5, 0.5]);
    let mut e = CellEnergy::new(&grid, &spec, &medium, BCSpec::DirichletAffine(lam), None, 1.0).unwrap();
    let r = truncation_sweep(&mut e, &[1.0, 4.0, 16.0], &SolverOptions::default(), &SweepOptions::default()).unwrap();
    assert!(r.stabilized && !r.diverged);
    assert!(r.energies.iter().all(|v| (v - 0.5).abs() < 1e-14));
    assert!((r.extrapolated_value - 0.5).abs() < 1e-14);
}

fn rigid_spec() -> IntegrandSpec {
    IntegrandSpec::new(
        PhaseFunction::quadratic_isotropic(2, 1.0),
        PhaseFunction::indicator_ball(1.0, PhaseFunction::quadratic_isotropic(2, 1.0)),
        2.0,
        1,
        2,
        1.0,
    )
    .unwrap()
}

#[test]
fn warm_start_does_not_change_energies() {
    let spec = rigid_spec();
    let grid = Grid::new(2, 4.0, 12).unwrap();
    let medium = with_inclusions(2, 4.0, &[[0.3, -0.2, 0.0]], 0.8);
    let lam = Mat::from_slice(1, 2, &[1.5, 0.0]);
    let opts = SolverOptions::default();
    let ks = [1.0, 4.0, 16.0, 64.0];
    let mut e = CellEnergy::new(&grid, &spec, &medium, BCSpec::DirichletAffine(lam), None, 1.0).unwrap();
    let warm = truncation_sweep(&mut e, &ks, &opts, &SweepOptions::default()).unwrap();
    let cold_opts = SweepOptions {
        warm_start: false,
        ..SweepOptions::default()
    };
    let cold = truncation_sweep(&mut e, &ks, &opts, &cold_opts).unwrap();
    for (a, b) in warm.energies.iter().zip(&cold.energies) {
        assert!((a - b).abs() <= 10.0 * opts.tol_e * a, "{a} vs {b}");
    }
    assert!(warm.energies.windows(2).all(|w| w[1] >= w[0] * (1.0 - 10.0 * opts.tol_e)));
}

#[test]
fn rigid_inclusion_on_the_boundary_diverges() {
    let spec = rigid_spec();
    let grid = Grid::new(2, 4.0, 8).unwrap();
    let medium = with_inclusions(2, 4.0, &[[2.0, 0.0, 0.0]], 1.0);
    // Tangential component 2 on the face x = 2 exceeds the ball radius 1.
    let lam = Mat::from_slice(1, 2, &[0.5, 2.0]);
    let ks: Vec<f64> = (0..6).map(|j| 4f64.powi(j)).collect();
    let mut e = CellEnergy::new(&grid, &spec, &medium, BCSpec::DirichletAffine(lam), None, 1.0).unwrap();
    let r = truncation_sweep(&mut e, &ks, &SolverOptions::default(), &SweepOptions::default()).unwrap();
    assert!(r.diverged && !r.stabilized, "{:?}", r.energies);
    let mut eb = CellEnergy::new(
        &grid,
        &spec,
        &medium,
        BCSpec::Buffer { lambda: lam, eta: 1.0 },
        None,
        1.0,
    )
    .unwrap();
    let rb = truncation_sweep(&mut eb, &ks, &SolverOptions::default(), &SweepOptions::default()).unwrap();
    assert!(!rb.diverged, "{:?}", rb.energies);
}

#[test]
fn divergence_fit() {
    let ks = [1.0, 4.0, 16.0, 64.0];
    assert!(detect_divergence(&ks, &[1.0, 2.0, 5.0, 17.0], 1e-4));
    assert!(!detect_divergence(&ks, &[1.0, 1.2, 1.25, 1.2501], 1e-4));
    assert!(!detect_divergence(&ks[..2], &[1.0, 2.0], 1e-4));
}

fn oscillatory(gamma: f64) -> NonconvexSpec {
    NonconvexSpec {
        gamma,
        cap: 1.0,
        kind: NonconvexKind::Oscillatory {
            xi: Mat::from_slice(1, 2, &[4.0, 1.0]),
        },
    }
}

#[test]
fn nonconvex_solve_bounds() {
    let grid = Grid::new(2, 3.0, 6).unwrap();
    let medium = with_inclusions(2, 3.0, &[[0.2, 0.4, 0.0]], 0.7);
    let lam = Mat::from_slice(1, 2, &[0.8, -0.3]);
    let data = Field::affine(&grid, &lam);
    let opts = SolverOptions::default();
    let convex = quad_spec(2, 1.0, 3.0);
    let ec = CellEnergy::new(&grid, &convex, &medium, BCSpec::DirichletData(data.clone()), None, 1.0).unwrap();
    let (_, vrep) = minimize(&ec, None, &opts).unwrap();

    let zero = quad_spec(2, 1.0, 3.0).with_nonconvex(oscillatory(0.0)).unwrap();
    let (_, z) = solve_nonconvex(&grid, &zero, &medium, &data, None, 2, 1, &opts).unwrap();
    assert!((z.final_energy - vrep.final_energy).abs() <= 1e-8);

    let spec = quad_spec(2, 1.0, 3.0).with_nonconvex(oscillatory(0.5)).unwrap();
    let (_, w0) = solve_nonconvex(&grid, &spec, &medium, &data, None, 0, 1, &opts).unwrap();
    let (_, w) = solve_nonconvex(&grid, &spec, &medium, &data, None, 4, 1, &opts).unwrap();
    assert_eq!(w.restarts_used, 5);
    assert!(w.final_energy <= w0.final_energy);
    assert!(w.final_energy >= vrep.final_energy - 1e-8);
    let (_, again) = solve_nonconvex(&grid, &spec, &medium, &data, None, 4, 1, &opts).unwrap();
    assert!(again.same_outcome(&w));
}

#[test]
fn scalar_truncation() {
    let grid = Grid::new(1, 2.0, 3).unwrap();
    let f = Field::from_values(&grid, 1, BcKind::Free, vec![3.0, -3.0, 1.0, 0.5]).unwrap();
    let r = Field::zeros(&grid, 1, BcKind::Free);
    let out = truncate_scalar(&f, 2.0, &r).unwrap();
    assert_eq!(out.values(), &[2.0, -2.0, 1.0, 0.5]);
    let v = Field::zeros(&grid, 2, BcKind::Free);
    assert!(truncate_scalar(&v, 2.0, &v).is_err());
}
