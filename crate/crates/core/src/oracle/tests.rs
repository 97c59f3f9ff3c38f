use super::*;
use crate::grid::Field;
use crate::integrands::{NonconvexKind, NonconvexSpec};
use crate::microstructure::{BoxSpec, PointSample};
use crate::solver::{minimize_convex, solve_nonconvex, SolverOptions};

fn tight() -> SolverOptions {
    SolverOptions {
        tol_e: 1e-14,
        tol_g: 1e-11,
        ..SolverOptions::default()
    }
}

fn sample(dim: usize, side: f64, centers: &[[f64; 3]], r: f64) -> PointSample {
    PointSample {
        points: centers.to_vec(),
        radii: vec![r; centers.len()],
        ..PointSample::empty(BoxSpec::new(dim, side).unwrap())
    }
}

fn two_phase(d: usize, a: PhaseFunction, b: PhaseFunction, p: f64) -> IntegrandSpec {
    IntegrandSpec::new(a, b, p, 1, d, 1.0).unwrap()
}

#[test]
fn quadratic_conjugate() {
    for a in [0.5, 1.0, 4.0] {
        let f = PhaseFunction::quadratic_isotropic(1, a);
        for s in [-3.0, -0.2, 0.0, 1.0, 7.5] {
            let v = legendre(&f, s).unwrap();
            assert!((v - s * s / (4.0 * a)).abs() <= 1e-8, "a {a} σ {s}: {v}");
        }
    }
}

#[test]
fn laminate_harmonic_mean() {
    let spec = LaminateSpec::new(
        vec![PhaseFunction::quadratic_isotropic(1, 1.0), PhaseFunction::quadratic_isotropic(1, 4.0)],
        vec![0.5, 0.5],
        2.0,
    )
    .unwrap();
    for lam in [0.5, 1.0, -2.0] {
        let v = laminate_1d_vbar(&spec, lam).unwrap();
        assert!((v - 1.6 * lam * lam).abs() <= 1e-8, "Λ {lam}: {v}");
    }
    // Unequal fractions: (0.25/1 + 0.75/4)⁻¹.
    let skew = LaminateSpec { fractions: vec![0.25, 0.75], ..spec };
    let v = laminate_1d_vbar(&skew, 1.0).unwrap();
    assert!((v - 1.0 / 0.4375).abs() <= 1e-8);
}

#[test]
fn double_transform_is_involutive() {
    let phases = [
        PhaseFunction::PowerLaw { c: 1.0, p: 3.0 },
        PhaseFunction::Barrier { r: 1.0, c: 1.0, p: 2.0 },
        PhaseFunction::indicator_ball(1.0, PhaseFunction::quadratic_isotropic(1, 2.0)),
    ];
    for f in phases {
        let p = match f {
            PhaseFunction::PowerLaw { p, .. } => p,
            _ => 2.0,
        };
        let spec = LaminateSpec::new(vec![f.clone()], vec![1.0], p).unwrap();
        for i in -8..=8 {
            let lam = 0.1 * i as f64;
            let v = laminate_1d_vbar(&spec, lam).unwrap();
            let exact = f.value(&Mat::scalar(lam)).to_f64();
            assert!((v - exact).abs() <= 1e-6 * (1.0 + exact), "{f:?} at {lam}: {v} vs {exact}");
        }
    }
}

#[test]
fn laminate_outside_domain_is_a_resolution_error() {
    let spec = LaminateSpec::new(vec![PhaseFunction::indicator_ball(1.0, PhaseFunction::Zero)], vec![1.0], 2.0).unwrap();
    assert!(laminate_1d_vbar(&spec, 0.5).unwrap().abs() < 1e-12);
    assert!(matches!(laminate_1d_vbar(&spec, 2.0), Err(Error::Resolution(_))));
}

#[test]
fn laminate_validation() {
    let q = PhaseFunction::quadratic_isotropic(1, 1.0);
    assert!(LaminateSpec::new(vec![q.clone(), q.clone()], vec![0.5, 0.6], 2.0).is_err());
    assert!(LaminateSpec::new(vec![q.clone()], vec![1.0, 0.0], 2.0).is_err());
    assert!(LaminateSpec::new(vec![PhaseFunction::Zero], vec![1.0], 2.0).is_err());
    assert!(LaminateSpec::new(vec![q], vec![1.0], 1.0).is_err());
}

#[test]
fn constant_values() {
    let lam = Mat::from_slice(1, 2, &[0.0, 2.0]);
    assert_eq!(constant_vbar(&PhaseFunction::quadratic_isotropic(2, 1.0), &lam), ExtReal::Finite(4.0));
    assert_eq!(
        constant_vbar(&PhaseFunction::indicator_ball(1.0, PhaseFunction::Zero), &lam),
        ExtReal::Infinite
    );
    let b = PhaseFunction::Barrier { r: 1.0, c: 1.0, p: 2.0 };
    let v = constant_vbar(&b, &Mat::from_slice(1, 2, &[0.9, 0.0])).finite().unwrap();
    assert!((v - 0.81 / 0.19).abs() < 1e-12);
}

#[test]
fn dense_quadratic_matches_solver_1d() {
    let grid = Grid::new(1, 3.0, 3).unwrap();
    let spec = two_phase(1, PhaseFunction::quadratic_isotropic(1, 1.0), PhaseFunction::quadratic_isotropic(1, 4.0), 2.0);
    let medium = sample(1, 3.0, &[[0.4, 0.0, 0.0]], 0.6);
    let bc = BCSpec::DirichletAffine(Mat::scalar(1.0));
    let o = brute_force_min(&grid, &spec, &medium, bc.clone(), None, 1.0).unwrap();
    assert_eq!(o.free_dims, 2);
    let (_, rep) = minimize_convex(&grid, &spec, &medium, bc, None, 1.0, &tight()).unwrap();
    assert!((o.value - rep.final_energy).abs() <= 1e-8, "{} vs {}", o.value, rep.final_energy);
}

#[test]
fn oracle_matches_solver_in_2d() {
    let lam = Mat::from_slice(1, 2, &[0.7, -0.4]);
    let medium = sample(2, 2.0, &[[0.3, -0.2, 0.0]], 0.6);
    let quad = two_phase(2, PhaseFunction::quadratic_isotropic(2, 1.0), PhaseFunction::quadratic_isotropic(2, 5.0), 2.0);
    let power = two_phase(2, PhaseFunction::PowerLaw { c: 1.0, p: 3.0 }, PhaseFunction::PowerLaw { c: 3.0, p: 3.0 }, 3.0);
    let rigid = two_phase(
        2,
        PhaseFunction::quadratic_isotropic(2, 1.0),
        PhaseFunction::indicator_ball(0.5, PhaseFunction::quadratic_isotropic(2, 1.0)),
        2.0,
    );
    let k = Some(TruncationLevel::new(16.0).unwrap());
    let cases: Vec<(&IntegrandSpec, usize, BCSpec, Option<TruncationLevel>)> = vec![
        (&quad, 3, BCSpec::DirichletAffine(lam), None),
        (&quad, 2, BCSpec::Periodic(lam), None),
        (&quad, 2, BCSpec::MeanZero(lam), None),
        (&quad, 2, BCSpec::Buffer { lambda: lam, eta: 0.3 }, None),
        (&power, 3, BCSpec::DirichletAffine(lam), None),
        (&power, 2, BCSpec::Periodic(lam), None),
        (&rigid, 3, BCSpec::DirichletAffine(lam), k),
        (&rigid, 2, BCSpec::MeanZero(lam), k),
    ];
    for (spec, n, bc, k) in cases {
        let grid = Grid::new(2, 2.0, n).unwrap();
        let name = bc.name();
        let o = brute_force_min(&grid, spec, &medium, bc.clone(), k, 1.0).unwrap();
        assert!(o.free_dims <= MAX_FREE_DIMS);
        let (_, rep) = minimize_convex(&grid, spec, &medium, bc, k, 1.0, &tight()).unwrap();
        assert!(
            (o.value - rep.final_energy).abs() <= 1e-8,
            "{name} n={n}: oracle {} solver {}",
            o.value,
            rep.final_energy
        );
    }
}

#[test]
fn constant_density_minimizer_is_zero() {
    let grid = Grid::new(2, 2.0, 3).unwrap();
    let f = PhaseFunction::quadratic_isotropic(2, 1.5);
    let spec = IntegrandSpec::homogeneous(f.clone(), 2.0, 1, 2, 1.0).unwrap();
    let medium = sample(2, 2.0, &[], 0.5);
    let lam = Mat::from_slice(1, 2, &[1.0, 2.0]);
    let o = brute_force_min(&grid, &spec, &medium, BCSpec::DirichletAffine(lam), None, 1.0).unwrap();
    assert!((o.value - f.value(&lam).to_f64()).abs() < 1e-12);
    assert!(o.values.iter().all(|v| v.abs() < 1e-10));
}

#[test]
fn too_many_unknowns_is_unsupported() {
    let grid = Grid::new(2, 2.0, 4).unwrap();
    let spec = IntegrandSpec::homogeneous(PhaseFunction::quadratic_isotropic(2, 1.0), 2.0, 1, 2, 1.0).unwrap();
    let medium = sample(2, 2.0, &[], 0.5);
    let r = brute_force_min(&grid, &spec, &medium, BCSpec::DirichletAffine(Mat::zeros(1, 2)), None, 1.0);
    assert!(matches!(r, Err(Error::Unsupported(_))));
}

#[test]
fn nonconvex_scan_brackets_multistart_from_below() {
    let grid = Grid::new(1, 2.0, 2).unwrap();
    let medium = sample(1, 2.0, &[[0.5, 0.0, 0.0]], 0.4);
    let nc = NonconvexSpec {
        gamma: 0.5,
        cap: 1.0,
        kind: NonconvexKind::Oscillatory { xi: Mat::scalar(9.0) },
    };
    let spec = two_phase(1, PhaseFunction::quadratic_isotropic(1, 1.0), PhaseFunction::quadratic_isotropic(1, 3.0), 2.0)
        .with_nonconvex(nc)
        .unwrap();
    for lam in [0.3, 0.8, 1.7] {
        let data = Field::affine(&grid, &Mat::scalar(lam));
        let o = brute_force_min(&grid, &spec, &medium, BCSpec::DirichletData(data.clone()), None, 1.0).unwrap();
        assert_eq!(o.free_dims, 1);
        let (_, rep) = solve_nonconvex(&grid, &spec, &medium, &data, None, 6, 3, &tight()).unwrap();
        assert!(rep.final_energy >= o.value - 1e-6, "Λ {lam}: solver {} below oracle {}", rep.final_energy, o.value);
        // Independent scan on a different lattice of the same segment.
        let e = CellEnergy::new(&grid, &spec, &medium, BCSpec::DirichletData(data), None, 1.0)
            .unwrap()
            .with_nonconvex(true);
        let fine = (0..=40_000)
            .map(|i| {
                let s = -4.0 + 8.0 * i as f64 / 40_000.0;
                e.value(&[0.0, s, 0.0]).unwrap().to_f64()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(o.value <= fine + 1e-9, "oracle {} above fine scan {fine}", o.value);
    }
}
