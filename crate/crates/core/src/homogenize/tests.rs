use super::*;
use crate::integrands::{NonconvexKind, NonconvexSpec, PhaseFunction};

fn experiment(spec: IntegrandSpec, process: PointProcess) -> Experiment {
    Experiment {
        spec,
        process,
        solver: SolverOptions::default(),
        sweep: SweepOptions::default(),
        master_seed: 17,
        restarts: 2,
        corrector: CorrectorConfig::default(),
    }
}

fn problem(lambda: Mat, formula: Formula, side: f64, cpu: f64) -> CellProblem {
    CellProblem {
        lambda,
        formula,
        side,
        cells_per_unit: cpu,
        k_schedule: vec![1.0, 10.0, 100.0],
        t: 1.0,
        theta: 1.0,
    }
}

fn laminate() -> PointProcess {
    PointProcess::Lattice {
        spacing: 1.0,
        radius: 0.25,
        offset: 0.25,
    }
}

#[test]
fn constant_density_is_exact_for_every_formula() {
    let spec = IntegrandSpec::homogeneous(PhaseFunction::quadratic_isotropic(2, 1.0), 2.0, 1, 2, 1.0).unwrap();
    let exp = experiment(spec, PointProcess::Poisson { intensity: 0.3, radius: 0.5 });
    let lam = Mat::from_slice(1, 2, &[0.6, -1.1]);
    for f in [Formula::DirichletTrunc, Formula::Convexification, Formula::Periodization, Formula::Buffer] {
        let e = estimate_vbar(&exp, &problem(lam, f, 4.0, 2.0), 3).unwrap();
        let m = e.mean.finite().unwrap();
        assert!((m - lam.norm_sq()).abs() <= 1e-12, "{f:?}: {m}");
        assert_eq!(e.stderr, 0.0);
        assert_eq!((e.n, e.diverged_count, e.infeasible), (3, 0, false));
    }
}

#[test]
fn laminate_periodization_gives_harmonic_mean() {
    let spec = IntegrandSpec::new(
        PhaseFunction::quadratic_isotropic(1, 1.0),
        PhaseFunction::quadratic_isotropic(1, 4.0),
        2.0,
        1,
        1,
        1.0,
    )
    .unwrap();
    let exp = experiment(spec, laminate());
    for side in [2.0, 4.0] {
        let e = estimate_vbar(&exp, &problem(Mat::scalar(1.0), Formula::Periodization, side, 4.0), 1).unwrap();
        let m = e.mean.finite().unwrap();
        assert!((m - 1.6).abs() <= 1e-6, "R = {side}: {m}");
    }
}

#[test]
fn dirichlet_dominates_convexification_per_realization() {
    let spec = IntegrandSpec::new(
        PhaseFunction::quadratic_isotropic(2, 1.0),
        PhaseFunction::quadratic_isotropic(2, 5.0),
        2.0,
        1,
        2,
        1.0,
    )
    .unwrap();
    let exp = experiment(spec, PointProcess::Poisson { intensity: 0.4, radius: 0.5 });
    let lam = Mat::from_slice(1, 2, &[1.0, 0.3]);
    let d = estimate_vbar(&exp, &problem(lam, Formula::DirichletTrunc, 4.0, 3.0), 3).unwrap();
    let c = estimate_vbar(&exp, &problem(lam, Formula::Convexification, 4.0, 3.0), 3).unwrap();
    for (a, b) in d.realizations.iter().zip(&c.realizations) {
        assert_eq!(a.seed_index, b.seed_index);
        assert!(a.value >= b.value * (1.0 - 1e-8), "{} < {}", a.value, b.value);
    }
}

#[test]
fn zero_gamma_reduces_wbar_to_vbar() {
    let base = IntegrandSpec::new(
        PhaseFunction::quadratic_isotropic(2, 1.0),
        PhaseFunction::quadratic_isotropic(2, 3.0),
        2.0,
        1,
        2,
        1.0,
    )
    .unwrap();
    let nc = NonconvexSpec {
        gamma: 0.0,
        cap: 1.0,
        kind: NonconvexKind::Oscillatory {
            xi: Mat::from_slice(1, 2, &[3.0, 1.0]),
        },
    };
    let mut exp = experiment(base.with_nonconvex(nc).unwrap(), PointProcess::Poisson { intensity: 0.4, radius: 0.5 });
    exp.corrector.bc = CorrectorBc::Convexification;
    let lam = Mat::from_slice(1, 2, &[0.7, 0.2]);
    let v = estimate_vbar(&exp, &problem(lam, Formula::Convexification, 3.0, 3.0), 2).unwrap();
    let w = estimate_wbar(&exp, &problem(lam, Formula::Nonconvex, 3.0, 3.0), 2).unwrap();
    for (a, b) in v.values().iter().zip(w.values()) {
        assert!((a - b).abs() <= 10.0 * exp.solver.tol_e * a, "{a} vs {b}");
    }
}

#[test]
fn rigid_inclusion_on_boundary_is_flagged_infeasible() {
    let spec = IntegrandSpec::new(
        PhaseFunction::quadratic_isotropic(2, 1.0),
        PhaseFunction::indicator_ball(1.0, PhaseFunction::Zero),
        2.0,
        1,
        2,
        1.0,
    )
    .unwrap();
    // A lattice with spacing R puts an inclusion on every corner of Q_R.
    let exp = experiment(
        spec,
        PointProcess::Lattice {
            spacing: 4.0,
            radius: 1.0,
            offset: 2.0,
        },
    );
    let mut p = problem(Mat::from_slice(1, 2, &[2.0, 2.0]), Formula::DirichletTrunc, 4.0, 2.0);
    p.k_schedule = (0..6).map(|j| 4f64.powi(j)).collect();
    let e = estimate_vbar(&exp, &p, 2).unwrap();
    assert!(e.infeasible && e.mean == ExtReal::Infinite, "{:?}", e.realizations[0].energies());
}

#[test]
fn r_sweep_on_constant_density() {
    let spec = IntegrandSpec::homogeneous(PhaseFunction::quadratic_isotropic(1, 2.0), 2.0, 1, 1, 1.0).unwrap();
    let exp = experiment(spec, laminate());
    let r = r_sweep(&exp, &problem(Mat::scalar(1.5), Formula::DirichletTrunc, 1.0, 4.0), &[2.0, 4.0, 8.0], 1).unwrap();
    for e in &r.estimates {
        assert!((e.mean.to_f64() - 4.5).abs() < 1e-12);
    }
    assert_eq!(r.rate, None);
    let rate = fit_rate(&[2.0, 4.0, 8.0, 16.0], &[1.0 + 1.0 / 4.0, 1.0 + 1.0 / 16.0, 1.0 + 1.0 / 64.0, 1.0]).unwrap();
    assert!(rate > 1.5 && rate < 2.5, "{rate}");
}

#[test]
fn convexity_probe_contract() {
    let spec = IntegrandSpec::homogeneous(PhaseFunction::quadratic_isotropic(1, 1.0), 2.0, 1, 1, 1.0).unwrap();
    let exp = experiment(spec, laminate());
    let est = |l: f64| estimate_vbar(&exp, &problem(Mat::scalar(l), Formula::DirichletTrunc, 2.0, 2.0), 2).unwrap();
    let (a, b, m) = (est(0.5), est(1.5), est(1.0));
    let probe = convexity_probe(&a, &b, &m, 0.0).unwrap();
    assert!(probe.pass && probe.midpoint <= probe.chord);
    // Swapping the midpoint for a large value must fail.
    let bad = convexity_probe(&a, &m, &b, 0.0).unwrap();
    assert!(!bad.pass);
    let fewer = estimate_vbar(&exp, &problem(Mat::scalar(1.0), Formula::DirichletTrunc, 2.0, 2.0), 1).unwrap();
    assert!(convexity_probe(&a, &b, &fewer, 0.0).is_err());
}

#[test]
fn mean_stderr_basics() {
    assert_eq!(mean_stderr(&[2.0]), (2.0, 0.0));
    let (m, s) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(m, 2.5);
    assert!((s - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
}

#[test]
fn t_sweep_reports_largest_feasible_dilation() {
    let spec = IntegrandSpec::homogeneous(PhaseFunction::quadratic_isotropic(1, 1.0), 2.0, 1, 1, 1.0).unwrap();
    let exp = experiment(spec, laminate());
    let s = t_sweep(&exp, &problem(Mat::scalar(2.0), Formula::Convexification, 2.0, 2.0), &DEFAULT_T_SCHEDULE, 1).unwrap();
    for (e, t) in s.estimates.iter().zip(DEFAULT_T_SCHEDULE) {
        assert!((e.mean.to_f64() - 4.0 * t * t).abs() < 1e-12);
    }
    assert_eq!(s.value, Some(4.0));
    assert!(t_sweep(&exp, &problem(Mat::scalar(2.0), Formula::Convexification, 2.0, 2.0), &[1.0, 0.9], 1).is_err());
}
