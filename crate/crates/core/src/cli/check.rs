//! Built-in invariant suite behind the `check` subcommand.

use crate::error::Result;
use crate::grid::{BCSpec, CellEnergy, Grid};
use crate::homogenize::{estimate, CellProblem, CorrectorConfig, Experiment, Formula};
use crate::integrands::{yosida, IntegrandSpec, PhaseFunction};
use crate::mat::Mat;
use crate::microstructure::{periodize_in_law, BoxSpec, PointProcess, PointSample};
use crate::oracle::{brute_force_min, laminate_1d_vbar, LaminateSpec};
use crate::seed::substream_rng;
use crate::solver::{minimize_convex, SolverOptions, SweepOptions};
use rand::Rng;

use super::config::{parse_config, ExperimentConfig};

pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

type Check = fn() -> Result<(bool, String)>;

const CHECKS: &[(&str, Check)] = &[
    ("constant density, all formulas", constant_density),
    ("1D laminate against duality oracle", laminate),
    ("solver against brute force", brute_force),
    ("boundary condition ordering", bc_ordering),
    ("truncation monotone in k", truncation_monotone),
    ("energy gradient by finite differences", gradient_fd),
    ("poisson periodization is exact on the box", periodization),
    ("config round trip", config_round_trip),
    ("estimates are reproducible", reproducible),
];

pub fn run_checks() -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|(name, f)| match f() {
            Ok((pass, detail)) => CheckResult { name, pass, detail },
            Err(e) => CheckResult {
                name,
                pass: false,
                detail: format!("error: {e}"),
            },
        })
        .collect()
}

fn experiment(spec: IntegrandSpec, process: PointProcess) -> Experiment {
    Experiment {
        spec,
        process,
        solver: SolverOptions::default(),
        sweep: SweepOptions::default(),
        master_seed: 3,
        restarts: 0,
        corrector: CorrectorConfig::default(),
    }
}

fn problem(lambda: Mat, formula: Formula, side: f64, cpu: f64) -> CellProblem {
    CellProblem {
        lambda,
        formula,
        side,
        cells_per_unit: cpu,
        k_schedule: vec![100.0],
        t: 1.0,
        theta: 1.0,
    }
}

fn quad2(a: f64, b: f64) -> Result<IntegrandSpec> {
    IntegrandSpec::new(
        PhaseFunction::quadratic_isotropic(2, a),
        PhaseFunction::quadratic_isotropic(2, b),
        2.0,
        1,
        2,
        1.0,
    )
}

fn constant_density() -> Result<(bool, String)> {
    let exp = experiment(quad2(1.0, 1.0)?, PointProcess::Poisson { intensity: 0.3, radius: 0.5 });
    let lam = Mat::from_slice(1, 2, &[0.6, 0.8]);
    let mut worst: f64 = 0.0;
    for f in [Formula::DirichletTrunc, Formula::Convexification, Formula::Periodization, Formula::Buffer] {
        let e = estimate(&exp, &problem(lam, f, 2.0, 2.0), 1)?;
        worst = worst.max((e.mean.to_f64() - 1.0).abs());
    }
    Ok((worst <= 1e-6, format!("max deviation {worst:.2e}")))
}

fn laminate() -> Result<(bool, String)> {
    let q = |a| PhaseFunction::quadratic_isotropic(1, a);
    let dual = laminate_1d_vbar(&LaminateSpec::new(vec![q(1.0), q(4.0)], vec![0.5, 0.5], 2.0)?, 1.0)?;
    let spec = IntegrandSpec::new(q(1.0), q(4.0), 2.0, 1, 1, 1.0)?;
    let exp = experiment(
        spec,
        PointProcess::Lattice {
            spacing: 1.0,
            radius: 0.25,
            offset: 0.25,
        },
    );
    let fe = estimate(&exp, &problem(Mat::scalar(1.0), Formula::Periodization, 2.0, 4.0), 1)?.mean.to_f64();
    let ok = (dual - 1.6).abs() <= 1e-6 && (fe - 1.6).abs() <= 1e-6;
    Ok((ok, format!("duality {dual:.10}, finite elements {fe:.10}")))
}

fn one_inclusion(dim: usize, side: f64, c: [f64; 3], r: f64) -> Result<PointSample> {
    Ok(PointSample {
        points: vec![c],
        radii: vec![r],
        ..PointSample::empty(BoxSpec::new(dim, side)?)
    })
}

fn brute_force() -> Result<(bool, String)> {
    let grid = Grid::new(1, 3.0, 3)?;
    let q = |a| PhaseFunction::quadratic_isotropic(1, a);
    let spec = IntegrandSpec::new(q(1.0), q(4.0), 2.0, 1, 1, 1.0)?;
    let medium = one_inclusion(1, 3.0, [0.4, 0.0, 0.0], 0.6)?;
    let bc = BCSpec::DirichletAffine(Mat::scalar(1.0));
    let oracle = brute_force_min(&grid, &spec, &medium, bc.clone(), None, 1.0)?.value;
    let opts = SolverOptions {
        tol_e: 1e-14,
        tol_g: 1e-11,
        ..SolverOptions::default()
    };
    let (_, rep) = minimize_convex(&grid, &spec, &medium, bc, None, 1.0, &opts)?;
    let gap = (oracle - rep.final_energy).abs();
    Ok((gap <= 1e-8, format!("|solver − oracle| = {gap:.2e}")))
}

fn bc_ordering() -> Result<(bool, String)> {
    let grid = Grid::new(2, 2.0, 4)?;
    let spec = quad2(1.0, 6.0)?;
    let medium = one_inclusion(2, 2.0, [0.3, -0.2, 0.0], 0.5)?;
    let lam = Mat::from_slice(1, 2, &[1.0, 0.4]);
    let opts = SolverOptions::default();
    let solve = |bc| -> Result<f64> { Ok(minimize_convex(&grid, &spec, &medium, bc, None, 1.0, &opts)?.1.final_energy) };
    let (d, p, z) = (
        solve(BCSpec::DirichletAffine(lam))?,
        solve(BCSpec::Periodic(lam))?,
        solve(BCSpec::MeanZero(lam))?,
    );
    let tol = 10.0 * opts.tol_e * d;
    Ok((d >= p - tol && p >= z - tol, format!("{d:.8} ≥ {p:.8} ≥ {z:.8}")))
}

fn truncation_monotone() -> Result<(bool, String)> {
    let b = PhaseFunction::indicator_ball(1.0, PhaseFunction::quadratic_isotropic(2, 1.0));
    let lam = Mat::from_slice(1, 2, &[1.5, 0.5]);
    let mut prev = f64::NEG_INFINITY;
    let mut ok = true;
    for j in 0..=6 {
        let v = yosida(&b, 2.0, 4f64.powi(j), &lam)?.0;
        ok &= v >= prev;
        prev = v;
    }
    Ok((ok, format!("V_k at k = 4^6: {prev:.6}")))
}

fn gradient_fd() -> Result<(bool, String)> {
    let grid = Grid::new(2, 2.0, 3)?;
    let spec = IntegrandSpec::new(
        PhaseFunction::PowerLaw { c: 1.0, p: 3.0 },
        PhaseFunction::indicator_ball(0.8, PhaseFunction::quadratic_isotropic(2, 1.0)),
        3.0,
        1,
        2,
        1.0,
    )?;
    let medium = one_inclusion(2, 2.0, [0.0, 0.0, 0.0], 0.6)?;
    let k = Some(crate::integrands::TruncationLevel::new(10.0)?);
    let e = CellEnergy::new(&grid, &spec, &medium, BCSpec::Periodic(Mat::from_slice(1, 2, &[0.7, 0.2])), k, 1.0)?;
    let mut rng = substream_rng(9, "check-fd", &[]);
    let x: Vec<f64> = (0..e.len()).map(|_| rng.random_range(-0.3..0.3)).collect();
    let (_, g) = e.value_grad(&x)?.expect("finite energy");
    let mut worst: f64 = 0.0;
    let h = 1e-6;
    for i in 0..x.len() {
        let (mut a, mut b) = (x.clone(), x.clone());
        a[i] += h;
        b[i] -= h;
        let fd = (e.value(&a)?.to_f64() - e.value(&b)?.to_f64()) / (2.0 * h);
        worst = worst.max((fd - g[i]).abs() / g[i].abs().max(1e-3));
    }
    Ok((worst <= 1e-5, format!("max relative error {worst:.2e}")))
}

fn periodization() -> Result<(bool, String)> {
    let process = PointProcess::Poisson { intensity: 0.5, radius: 0.4 };
    for seed in 0..20 {
        let s = process.sample(BoxSpec::new(2, 5.0)?, seed, "check")?;
        let per = periodize_in_law(&process, &s)?;
        let inside = per.points_in_cube(5.0);
        if inside.len() != s.len() || s.points.iter().any(|p| !inside.contains(p)) {
            return Ok((false, format!("seed {seed} differs")));
        }
    }
    Ok((true, "20 seeds".into()))
}

fn config_round_trip() -> Result<(bool, String)> {
    let cfg = ExperimentConfig {
        run: super::config::RunConfig {
            lambdas: vec![Mat::from_slice(1, 2, &[0.6, 0.8]), Mat::from_slice(1, 2, &[3.0, 0.0])],
            ..ExperimentConfig::default().run
        },
        ..ExperimentConfig::default()
    };
    let again = parse_config(&cfg.to_text())?;
    Ok((again == cfg, String::new()))
}

fn reproducible() -> Result<(bool, String)> {
    let exp = experiment(quad2(1.0, 5.0)?, PointProcess::Poisson { intensity: 0.4, radius: 0.5 });
    let p = problem(Mat::from_slice(1, 2, &[1.0, 0.0]), Formula::Periodization, 3.0, 2.0);
    let a = estimate(&exp, &p, 3)?.values();
    let b = estimate(&exp, &p, 3)?.values();
    let same = a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits());
    Ok((same, format!("{} realizations", a.len())))
}
