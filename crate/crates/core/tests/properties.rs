//! Property tests over randomly drawn parameters.

use proptest::prelude::*;
use stochhom::cli::{parse_config, PhaseExpr};
use stochhom::grid::{BCSpec, BcKind, CellEnergy, Field, Grid};
use stochhom::homogenize::mean_stderr;
use stochhom::integrands::{yosida, IntegrandSpec, PhaseFunction, TruncationLevel};
use stochhom::microstructure::{parse_sample, sample_hardcore, sample_poisson, write_sample, BoxSpec, PointSample};
use stochhom::reduce::pairwise_sum;
use stochhom::solver::{truncation_sweep, SolverOptions, SweepOptions};
use stochhom::Mat;

fn phase() -> impl Strategy<Value = PhaseFunction> {
    prop_oneof![
        (0.1..5.0f64).prop_map(|a| PhaseFunction::quadratic_isotropic(2, a)),
        (0.1..3.0f64, 0.3..2.0f64).prop_map(|(a, r)| PhaseFunction::indicator_ball(r, PhaseFunction::quadratic_isotropic(2, a))),
        (0.3..2.0f64, 0.5..2.0f64).prop_map(|(r, c)| PhaseFunction::Barrier { r, c, p: 2.0 }),
        (0.5..2.0f64).prop_map(|c| PhaseFunction::PowerLaw { c, p: 2.0 }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn yosida_is_monotone_and_below_phase(f in phase(), x in -3.0..3.0f64, y in -3.0..3.0f64, j in 0..7i32) {
        let lam = Mat::from_slice(1, 2, &[x, y]);
        let k = 4f64.powi(j);
        let (lo, _) = yosida(&f, 2.0, k, &lam).unwrap();
        let (hi, _) = yosida(&f, 2.0, 4.0 * k, &lam).unwrap();
        prop_assert!(lo <= hi + 1e-10 * hi.abs().max(1.0));
        let v = f.value(&lam);
        prop_assert!(v.to_f64() >= hi - 1e-10 * hi.abs().max(1.0));
        prop_assert!(lo >= 0.0);
    }

    #[test]
    fn sample_text_round_trips(seed in any::<u64>(), intensity in 0.0..1.5f64, side in 1.0..8.0f64) {
        let s = sample_poisson(intensity, 0.3, BoxSpec::new(2, side).unwrap(), seed, "prop").unwrap();
        let back: PointSample = parse_sample(&write_sample(&s)).unwrap();
        prop_assert_eq!(back.points, s.points);
        prop_assert_eq!(back.radii, s.radii);
    }

    #[test]
    fn hardcore_distance_holds(seed in any::<u64>(), intensity in 0.0..3.0f64) {
        let s = sample_hardcore(intensity, 0.4, None, BoxSpec::new(2, 6.0).unwrap(), seed, "hc").unwrap();
        prop_assert!(s.min_pair_distance() >= 0.8);
    }

    #[test]
    fn field_text_round_trips(vals in prop::collection::vec(-1e3..1e3f64, 9)) {
        let grid = Grid::new(2, 2.0, 3).unwrap();
        let f = Field::from_values(&grid, 1, BcKind::Periodic, vals).unwrap();
        prop_assert_eq!(Field::parse_text(&f.to_text()).unwrap(), f);
    }

    #[test]
    fn phase_expressions_round_trip(a in 0.01..10.0f64, r in 0.01..5.0f64, c in 0.1..3.0f64) {
        for e in [
            PhaseExpr::Quadratic(a),
            PhaseExpr::Power { c, p: a + 1.0 },
            PhaseExpr::Barrier { r, c, p: 2.0 },
            PhaseExpr::IndicatorBall { r, inner: Box::new(PhaseExpr::Quadratic(a)) },
        ] {
            prop_assert_eq!(PhaseExpr::parse(&e.to_string()).unwrap(), e);
        }
    }

    #[test]
    fn config_round_trips(seed in any::<u64>(), x in -5.0..5.0f64, y in -5.0..5.0f64, n in 1usize..40) {
        let text = format!("run.lambdas = {x:?} {y:?}\nrun.master_seed = {seed}\nrun.realizations = {n}\n");
        let cfg = parse_config(&text).unwrap();
        prop_assert_eq!(parse_config(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn mean_lies_between_extremes(vals in prop::collection::vec(-1e6..1e6f64, 1..50)) {
        let (m, s) = mean_stderr(&vals);
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(m >= lo - 1e-9 && m <= hi + 1e-9);
        prop_assert!(s >= 0.0);
    }

    #[test]
    fn pairwise_sum_is_close_to_exact(vals in prop::collection::vec(-1e3..1e3f64, 0..300)) {
        let exact: f64 = vals.iter().copied().sum();
        let bound = 1e-12 * vals.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        prop_assert!((pairwise_sum(&vals) - exact).abs() <= bound);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Truncated cell energies with a rigid phase grow with `k` on every realization.
    #[test]
    fn truncation_sweep_is_monotone(seed in 0u64..1000, x in 0.3..1.0f64) {
        let spec = IntegrandSpec::new(
            PhaseFunction::quadratic_isotropic(2, 1.0),
            PhaseFunction::indicator_ball(1.0, PhaseFunction::quadratic_isotropic(2, 0.2)),
            2.0,
            1,
            2,
            1.0,
        )
        .unwrap();
        let medium = sample_poisson(0.4, 0.5, BoxSpec::new(2, 3.0).unwrap(), seed, "medium").unwrap();
        let grid = Grid::new(2, 3.0, 6).unwrap();
        let lam = Mat::from_slice(1, 2, &[x, 0.5 * x]);
        let mut e = CellEnergy::new(&grid, &spec, &medium, BCSpec::DirichletAffine(lam), Some(TruncationLevel::new(1.0).unwrap()), 1.0).unwrap();
        let ks: Vec<f64> = (0..5).map(|j| 4f64.powi(j)).collect();
        let opts = SolverOptions::default();
        let r = truncation_sweep(&mut e, &ks, &opts, &SweepOptions::default()).unwrap();
        for w in r.energies.windows(2) {
            prop_assert!(w[1] >= w[0] - 10.0 * opts.tol_e * w[1].abs().max(1.0));
        }
    }
}
