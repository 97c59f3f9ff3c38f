//! Monte Carlo estimation of homogenized energy densities from cell problems.

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::grid::{BCSpec, BcKind, CellEnergy, Field, Grid};
use crate::integrands::{IntegrandSpec, TruncationLevel};
use crate::mat::Mat;
use crate::microstructure::{periodize_in_law, BoxSpec, InclusionIndex, Medium, PointProcess, PointSample};
use crate::reduce::pairwise_sum;
use crate::seed::substream_seed;
use crate::solver::{minimize, solve_nonconvex, truncation_sweep, SolveReport, SolverOptions, SweepOptions};
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    /// Affine Dirichlet data with truncation sweep.
    DirichletTrunc,
    /// Free corrector with zero mean gradient, dilated by `t`.
    Convexification,
    /// Periodic corrector on a sample periodized in law.
    Periodization,
    /// Affine Dirichlet data with a soft `|Λ|^p` zone of width `θ` along the boundary.
    Buffer,
    /// Nonconvex density `W` with convex-corrector boundary data.
    Nonconvex,
}

impl Formula {
    pub const ALL: [Formula; 5] = [
        Formula::DirichletTrunc,
        Formula::Convexification,
        Formula::Periodization,
        Formula::Buffer,
        Formula::Nonconvex,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Formula::DirichletTrunc => "dirichlet_trunc",
            Formula::Convexification => "convexification",
            Formula::Periodization => "periodization",
            Formula::Buffer => "buffer",
            Formula::Nonconvex => "nonconvex",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Formula::ALL.into_iter().find(|f| f.name() == s)
    }
}

/// Boundary condition of the convex corrector feeding the nonconvex stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorrectorBc {
    Periodic,
    Convexification,
}

impl CorrectorBc {
    pub fn name(self) -> &'static str {
        match self {
            CorrectorBc::Periodic => "periodic",
            CorrectorBc::Convexification => "convexification",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "periodic" => Some(CorrectorBc::Periodic),
            "convexification" => Some(CorrectorBc::Convexification),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrectorConfig {
    /// Side of the cube on which the corrector is computed (`≥ R`).
    pub r_outer: Option<f64>,
    pub bc: CorrectorBc,
}

impl Default for CorrectorConfig {
    fn default() -> Self {
        CorrectorConfig {
            r_outer: None,
            bc: CorrectorBc::Periodic,
        }
    }
}

/// One cell problem template; realizations differ only by their seed index.
#[derive(Clone, Debug, PartialEq)]
pub struct CellProblem {
    pub lambda: Mat,
    pub formula: Formula,
    pub side: f64,
    pub cells_per_unit: f64,
    pub k_schedule: Vec<f64>,
    pub t: f64,
    /// Buffer width `θ` (buffer formula only).
    pub theta: f64,
}

impl CellProblem {
    pub fn validate(&self, spec: &IntegrandSpec) -> Result<()> {
        if self.lambda.rows() != spec.m || self.lambda.cols() != spec.d {
            return Err(Error::param("Λ has the wrong shape for the integrand"));
        }
        if !(self.t > 0.0 && self.t <= 1.0) {
            return Err(Error::param(format!("t = {} not in (0, 1]", self.t)));
        }
        if self.formula == Formula::Buffer && !(self.theta > 0.0) {
            return Err(Error::param("buffer formula needs θ > 0"));
        }
        if self.k_schedule.is_empty() || self.k_schedule.windows(2).any(|w| !(w[1] > w[0])) || self.k_schedule[0] <= 0.0
        {
            return Err(Error::param("k schedule must be positive and strictly increasing"));
        }
        self.grid().map(|_| ())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::with_density(self.lambda.cols(), self.side, self.cells_per_unit)
    }

    pub fn n(&self) -> usize {
        (self.cells_per_unit * self.side).round() as usize
    }
}

/// Everything shared by the realizations of an experiment.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub spec: IntegrandSpec,
    pub process: PointProcess,
    pub solver: SolverOptions,
    pub sweep: SweepOptions,
    pub master_seed: u64,
    pub restarts: usize,
    pub corrector: CorrectorConfig,
}

/// One row of the per-solve table.
#[derive(Clone, Debug)]
pub struct SolveRecord {
    pub k: Option<f64>,
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
    pub seconds: f64,
}

impl SolveRecord {
    fn from_report(k: Option<f64>, r: &SolveReport) -> Self {
        SolveRecord {
            k,
            value: r.final_energy,
            converged: r.converged,
            iterations: r.iterations,
            seconds: r.wall_time,
        }
    }
}

/// Outcome of one realization.
#[derive(Clone, Debug)]
pub struct RealizationResult {
    pub seed_index: usize,
    /// Stabilized (or final) cell value.
    pub value: f64,
    pub stabilized: bool,
    pub diverged: bool,
    pub solves: Vec<SolveRecord>,
}

impl RealizationResult {
    /// Energies of the truncation sweep, in schedule order.
    pub fn energies(&self) -> Vec<f64> {
        self.solves.iter().map(|s| s.value).collect()
    }
}

#[derive(Clone, Debug)]
pub struct HomogEstimate {
    pub problem: CellProblem,
    pub realizations: Vec<RealizationResult>,
    /// Mean over non-divergent realizations; `+∞` when none is finite.
    pub mean: ExtReal,
    pub stderr: f64,
    /// Number of realizations entering the mean.
    pub n: usize,
    pub diverged_count: usize,
    /// More than half of the realizations diverged.
    pub infeasible: bool,
}

impl HomogEstimate {
    /// Values entering the mean.
    pub fn values(&self) -> Vec<f64> {
        self.realizations.iter().filter(|r| !r.diverged).map(|r| r.value).collect()
    }

    fn aggregate(problem: CellProblem, realizations: Vec<RealizationResult>) -> Self {
        let vals: Vec<f64> = realizations.iter().filter(|r| !r.diverged).map(|r| r.value).collect();
        let n = vals.len();
        let diverged_count = realizations.len() - n;
        let (mean, stderr) = mean_stderr(&vals);
        HomogEstimate {
            problem,
            infeasible: 2 * diverged_count > realizations.len(),
            realizations,
            mean: if n == 0 { ExtReal::Infinite } else { ExtReal::Finite(mean) },
            stderr,
            n,
            diverged_count,
        }
    }
}

/// Sample mean and standard error (`sample std / √N`, zero for `N ≤ 1`).
pub fn mean_stderr(vals: &[f64]) -> (f64, f64) {
    let n = vals.len();
    if n == 0 {
        return (f64::NAN, 0.0);
    }
    let mean = pairwise_sum(vals) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = vals.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

impl Experiment {
    /// Seed and label of realization `i`; shared by all formulas, `k` and `t`.
    pub fn realization_seed(&self, i: usize) -> u64 {
        substream_seed(self.master_seed, "realization", &[i as i64])
    }

    /// The sample of realization `i` on `Q_R`.
    pub fn draw(&self, dim: usize, side: f64, i: usize) -> Result<PointSample> {
        self.process.sample(BoxSpec::new(dim, side)?, self.realization_seed(i), "medium")
    }

    /// The sample seen by the solver; a periodized sample lives on the torus.
    fn medium(&self, dim: usize, side: f64, i: usize, periodic: bool) -> Result<PointSample> {
        let s = self.draw(dim, side, i)?;
        if periodic {
            Ok(periodize_in_law(&self.process, &s)?.base().clone())
        } else {
            Ok(s)
        }
    }

    /// Truncation levels actually needed: only infinite-valued phases are truncated.
    fn effective_schedule(&self, problem: &CellProblem) -> Vec<f64> {
        if self.spec.has_infinite_phase() {
            problem.k_schedule.clone()
        } else {
            vec![*problem.k_schedule.last().expect("validated schedule")]
        }
    }

    fn convex_bc(problem: &CellProblem) -> BCSpec {
        let l = problem.lambda;
        match problem.formula {
            Formula::DirichletTrunc => BCSpec::DirichletAffine(l),
            Formula::Convexification => BCSpec::MeanZero(l),
            Formula::Periodization => BCSpec::Periodic(l),
            Formula::Buffer => BCSpec::Buffer {
                lambda: l,
                eta: problem.theta,
            },
            Formula::Nonconvex => unreachable!("nonconvex problems have no convex boundary condition"),
        }
    }

    fn sweep_on(
        &self,
        grid: &Grid,
        medium: &dyn Medium,
        bc: BCSpec,
        t: f64,
        ks: &[f64],
    ) -> Result<(Vec<SolveRecord>, bool, bool, f64, Field)> {
        let mut e = CellEnergy::new(grid, &self.spec, medium, bc, None, t)?;
        if ks.len() == 1 {
            e.set_truncation(Some(TruncationLevel::new(ks[0])?));
            let (f, rep) = minimize(&e, None, &self.solver)?;
            let rec = SolveRecord::from_report(Some(ks[0]), &rep);
            return Ok((vec![rec], true, false, rep.final_energy, f));
        }
        let r = truncation_sweep(&mut e, ks, &self.solver, &self.sweep)?;
        let recs = r
            .reports
            .iter()
            .zip(&r.params)
            .map(|(rep, &k)| SolveRecord::from_report(Some(k), rep))
            .collect();
        let value = r.last_energy();
        Ok((recs, r.stabilized, r.diverged, value, r.field))
    }

    /// Convex cell value of realization `i`.
    pub fn solve_convex(&self, problem: &CellProblem, i: usize) -> Result<RealizationResult> {
        let grid = problem.grid()?;
        let sample = self.medium(problem.lambda.cols(), problem.side, i, problem.formula == Formula::Periodization)?;
        let index = InclusionIndex::new(&sample);
        let ks = self.effective_schedule(problem);
        let (solves, stabilized, diverged, value, _) =
            self.sweep_on(&grid, &index, Self::convex_bc(problem), problem.t, &ks)?;
        Ok(RealizationResult {
            seed_index: i,
            value,
            stabilized,
            diverged,
            solves,
        })
    }

    /// Nonconvex cell value of realization `i`: convex corrector on
    /// `Q_{R_outer}`, then a multistart solve for `W` on `Q_R` with data
    /// `t(Λx + φ_Λ)`.
    pub fn solve_nonconvex_cell(&self, problem: &CellProblem, i: usize) -> Result<RealizationResult> {
        if self.spec.nonconvex.is_none() {
            return Err(Error::param("nonconvex formula needs integrand.gamma and a nonconvex kind"));
        }
        let d = problem.lambda.cols();
        let r_outer = self.corrector.r_outer.unwrap_or(problem.side);
        if r_outer < problem.side {
            return Err(Error::param(format!("corrector cube {r_outer} smaller than the cell {}", problem.side)));
        }
        let periodic = self.corrector.bc == CorrectorBc::Periodic;
        let sample = self.medium(d, r_outer, i, periodic)?;
        let index = InclusionIndex::new(&sample);
        let outer = Grid::with_density(d, r_outer, problem.cells_per_unit)?;
        let bc = if periodic {
            BCSpec::Periodic(problem.lambda)
        } else {
            BCSpec::MeanZero(problem.lambda)
        };
        let ks = self.effective_schedule(problem);
        let (mut solves, _, diverged, _, phi) = self.sweep_on(&outer, &index, bc, 1.0, &ks)?;
        if diverged {
            return Ok(RealizationResult {
                seed_index: i,
                value: solves.last().map_or(f64::NAN, |s| s.value),
                stabilized: false,
                diverged: true,
                solves,
            });
        }
        let inner = problem.grid()?;
        let mut g = Field::zeros(&inner, self.spec.m, BcKind::Free);
        for node in 0..inner.node_count(false) {
            let x = inner.node_coords(node, false);
            let corr = phi.interpolate(&x);
            for (c, cv) in corr.iter().enumerate() {
                let mut v = *cv;
                for a in 0..d {
                    v += problem.lambda[(c, a)] * x[a];
                }
                g.values_mut()[node * self.spec.m + c] = problem.t * v;
            }
        }
        let k = if self.spec.has_infinite_phase() {
            Some(TruncationLevel::new(*ks.last().expect("schedule"))?)
        } else {
            None
        };
        let seed = substream_seed(self.master_seed, "restarts", &[i as i64]);
        let (_, rep) = solve_nonconvex(&inner, &self.spec, &index, &g, k, self.restarts, seed, &self.solver)?;
        solves.push(SolveRecord::from_report(k.map(|k| k.get()), &rep));
        Ok(RealizationResult {
            seed_index: i,
            value: rep.final_energy,
            stabilized: true,
            diverged: false,
            solves,
        })
    }

    pub fn solve_realization(&self, problem: &CellProblem, i: usize) -> Result<RealizationResult> {
        problem.validate(&self.spec)?;
        match problem.formula {
            Formula::Nonconvex => self.solve_nonconvex_cell(problem, i),
            _ => self.solve_convex(problem, i),
        }
    }
}

/// Runs realizations `0..n` concurrently into indexed slots and aggregates.
pub fn estimate(exp: &Experiment, problem: &CellProblem, n: usize) -> Result<HomogEstimate> {
    if n == 0 {
        return Err(Error::param("need at least one realization"));
    }
    problem.validate(&exp.spec)?;
    let slots: Vec<Result<RealizationResult>> =
        (0..n).into_par_iter().map(|i| exp.solve_realization(problem, i)).collect();
    let realizations = slots.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(HomogEstimate::aggregate(problem.clone(), realizations))
}

/// `V̄(Λ)` by one of the convex formulas.
pub fn estimate_vbar(exp: &Experiment, problem: &CellProblem, n: usize) -> Result<HomogEstimate> {
    if problem.formula == Formula::Nonconvex {
        return Err(Error::param("estimate_vbar takes a convex formula"));
    }
    estimate(exp, problem, n)
}

/// `W̄(Λ)` through the nonconvex formula.
pub fn estimate_wbar(exp: &Experiment, problem: &CellProblem, n: usize) -> Result<HomogEstimate> {
    let mut p = problem.clone();
    p.formula = Formula::Nonconvex;
    estimate(exp, &p, n)
}

/// Midpoint convexity check on three estimates over identical seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexityProbe {
    pub midpoint: f64,
    pub chord: f64,
    pub combined_stderr: f64,
    pub margin: f64,
    pub pass: bool,
}

/// Passes when `V̄(mid) ≤ (V̄(Λ₁) + V̄(Λ₂))/2 + 3σ + margin`, where `σ` adds
/// the midpoint standard error to the mean of the endpoint ones.
pub fn convexity_probe(
    e1: &HomogEstimate,
    e2: &HomogEstimate,
    mid: &HomogEstimate,
    mesh_margin: f64,
) -> Result<ConvexityProbe> {
    let seeds = |e: &HomogEstimate| e.realizations.iter().map(|r| r.seed_index).collect::<Vec<_>>();
    if seeds(e1) != seeds(e2) || seeds(e1) != seeds(mid) {
        return Err(Error::param("convexity probe needs identical seed sets"));
    }
    let combined = mid.stderr + 0.5 * (e1.stderr + e2.stderr);
    let (m, a, b) = (mid.mean, e1.mean, e2.mean);
    let chord = match (a, b) {
        (ExtReal::Finite(a), ExtReal::Finite(b)) => 0.5 * (a + b),
        _ => f64::INFINITY,
    };
    let midpoint = m.to_f64();
    let pass = chord.is_infinite() || midpoint <= chord + 3.0 * combined + mesh_margin;
    Ok(ConvexityProbe {
        midpoint,
        chord,
        combined_stderr: combined,
        margin: mesh_margin,
        pass,
    })
}

#[derive(Clone, Debug)]
pub struct RSweep {
    pub estimates: Vec<HomogEstimate>,
    /// Fitted `α` in `|mean(R) − mean(R_max)| ≈ C R^{−α}` (descriptive only).
    pub rate: Option<f64>,
}

/// Estimates over increasing cube sides at fixed mesh density.
pub fn r_sweep(exp: &Experiment, template: &CellProblem, sides: &[f64], n: usize) -> Result<RSweep> {
    if sides.is_empty() || sides.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("R list must be strictly increasing"));
    }
    let mut estimates = Vec::with_capacity(sides.len());
    for &r in sides {
        let mut p = template.clone();
        p.side = r;
        estimates.push(estimate(exp, &p, n)?);
    }
    let rate = fit_rate(
        sides,
        &estimates.iter().map(|e| e.mean.to_f64()).collect::<Vec<_>>(),
    );
    Ok(RSweep { estimates, rate })
}

/// Default dilations of a t-sweep.
pub const DEFAULT_T_SCHEDULE: [f64; 3] = [0.9, 0.99, 1.0];

#[derive(Clone, Debug)]
pub struct TSweep {
    pub estimates: Vec<HomogEstimate>,
    /// Mean at the largest `t` whose estimate is feasible.
    pub value: Option<f64>,
}

/// Estimates over increasing dilations `t ↑ 1`.
pub fn t_sweep(exp: &Experiment, template: &CellProblem, ts: &[f64], n: usize) -> Result<TSweep> {
    if ts.is_empty() || ts.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("t schedule must be strictly increasing"));
    }
    let mut estimates = Vec::with_capacity(ts.len());
    for &t in ts {
        let mut p = template.clone();
        p.t = t;
        estimates.push(estimate(exp, &p, n)?);
    }
    let value = estimates
        .iter()
        .rev()
        .find(|e| !e.infeasible)
        .and_then(|e| e.mean.finite());
    Ok(TSweep { estimates, value })
}

/// Least-squares slope of `log|m(R) − m(R_max)|` against `−log R`.
pub fn fit_rate(sides: &[f64], means: &[f64]) -> Option<f64> {
    let last = *means.last()?;
    let pts: Vec<(f64, f64)> = sides
        .iter()
        .zip(means)
        .take(sides.len() - 1)
        .filter_map(|(&r, &m)| {
            let gap = (m - last).abs();
            (gap > 0.0 && gap.is_finite()).then(|| (r.ln(), gap.ln()))
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let xm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - xm) * (p.0 - xm)).sum();
    Some(-sxy / sxx)
}

#[cfg(test)]
mod tests;
