//! Minimization of discrete cell energies.

mod lbfgs;

pub use lbfgs::{minimize, SolveReport, SolverOptions};

use crate::error::{Error, Result};
use crate::grid::{BCSpec, BcKind, CellEnergy, Field, Grid};
use crate::integrands::{IntegrandSpec, TruncationLevel};
use crate::microstructure::Medium;
use crate::seed::substream_rng;
use rand::Rng;

/// Convex cell solve from `φ = 0`.
pub fn minimize_convex(
    grid: &Grid,
    spec: &IntegrandSpec,
    medium: &dyn Medium,
    bc: BCSpec,
    k: Option<TruncationLevel>,
    t: f64,
    opts: &SolverOptions,
) -> Result<(Field, SolveReport)> {
    let e = CellEnergy::new(grid, spec, medium, bc, k, t)?;
    minimize(&e, None, opts)
}

/// Default truncation schedule `1, 4, …, 4^8`.
pub fn default_k_schedule() -> Vec<f64> {
    (0..=8).map(|j| 4f64.powi(j)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOptions {
    pub stab_tol: f64,
    pub warm_start: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            stab_tol: 1e-4,
            warm_start: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    /// Truncation levels actually solved.
    pub params: Vec<f64>,
    pub energies: Vec<f64>,
    pub reports: Vec<SolveReport>,
    pub stabilized: bool,
    pub diverged: bool,
    /// Final energy, corrected by one Richardson step (`O(1/k)` error model) when stabilized.
    pub extrapolated_value: f64,
    /// Minimizer at the last level.
    pub field: Field,
}

impl SweepResult {
    pub fn last_energy(&self) -> f64 {
        *self.energies.last().expect("nonempty sweep")
    }

    pub fn all_converged(&self) -> bool {
        self.reports.iter().all(|r| r.converged)
    }
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// True when the last three energies grow like `c·k` with `c > stab_tol · k0`:
/// the least-squares slope is above the threshold and the last increment
/// outgrows the previous one at least half as fast as `k` does.
pub fn detect_divergence(ks: &[f64], es: &[f64], stab_tol: f64) -> bool {
    let n = ks.len();
    if n < 3 {
        return false;
    }
    let (k, e) = (&ks[n - 3..], &es[n - 3..]);
    let km = k.iter().sum::<f64>() / 3.0;
    let em = e.iter().sum::<f64>() / 3.0;
    let sxy: f64 = k.iter().zip(e).map(|(x, y)| (x - km) * (y - em)).sum();
    let sxx: f64 = k.iter().map(|x| (x - km) * (x - km)).sum();
    let c = sxy / sxx;
    let (d1, d2) = (e[1] - e[0], e[2] - e[1]);
    let k_ratio = (k[2] - k[1]) / (k[1] - k[0]);
    c > stab_tol * ks[0] && d1 > 0.0 && d2 >= 0.5 * k_ratio * d1
}

/// Solve for every `k` of a strictly increasing schedule, warm-starting from
/// the previous minimizer.
pub fn truncation_sweep(
    energy: &mut CellEnergy<'_>,
    k_schedule: &[f64],
    opts: &SolverOptions,
    sweep: &SweepOptions,
) -> Result<SweepResult> {
    if k_schedule.is_empty() {
        return Err(Error::param("empty truncation schedule"));
    }
    if k_schedule.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("truncation schedule must be strictly increasing"));
    }
    let mut energies = Vec::with_capacity(k_schedule.len());
    let mut reports = Vec::with_capacity(k_schedule.len());
    let mut field: Option<Field> = None;
    for &k in k_schedule {
        energy.set_truncation(Some(TruncationLevel::new(k)?));
        let start = if sweep.warm_start { field.as_ref() } else { None };
        let (f, rep) = minimize(energy, start, opts)?;
        energies.push(rep.final_energy);
        reports.push(rep);
        field = Some(f);
    }
    let n = energies.len();
    let stabilized = n >= 2 && relative_gap(energies[n - 1], energies[n - 2]) < sweep.stab_tol;
    let diverged = !stabilized && detect_divergence(k_schedule, &energies, sweep.stab_tol);
    let extrapolated_value = if stabilized {
        let ratio = k_schedule[n - 1] / k_schedule[n - 2];
        energies[n - 1] + (energies[n - 1] - energies[n - 2]) / (ratio - 1.0)
    } else {
        energies[n - 1]
    };
    Ok(SweepResult {
        params: k_schedule.to_vec(),
        energies,
        reports,
        stabilized,
        diverged,
        extrapolated_value,
        field: field.expect("nonempty schedule"),
    })
}

/// Local minimization of `v ↦ ⨍ W(y, ∇g + ∇v)` over `v ∈ W₀^{1,p}` with
/// restarts; returns the best local minimum found.
///
/// Restart 0 starts from `v = 0`, restart `i ≥ 1` from a uniform perturbation
/// of amplitude `0.1 h` drawn from its own substream of `seed`.
#[allow(clippy::too_many_arguments)]
pub fn solve_nonconvex(
    grid: &Grid,
    spec: &IntegrandSpec,
    medium: &dyn Medium,
    boundary_data: &Field,
    k: Option<TruncationLevel>,
    restarts: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<(Field, SolveReport)> {
    if spec.nonconvex.is_none() {
        return Err(Error::param("nonconvex solve needs a nonconvex perturbation"));
    }
    let e = CellEnergy::new(grid, spec, medium, BCSpec::DirichletData(boundary_data.clone()), k, 1.0)?
        .with_nonconvex(true);
    let amp = 0.1 * grid.h();
    let mut best: Option<(Field, SolveReport)> = None;
    let mut last_err = None;
    let mut used = 0;
    for i in 0..=restarts {
        let mut start = e.zero_field();
        if i > 0 {
            let mut rng = substream_rng(seed, "nonconvex-restart", &[i as i64]);
            for v in start.values_mut() {
                *v = amp * (2.0 * rng.random::<f64>() - 1.0);
            }
            let mut vals = start.into_values();
            e.mask(&mut vals);
            start = e.field_from(vals)?;
        }
        used += 1;
        match minimize(&e, Some(&start), opts) {
            Ok((f, rep)) => {
                if best.as_ref().is_none_or(|(_, b)| rep.final_energy < b.final_energy) {
                    best = Some((f, rep));
                }
            }
            Err(err) => last_err = Some(err),
        }
    }
    match best {
        Some((f, mut rep)) => {
            rep.restarts_used = used;
            Ok((f, rep))
        }
        None => Err(Error::Solver {
            message: format!(
                "all {used} nonconvex restarts failed: {}",
                last_err.map_or_else(String::new, |e| e.to_string())
            ),
            residual: f64::INFINITY,
        }),
    }
}

/// `u ← T_s(u − u_ref) + u_ref` nodewise, with `T_s(x) = max(−s, min(s, x))`.
pub fn truncate_scalar(field: &Field, s: f64, reference: &Field) -> Result<Field> {
    if field.m() != 1 {
        return Err(Error::Unsupported(format!("scalar truncation of a {}-component field", field.m())));
    }
    if !(s > 0.0) {
        return Err(Error::param(format!("truncation height {s} must be positive")));
    }
    if reference.grid() != field.grid() || reference.values().len() != field.values().len() {
        return Err(Error::param("reference field does not match"));
    }
    let mut out = field.clone();
    for (v, r) in out.values_mut().iter_mut().zip(reference.values()) {
        *v = r + (*v - r).clamp(-s, s);
    }
    if out.bc() == BcKind::DirichletZero && out.values().iter().enumerate().any(|(i, v)| *v != 0.0 && field.grid().on_boundary(i)) {
        return out.with_bc(BcKind::Free);
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
