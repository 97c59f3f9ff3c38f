//! Limited-memory BFGS with backtracking Armijo line search.
//!
//! The optimizer works on the energy multiplied by the cell count, so step
//! sizes are independent of the volume normalization.

use crate::error::{Error, Result};
use crate::grid::{BCSpec, CellEnergy, Field, MeanZeroProjector};
use std::collections::VecDeque;
use std::time::Instant;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Relative energy decrease of the last step.
    pub tol_e: f64,
    /// Gradient tolerance relative to `1 + |initial gradient|`.
    pub tol_g: f64,
    pub max_iter: usize,
    pub memory: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_e: 1e-9,
            tol_g: 1e-7,
            max_iter: 10_000,
            memory: 10,
        }
    }
}

const ARMIJO_C1: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;
const STEP_MIN: f64 = 1e-8;
const STEP_MAX: f64 = 1e2;
/// Consecutive accepted steps with a decrease at rounding level before giving up.
const STALL_LIMIT: usize = 10;
const STALL_REL: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub final_energy: f64,
    pub iterations: usize,
    /// Max-norm of the gradient of the cell-count-scaled energy.
    pub grad_norm: f64,
    pub converged: bool,
    pub wall_time: f64,
    pub restarts_used: usize,
    /// Energy after every accepted iterate, starting with the initial one.
    pub trace: Vec<f64>,
}

impl SolveReport {
    /// Equality of everything except the wall-clock time.
    pub fn same_outcome(&self, other: &SolveReport) -> bool {
        self.final_energy.to_bits() == other.final_energy.to_bits()
            && self.iterations == other.iterations
            && self.grad_norm.to_bits() == other.grad_norm.to_bits()
            && self.converged == other.converged
            && self.restarts_used == other.restarts_used
            && self.trace.len() == other.trace.len()
            && self.trace.iter().zip(&other.trace).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Energy functional seen by the optimizer: `x ↦ N·E(Px)`.
struct Objective<'e, 'a> {
    energy: &'e CellEnergy<'a>,
    scale: f64,
    projector: Option<MeanZeroProjector>,
}

impl Objective<'_, '_> {
    fn point(&self, x: &[f64]) -> Vec<f64> {
        let mut v = x.to_vec();
        if let Some(p) = &self.projector {
            p.apply(&mut v);
        }
        v
    }

    fn eval(&self, x: &[f64]) -> Result<Option<(f64, Vec<f64>)>> {
        let v = self.point(x);
        Ok(self.energy.value_grad(&v)?.map(|(f, mut g)| {
            if let Some(p) = &self.projector {
                p.adjoint(&mut g);
            }
            g.iter_mut().for_each(|gi| *gi *= self.scale);
            (f * self.scale, g)
        }))
    }
}

/// Minimize `energy` starting from `start` (default `φ = 0`).
pub fn minimize(
    energy: &CellEnergy<'_>,
    start: Option<&Field>,
    opts: &SolverOptions,
) -> Result<(Field, SolveReport)> {
    let clock = Instant::now();
    let projector = matches!(energy.bc(), BCSpec::MeanZero(_))
        .then(|| MeanZeroProjector::new(energy.grid(), energy.spec().m));
    let obj = Objective {
        energy,
        scale: energy.grid().cell_count() as f64,
        projector,
    };
    let mut x = match start {
        Some(f) => {
            energy.check_field(f)?;
            obj.point(f.values())
        }
        None => vec![0.0; energy.len()],
    };
    let (mut f, mut g) = match obj.eval(&x)? {
        Some(v) => v,
        None => {
            return Err(Error::domain(format!(
                "infinite energy at the starting point ({} problem)",
                energy.bc().name()
            )))
        }
    };
    let tol_g = opts.tol_g * (1.0 + max_abs(&g));
    let mut trace = vec![f / obj.scale];
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut gamma = (1.0 / max_abs(&g).max(f64::MIN_POSITIVE)).clamp(STEP_MIN, STEP_MAX);
    let mut iterations = 0;
    let mut gnorm = max_abs(&g);
    let mut converged = gnorm <= tol_g;
    let mut stalled = 0;
    while !converged && iterations < opts.max_iter {
        let mut d = two_loop(&g, &mem, gamma);
        if dot(&d, &g) >= 0.0 {
            mem.clear();
            d = g.iter().map(|gi| -gamma * gi).collect();
        }
        let accepted = match line_search(&obj, &x, f, &g, &d)? {
            Some(step) => Some(step),
            None if !mem.is_empty() => {
                mem.clear();
                d = g.iter().map(|gi| -gamma * gi).collect();
                line_search(&obj, &x, f, &g, &d)?
            }
            None => None,
        };
        let Some((x_new, f_new, g_new)) = accepted else {
            break;
        };
        iterations += 1;
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let yy = dot(&y, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * yy.sqrt() && yy > 0.0 {
            gamma = (sy / yy).clamp(STEP_MIN, STEP_MAX);
            if mem.len() == opts.memory {
                mem.pop_front();
            }
            mem.push_back((s, y, 1.0 / sy));
        }
        let rel_dec = (f - f_new) / f.abs().max(f_new.abs()).max(f64::MIN_POSITIVE);
        x = x_new;
        f = f_new;
        g = g_new;
        gnorm = max_abs(&g);
        trace.push(f / obj.scale);
        converged = gnorm <= tol_g && rel_dec <= opts.tol_e;
        stalled = if rel_dec < STALL_REL { stalled + 1 } else { 0 };
        if stalled >= STALL_LIMIT {
            break;
        }
    }
    let field = energy.field_from(obj.point(&x))?;
    let report = SolveReport {
        final_energy: f / obj.scale,
        iterations,
        grad_norm: gnorm,
        converged,
        wall_time: clock.elapsed().as_secs_f64(),
        restarts_used: 0,
        trace,
    };
    Ok((field, report))
}

fn two_loop(g: &[f64], mem: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, gamma: f64) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(mem.len());
    for (s, y, rho) in mem.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    q.iter_mut().for_each(|qi| *qi *= gamma);
    for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|qi| *qi = -*qi);
    q
}

type Step = (Vec<f64>, f64, Vec<f64>);

/// Backtracking from a unit step; infinite trial energies count as rejections.
fn line_search(obj: &Objective<'_, '_>, x: &[f64], f: f64, g: &[f64], d: &[f64]) -> Result<Option<Step>> {
    let slope = dot(g, d);
    let mut alpha = 1.0;
    for _ in 0..=MAX_BACKTRACKS {
        let trial: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect();
        if let Some((ft, gt)) = obj.eval(&trial)? {
            if ft <= f + ARMIJO_C1 * alpha * slope && ft <= f {
                return Ok(Some((trial, ft, gt)));
            }
        }
        alpha *= BACKTRACK;
    }
    Ok(None)
}

