//! Reference values computed without the L-BFGS solver: 1D laminates by
//! convex duality, constant media by Jensen, and brute-force minimization of
//! tiny discrete problems.

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::grid::{BCSpec, CellEnergy, Grid, MeanZeroProjector};
use crate::integrands::{IntegrandSpec, PhaseFunction, TruncationLevel};
use crate::linalg::solve_dense;
use crate::mat::Mat;
use crate::microstructure::Medium;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization of a unimodal `f` on `[a, b]`; the endpoints
/// are candidates too, so maxima on the boundary are found exactly.
fn golden_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> (f64, f64) {
    let (fa, fb) = (f(a), f(b));
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..400 {
        if hi - lo <= 1e-14 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    for (x, fx) in [(a, fa), (b, fb)] {
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Two-phase-or-more 1D laminate: scalar phases with volume fractions.
#[derive(Clone, Debug, PartialEq)]
pub struct LaminateSpec {
    pub phases: Vec<PhaseFunction>,
    pub fractions: Vec<f64>,
    pub p: f64,
}

impl LaminateSpec {
    pub fn new(phases: Vec<PhaseFunction>, fractions: Vec<f64>, p: f64) -> Result<Self> {
        let s = LaminateSpec { phases, fractions, p };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.phases.is_empty() || self.phases.len() != self.fractions.len() {
            return Err(Error::param("one volume fraction per phase required"));
        }
        if self.fractions.iter().any(|&f| !(f > 0.0)) {
            return Err(Error::param("volume fractions must be positive"));
        }
        let total: f64 = self.fractions.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::param(format!("volume fractions sum to {total}, not 1")));
        }
        if !(self.p > 1.0) {
            return Err(Error::param(format!("p = {} must exceed 1", self.p)));
        }
        for f in &self.phases {
            f.validate(1)?;
            if !superlinear(f) {
                return Err(Error::param(format!("phase {f:?} is not superlinear")));
            }
        }
        Ok(())
    }
}

fn superlinear(f: &PhaseFunction) -> bool {
    match f {
        PhaseFunction::Zero => false,
        PhaseFunction::PowerLaw { c, p } => *c > 0.0 && *p > 1.0,
        PhaseFunction::Quadratic(q) => q.entries()[0] > 0.0,
        PhaseFunction::IndicatorBall { .. } | PhaseFunction::Barrier { .. } => true,
    }
}

/// Half-width of the closed hull of `dom f` for a scalar phase.
fn domain_radius(f: &PhaseFunction) -> f64 {
    match f {
        PhaseFunction::IndicatorBall { r, .. } | PhaseFunction::Barrier { r, .. } => *r,
        _ => f64::INFINITY,
    }
}

fn scalar_value(f: &PhaseFunction, x: f64) -> f64 {
    f.value(&Mat::scalar(x)).to_f64()
}

/// Numerical convex conjugate `f*(σ) = sup_λ σλ − f(λ)` of a scalar phase.
pub fn legendre(f: &PhaseFunction, sigma: f64) -> Result<f64> {
    let obj = |x: f64| sigma * x - scalar_value(f, x);
    let r = domain_radius(f);
    if r.is_finite() {
        return Ok(golden_max(obj, -r, r).1);
    }
    let mut half = 1.0;
    while half < 1e18 {
        let (x, v) = golden_max(obj, -half, half);
        if x.abs() < 0.99 * half {
            return Ok(v);
        }
        half *= 2.0;
    }
    Err(Error::Resolution(format!("conjugate at σ = {sigma} has no bounded maximizer")))
}

/// `V̄(Λ) = (Σ fᵢ Vᵢ*)*(Λ)` for a 1D laminate.
///
/// The outer transform runs over `[−σ_max, σ_max]` with
/// `σ_max = 10·p·|Λ|^{p−1}`; a maximizer on the edge means the window was too
/// small and is reported as a resolution error.
pub fn laminate_1d_vbar(spec: &LaminateSpec, lambda: f64) -> Result<f64> {
    spec.validate()?;
    let sigma_max = 10.0 * spec.p * lambda.abs().powf(spec.p - 1.0);
    let mut failure = None;
    let dual = |s: f64| -> f64 {
        let mut acc = 0.0;
        for (f, w) in spec.phases.iter().zip(&spec.fractions) {
            match legendre(f, s) {
                Ok(v) => acc += w * v,
                Err(e) => {
                    failure.get_or_insert(e);
                    return f64::NEG_INFINITY;
                }
            }
        }
        s * lambda - acc
    };
    let (s, v) = golden_max(dual, -sigma_max, sigma_max);
    if let Some(e) = failure {
        return Err(e);
    }
    if sigma_max > 0.0 && s.abs() >= sigma_max * (1.0 - 1e-9) {
        return Err(Error::Resolution(format!(
            "dual maximizer reached the edge of [−{sigma_max}, {sigma_max}] at Λ = {lambda}"
        )));
    }
    Ok(v)
}

/// Value of a constant-coefficient cell problem: the corrector vanishes, so `V̄ = V`.
pub fn constant_vbar(phase: &PhaseFunction, lambda: &Mat) -> ExtReal {
    phase.value(lambda)
}

/// Largest free nodal dimension the brute-force oracle accepts.
pub const MAX_FREE_DIMS: usize = 6;

/// Global discrete minimum found by [`brute_force_min`].
#[derive(Clone, Debug)]
pub struct BruteForce {
    pub value: f64,
    /// Minimizing nodal vector (projected for mean-zero problems).
    pub values: Vec<f64>,
    pub free_dims: usize,
}

fn quadratic_phase(f: &PhaseFunction) -> bool {
    match f {
        PhaseFunction::Zero | PhaseFunction::Quadratic(_) => true,
        PhaseFunction::PowerLaw { p, .. } => *p == 2.0,
        _ => false,
    }
}

/// Energy restricted to the free entries; the remaining ones are zero.
struct Reduced<'a, 'b> {
    e: &'b CellEnergy<'a>,
    free: Vec<usize>,
    proj: Option<MeanZeroProjector>,
}

impl Reduced<'_, '_> {
    fn full(&self, x: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.e.len()];
        for (&i, &xi) in self.free.iter().zip(x) {
            v[i] = xi;
        }
        if let Some(p) = &self.proj {
            p.apply(&mut v);
        }
        v
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.e.value(&self.full(x))?.to_f64())
    }

    fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (_, mut g) = self
            .e
            .value_grad(&self.full(x))?
            .ok_or_else(|| Error::domain("quadratic energy is infinite"))?;
        if let Some(p) = &self.proj {
            p.adjoint(&mut g);
        }
        Ok(self.free.iter().map(|&i| g[i]).collect())
    }
}

/// Global minimum of a cell energy with at most [`MAX_FREE_DIMS`] unknowns.
///
/// Quadratic problems are solved by one dense linear solve (the Hessian is
/// assembled from exact gradient differences). Other convex problems use
/// cyclic golden-section line minimization. A nonconvex perturbation in the
/// spec switches to a dense scan of the sublevel set of the convex part,
/// which is supported for a single free dimension.
pub fn brute_force_min(
    grid: &Grid,
    spec: &IntegrandSpec,
    medium: &dyn Medium,
    bc: BCSpec,
    k: Option<TruncationLevel>,
    t: f64,
) -> Result<BruteForce> {
    let mean_zero = matches!(bc, BCSpec::MeanZero(_));
    let periodic = bc.field_kind().is_periodic();
    let buffered = matches!(bc, BCSpec::Buffer { .. });
    let e = CellEnergy::new(grid, spec, medium, bc, k, t)?;
    let m = spec.m;
    let np = grid.nodes_per_axis(periodic);
    // Pinned nodes remove the null space: constants for periodic fields,
    // affine functions for mean-zero ones.
    let mut pinned: Vec<usize> = e.constrained_nodes().to_vec();
    if periodic || mean_zero {
        pinned.push(0);
    }
    if mean_zero {
        pinned.extend((0..grid.dim()).map(|a| np.pow(a as u32)));
    }
    let free: Vec<usize> = (0..grid.node_count(periodic))
        .filter(|n| !pinned.contains(n))
        .flat_map(|n| (0..m).map(move |i| n * m + i))
        .collect();
    if free.len() > MAX_FREE_DIMS {
        return Err(Error::Unsupported(format!(
            "{} free unknowns exceed the brute-force limit {MAX_FREE_DIMS}",
            free.len()
        )));
    }
    let red = Reduced {
        e: &e,
        free,
        proj: mean_zero.then(|| MeanZeroProjector::new(grid, m)),
    };
    let dims = red.free.len();
    if let Some(nc) = &spec.nonconvex {
        if dims > 1 {
            return Err(Error::Unsupported(format!("nonconvex scan needs 1 free unknown, got {dims}")));
        }
        let convex = convex_min(&red, dims, buffered)?;
        let e_nc = CellEnergy::new(grid, spec, medium, e.bc().clone(), k, t)?.with_nonconvex(true);
        let red_nc = Reduced {
            e: &e_nc,
            free: red.free.clone(),
            proj: mean_zero.then(|| MeanZeroProjector::new(grid, m)),
        };
        return scan_nonconvex(&red, &red_nc, convex, nc.bound());
    }
    let (value, x) = convex_min(&red, dims, buffered)?;
    Ok(BruteForce {
        value,
        values: red.full(&x),
        free_dims: dims,
    })
}

fn convex_min(red: &Reduced<'_, '_>, dims: usize, buffered: bool) -> Result<(f64, Vec<f64>)> {
    let spec = red.e.spec();
    let quadratic = quadratic_phase(&spec.matrix_phase)
        && quadratic_phase(&spec.inclusion_phase)
        && (!buffered || spec.p == 2.0);
    let zero = vec![0.0; dims];
    if dims == 0 {
        return Ok((red.value(&zero)?, zero));
    }
    if quadratic {
        let g0 = red.grad(&zero)?;
        let mut h = vec![0.0; dims * dims];
        for j in 0..dims {
            let mut ej = zero.clone();
            ej[j] = 1.0;
            let gj = red.grad(&ej)?;
            for i in 0..dims {
                h[i * dims + j] = gj[i] - g0[i];
            }
        }
        let rhs: Vec<f64> = g0.iter().map(|g| -g).collect();
        let mut x = solve_dense(dims, &h, &rhs)?;
        // One step of iterative refinement.
        let r: Vec<f64> = red.grad(&x)?.iter().map(|g| -g).collect();
        let dx = solve_dense(dims, &h, &r)?;
        x.iter_mut().zip(&dx).for_each(|(a, b)| *a += b);
        return Ok((red.value(&x)?, x));
    }
    coordinate_descent(red, dims)
}

fn line_min<F: FnMut(f64) -> f64>(mut f: F, step: f64) -> f64 {
    // Bracket a minimizer of a convex function around 0, then golden-section.
    let f0 = f(0.0);
    let mut neg = |s: f64| -f(s);
    for dir in [1.0, -1.0] {
        if -neg(dir * step) < f0 {
            let mut far = step;
            while -neg(dir * far * 2.0) < f0 && far < 1e12 {
                far *= 2.0;
            }
            let end = dir * far * 2.0;
            return golden_max(neg, end.min(0.0), end.max(0.0)).0;
        }
    }
    golden_max(neg, -step, step).0
}

fn coordinate_descent(red: &Reduced<'_, '_>, dims: usize) -> Result<(f64, Vec<f64>)> {
    let mut x = vec![0.0; dims];
    let mut fx = red.value(&x)?;
    if !fx.is_finite() {
        return Err(Error::domain("brute-force start has infinite energy"));
    }
    let mut step = red.e.grid().h();
    let mut err = None;
    for _sweep in 0..20_000 {
        let mut moved: f64 = 0.0;
        for j in 0..dims {
            let base = x.clone();
            let s = line_min(
                |s| {
                    let mut y = base.clone();
                    y[j] += s;
                    red.value(&y).unwrap_or_else(|e| {
                        err.get_or_insert(e);
                        f64::INFINITY
                    })
                },
                step,
            );
            let mut y = base;
            y[j] += s;
            let fy = red.value(&y)?;
            if fy <= fx {
                x = y;
                fx = fy;
                moved = moved.max(s.abs());
            }
        }
        if let Some(e) = err {
            return Err(e);
        }
        if moved <= 1e-12 {
            break;
        }
        step = (moved * 4.0).max(1e-8);
    }
    Ok((fx, x))
}

const SCAN_SAMPLES: usize = 10_000;

/// Dense scan of `W` over `{V ≤ min V + bound}`, which contains every
/// minimizer of `W = V + W^nc` since `0 ≤ W^nc ≤ bound`.
fn scan_nonconvex(
    red_v: &Reduced<'_, '_>,
    red_w: &Reduced<'_, '_>,
    (vmin, xc): (f64, Vec<f64>),
    bound: f64,
) -> Result<BruteForce> {
    let dims = xc.len();
    let w = |s: f64| -> Result<f64> { red_w.value(&[s][..dims]) };
    if dims == 0 {
        let value = w(0.0)?;
        return Ok(BruteForce { value, values: red_w.full(&[]), free_dims: 0 });
    }
    let level = vmin + bound;
    let c = xc[0];
    let v = |s: f64| red_v.value(&[s]).unwrap_or(f64::INFINITY);
    let mut edges = [0.0; 2];
    for (slot, dir) in edges.iter_mut().zip([-1.0, 1.0]) {
        let mut out = red_v.e.grid().h().max(1e-6);
        while v(c + dir * out) <= level && out < 1e12 {
            out *= 2.0;
        }
        let mut inside = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (inside + out);
            if v(c + dir * mid) <= level {
                inside = mid;
            } else {
                out = mid;
            }
        }
        *slot = c + dir * out;
    }
    let (a, b) = (edges[0], edges[1]);
    let dx = (b - a) / SCAN_SAMPLES as f64;
    let mut best = (a, f64::INFINITY);
    for i in 0..=SCAN_SAMPLES {
        let s = a + dx * i as f64;
        let ws = w(s)?;
        if ws < best.1 {
            best = (s, ws);
        }
    }
    let (s, _) = golden_max(|s| -w(s).unwrap_or(f64::INFINITY), (best.0 - dx).max(a), (best.0 + dx).min(b));
    let ws = w(s)?;
    let x = if ws < best.1 { s } else { best.0 };
    Ok(BruteForce {
        value: ws.min(best.1),
        values: red_w.full(&[x]),
        free_dims: 1,
    })
}

#[cfg(test)]
mod tests;
