//! Yosida truncation `V_k(Λ) = inf_{Λ'} V(Λ') + k|Λ − Λ'|^p`.
//!
//! For rotation-invariant phases the minimizer is colinear with `Λ`, which
//! reduces the problem to a scalar convex minimization in `t = |Λ'| ∈ [0, |Λ|]`.

use super::phase::{PhaseFunction, Profile};
use crate::error::{Error, Result};
use crate::linalg::solve_dense;
use crate::mat::Mat;

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 200;

/// Value and `Λ`-gradient of the Yosida transform at level `k > 0`.
pub fn yosida(phase: &PhaseFunction, p: f64, k: f64, lam: &Mat) -> Result<(f64, Mat)> {
    if !(k > 0.0) {
        return Err(Error::param(format!("truncation level {k} must be positive")));
    }
    if let Some(profile) = phase.profile() {
        return radial_yosida(profile, phase.ball_cap(), p, k, lam);
    }
    match phase {
        PhaseFunction::Quadratic(q) if p == 2.0 => {
            let n = q.size();
            let mut a = q.entries().to_vec();
            for i in 0..n {
                a[i * n + i] += k;
            }
            let rhs: Vec<f64> = lam.as_slice().iter().map(|x| k * x).collect();
            let x = solve_dense(n, &a, &rhs)?;
            let xm = Mat::from_slice(lam.rows(), lam.cols(), &x);
            let diff = *lam - xm;
            Ok((q.value(&xm) + k * diff.norm_sq(), diff.scale(2.0 * k)))
        }
        _ => Err(Error::Unsupported(
            "Yosida transform of a non-isotropic phase with p != 2".into(),
        )),
    }
}

fn radial_yosida(profile: Profile, cap: Option<f64>, p: f64, k: f64, lam: &Mat) -> Result<(f64, Mat)> {
    let s = lam.norm();
    let zero = Mat::zeros(lam.rows(), lam.cols());
    if s == 0.0 {
        let g0 = profile.eval(0.0).map(|v| v.0).unwrap_or(0.0);
        return Ok((g0, zero));
    }
    let t = match closed_form(profile, p, k, s) {
        Some(t) => t,
        None => newton_radial(profile, p, k, s)?,
    };
    let t = match cap {
        Some(r) => t.min(r),
        None => t,
    };
    let g = profile
        .eval(t)
        .map(|v| v.0)
        .ok_or_else(|| Error::Solver {
            message: "Yosida minimizer left the barrier domain".into(),
            residual: t,
        })?;
    let gap = (s - t).max(0.0);
    let value = g + k * gap.powf(p);
    let grad = lam.scale(k * p * gap.powf(p - 1.0) / s);
    Ok((value, grad))
}

/// Unconstrained minimizer `t` in closed form where one exists.
fn closed_form(profile: Profile, p: f64, k: f64, s: f64) -> Option<f64> {
    match profile {
        Profile::Zero => Some(s),
        Profile::Power { c, q } if q == p => {
            if p == 2.0 {
                Some(k * s / (c + k))
            } else {
                Some(s / (1.0 + (c / k).powf(1.0 / (p - 1.0))))
            }
        }
        _ => None,
    }
}

/// Safeguarded Newton on `h'(t) = g'(t) − k p (s − t)^{p−1}` over `[0, min(s, r))`.
fn newton_radial(profile: Profile, p: f64, k: f64, s: f64) -> Result<f64> {
    let dh = |t: f64| -> Option<(f64, f64)> {
        let (_, g1, g2) = profile.eval(t)?;
        let gap = s - t;
        let d1 = g1 - k * p * gap.powf(p - 1.0);
        let d2 = g2 + k * p * (p - 1.0) * gap.powf(p - 2.0);
        Some((d1, d2))
    };
    let mut lo = 0.0;
    let mut hi = s.min(profile.open_limit());
    match dh(lo) {
        Some((d, _)) if d >= 0.0 => return Ok(0.0),
        _ => {}
    }
    if let Some((d, _)) = dh(hi) {
        if d <= 0.0 {
            return Ok(hi);
        }
    }
    let scale = s.max(1.0);
    let mut t = 0.5 * (lo + hi);
    for _ in 0..NEWTON_MAX_ITER {
        let (d1, d2) = match dh(t) {
            Some(v) => v,
            None => {
                hi = t;
                t = 0.5 * (lo + hi);
                continue;
            }
        };
        if d1 < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        if d1.abs() <= NEWTON_TOL * (1.0 + k * scale.powf(p - 1.0)) || hi - lo <= NEWTON_TOL * scale {
            return Ok(t);
        }
        let step = if d2 > 0.0 && d2.is_finite() { t - d1 / d2 } else { f64::NAN };
        t = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
    }
    Err(Error::Solver {
        message: format!("radial Yosida Newton did not converge at |Λ| = {s}, k = {k}"),
        residual: hi - lo,
    })
}
