//! Two-phase extended-real convex densities
//! `V(y, Λ) = a(Λ) 1_{R^d∖E}(y) + b(Λ) 1_E(y)`, their truncations, buffer
//! modifications, and nonconvex perturbations `W = V + W^nc`.

mod nonconvex;
mod phase;
mod yosida;

pub use nonconvex::{NonconvexKind, NonconvexSpec};
pub use phase::{PhaseFunction, QuadForm};
pub use yosida::yosida;

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::mat::Mat;
use crate::microstructure::{Medium, Point};

/// Which density applies at a point of the cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Matrix,
    Inclusion,
    /// Soft buffer next to the Dirichlet boundary: `|Λ|^p`.
    Buffer,
}

/// Truncation level `k > 0` of the increasing approximation `V^k ↑ V`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct TruncationLevel(f64);

impl TruncationLevel {
    pub fn new(k: f64) -> Result<Self> {
        if k > 0.0 && k.is_finite() {
            Ok(TruncationLevel(k))
        } else {
            Err(Error::param(format!("truncation level {k} must be positive and finite")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegrandSpec {
    pub matrix_phase: PhaseFunction,
    pub inclusion_phase: PhaseFunction,
    pub p: f64,
    /// Rows `m` of `Λ` (1 for scalar problems).
    pub m: usize,
    /// Columns `d` of `Λ` (the space dimension).
    pub d: usize,
    /// Declared coercivity constant `C` in `V ≥ |Λ|^p / C − C`.
    pub growth_c: f64,
    pub nonconvex: Option<NonconvexSpec>,
}

impl IntegrandSpec {
    pub fn new(
        matrix_phase: PhaseFunction,
        inclusion_phase: PhaseFunction,
        p: f64,
        m: usize,
        d: usize,
        growth_c: f64,
    ) -> Result<Self> {
        let spec = IntegrandSpec {
            matrix_phase,
            inclusion_phase,
            p,
            m,
            d,
            growth_c,
            nonconvex: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_nonconvex(mut self, nc: NonconvexSpec) -> Result<Self> {
        nc.validate(self.m, self.d)?;
        self.nonconvex = Some(nc);
        Ok(self)
    }

    /// Same integrand in both phases.
    pub fn homogeneous(phase: PhaseFunction, p: f64, m: usize, d: usize, growth_c: f64) -> Result<Self> {
        Self::new(phase.clone(), phase, p, m, d, growth_c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::param(format!("p = {} must exceed 1", self.p)));
        }
        if !(1..=3).contains(&self.d) || !(self.m == 1 || self.m == self.d) {
            return Err(Error::param(format!("shape {}x{} not supported (m must be 1 or d)", self.m, self.d)));
        }
        if !(self.growth_c > 0.0) {
            return Err(Error::param("growth constant must be positive"));
        }
        let n = self.m * self.d;
        self.matrix_phase.validate(n)?;
        self.inclusion_phase.validate(n)?;
        if !self.matrix_phase.is_finite_valued() {
            return Err(Error::param(
                "the matrix phase must be finite-valued so that 0 is interior to the envelope domain",
            ));
        }
        if let Some(nc) = &self.nonconvex {
            nc.validate(self.m, self.d)?;
        }
        Ok(())
    }

    pub fn zero_gradient(&self) -> Mat {
        Mat::zeros(self.m, self.d)
    }

    /// `C = max(1 + γ·cap, declared constant)`, valid for both bounds.
    pub fn growth_constant(&self) -> f64 {
        let nc = self.nonconvex.as_ref().map_or(0.0, |n| n.bound());
        self.growth_c.max(1.0 + nc)
    }

    /// True when some phase can take the value `+∞`.
    pub fn has_infinite_phase(&self) -> bool {
        !self.inclusion_phase.is_finite_valued() || !self.matrix_phase.is_finite_valued()
    }

    fn phase_fn(&self, phase: Phase) -> &PhaseFunction {
        match phase {
            Phase::Matrix => &self.matrix_phase,
            Phase::Inclusion | Phase::Buffer => &self.inclusion_phase,
        }
    }

    /// Convex density of a phase, optionally truncated. Truncation only acts
    /// on phases that can be infinite; finite phases already satisfy the
    /// `p`-growth bound and are left as they are.
    pub fn convex_density(&self, phase: Phase, lam: &Mat, truncation: Option<TruncationLevel>) -> Result<ExtReal> {
        if phase == Phase::Buffer {
            return Ok(ExtReal::Finite(lam.norm().powf(self.p)));
        }
        let f = self.phase_fn(phase);
        match truncation {
            Some(k) if !f.is_finite_valued() => Ok(ExtReal::Finite(yosida(f, self.p, k.get(), lam)?.0)),
            _ => Ok(f.value(lam)),
        }
    }

    /// Full density (convex part plus the nonconvex perturbation when `nonconvex`).
    pub fn density(
        &self,
        phase: Phase,
        lam: &Mat,
        truncation: Option<TruncationLevel>,
        nonconvex: bool,
    ) -> Result<ExtReal> {
        let v = self.convex_density(phase, lam, truncation)?;
        Ok(match (&self.nonconvex, nonconvex) {
            (Some(nc), true) => v + nc.value(lam),
            _ => v,
        })
    }

    /// Value and `Λ`-gradient; `Ok(None)` when the density is infinite at `Λ`.
    pub fn density_grad(
        &self,
        phase: Phase,
        lam: &Mat,
        truncation: Option<TruncationLevel>,
        nonconvex: bool,
    ) -> Result<Option<(f64, Mat)>> {
        let (mut v, mut g) = if phase == Phase::Buffer {
            let s = lam.norm();
            (s.powf(self.p), phase::grad_power(1.0, self.p, lam))
        } else {
            let f = self.phase_fn(phase);
            match truncation {
                Some(k) if !f.is_finite_valued() => yosida(f, self.p, k.get(), lam)?,
                _ => match f.value(lam) {
                    ExtReal::Infinite => return Ok(None),
                    ExtReal::Finite(v) => (v, f.grad(lam)?),
                },
            }
        };
        if let (Some(nc), true) = (&self.nonconvex, nonconvex) {
            v += nc.value(lam);
            g += nc.grad(lam);
        }
        Ok(Some((v, g)))
    }

    fn phase_at(&self, medium: &dyn Medium, y: &Point) -> Phase {
        if medium.in_inclusion(y) {
            Phase::Inclusion
        } else {
            Phase::Matrix
        }
    }
}

/// `V(y, Λ)`: `a(Λ)` off the inclusions, `b(Λ)` on them.
pub fn eval_convex(spec: &IntegrandSpec, medium: &dyn Medium, y: &Point, lam: &Mat) -> ExtReal {
    spec.phase_fn(spec.phase_at(medium, y)).value(lam)
}

/// `W(y, Λ) = V(y, Λ) + W^nc(Λ)`.
pub fn eval_nonconvex(spec: &IntegrandSpec, medium: &dyn Medium, y: &Point, lam: &Mat) -> ExtReal {
    let v = eval_convex(spec, medium, y, lam);
    match &spec.nonconvex {
        Some(nc) => v + nc.value(lam),
        None => v,
    }
}

/// `M(Λ) = max(a(Λ), b(Λ))`.
pub fn sup_envelope(spec: &IntegrandSpec, lam: &Mat) -> ExtReal {
    spec.matrix_phase.value(lam).max(spec.inclusion_phase.value(lam))
}

/// `V_k(y, Λ)`, the Yosida transform of the phase present at `y`.
pub fn yosida_truncate(
    spec: &IntegrandSpec,
    k: TruncationLevel,
    medium: &dyn Medium,
    y: &Point,
    lam: &Mat,
) -> Result<f64> {
    let f = spec.phase_fn(spec.phase_at(medium, y));
    Ok(yosida(f, spec.p, k.get(), lam)?.0)
}

/// Max-norm distance from `y` to the boundary of `Q_R`.
pub fn boundary_distance(y: &Point, dim: usize, side: f64) -> f64 {
    let m = y[..dim].iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    0.5 * side - m
}

/// True when `y` lies in the soft buffer of width `eta` inside `Q_R`.
pub fn in_buffer(y: &Point, dim: usize, side: f64, eta: f64) -> bool {
    eta > 0.0 && (boundary_distance(y, dim, side) < eta || eta >= 0.5 * side)
}

/// Buffer-modified density: `|Λ|^p` within `eta` of `∂Q_R`, `V` elsewhere.
pub fn buffer_modify(
    spec: &IntegrandSpec,
    medium: &dyn Medium,
    y: &Point,
    lam: &Mat,
    side: f64,
    eta: f64,
) -> Result<ExtReal> {
    if !(eta >= 0.0) {
        return Err(Error::param(format!("buffer width {eta} must be >= 0")));
    }
    if in_buffer(y, spec.d, side, eta) {
        Ok(ExtReal::Finite(lam.norm().powf(spec.p)))
    } else {
        Ok(eval_convex(spec, medium, y, lam))
    }
}

/// Gradient of a finite density at `(y, Λ)`; errors outside the domain interior.
pub fn grad_lambda(
    spec: &IntegrandSpec,
    medium: &dyn Medium,
    y: &Point,
    lam: &Mat,
    truncation: Option<TruncationLevel>,
    nonconvex: bool,
) -> Result<Mat> {
    let phase = spec.phase_at(medium, y);
    match spec.density_grad(phase, lam, truncation, nonconvex)? {
        Some((_, g)) => Ok(g),
        None => Err(Error::domain("density is infinite at Λ")),
    }
}
