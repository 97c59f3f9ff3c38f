use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::mat::Mat;

/// Symmetric positive-definite form `Λ ↦ Λ·AΛ` on flattened `m × d` matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadForm {
    n: usize,
    a: Vec<f64>,
}

impl QuadForm {
    pub fn isotropic(n: usize, alpha: f64) -> Self {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = alpha;
        }
        QuadForm { n, a }
    }

    pub fn new(n: usize, a: Vec<f64>) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::param(format!("quadratic form needs {} entries, got {}", n * n, a.len())));
        }
        for i in 0..n {
            for j in 0..i {
                if (a[i * n + j] - a[j * n + i]).abs() > 1e-12 * (1.0 + a[i * n + j].abs()) {
                    return Err(Error::param("quadratic form must be symmetric"));
                }
            }
        }
        // Positive definiteness via Cholesky.
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if s <= 0.0 {
                        return Err(Error::param("quadratic form must be positive definite"));
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Ok(QuadForm { n, a })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[f64] {
        &self.a
    }

    /// `Some(α)` when the form is `α·I`.
    pub fn isotropic_coefficient(&self) -> Option<f64> {
        let alpha = self.a[0];
        for i in 0..self.n {
            for j in 0..self.n {
                let expect = if i == j { alpha } else { 0.0 };
                if self.a[i * self.n + j] != expect {
                    return None;
                }
            }
        }
        Some(alpha)
    }

    pub(crate) fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.a[i * self.n + j] * x[j]).sum())
            .collect()
    }

    pub fn value(&self, lam: &Mat) -> f64 {
        let x = lam.as_slice();
        self.apply(x).iter().zip(x).map(|(ax, x)| ax * x).sum()
    }

    /// Smallest eigenvalue bound used for coercivity checks (Gershgorin).
    pub fn lower_bound(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let off: f64 = (0..self.n).filter(|&j| j != i).map(|j| self.a[i * self.n + j].abs()).sum();
                self.a[i * self.n + i] - off
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Convex, lower semicontinuous energy of one phase, possibly `+∞` outside a bounded domain.
#[derive(Clone, Debug, PartialEq)]
pub enum PhaseFunction {
    Zero,
    /// `c |Λ|^p`
    PowerLaw { c: f64, p: f64 },
    /// `Λ · AΛ`
    Quadratic(QuadForm),
    /// `inner(Λ)` for `|Λ| ≤ r`, `+∞` otherwise.
    IndicatorBall { r: f64, inner: Box<PhaseFunction> },
    /// `c|Λ|^p / (1 − |Λ|²/r²)` for `|Λ| < r`, `+∞` otherwise.
    Barrier { r: f64, c: f64, p: f64 },
}

/// Radial profile `g(t)` of a rotation-invariant phase, `V(Λ) = g(|Λ|)`.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Profile {
    Zero,
    Power { c: f64, q: f64 },
    Barrier { r: f64, c: f64, q: f64 },
}

impl Profile {
    /// `(g, g', g'')` at `t ≥ 0`; `None` outside the open barrier domain.
    pub(crate) fn eval(&self, t: f64) -> Option<(f64, f64, f64)> {
        match *self {
            Profile::Zero => Some((0.0, 0.0, 0.0)),
            Profile::Power { c, q } => {
                if t == 0.0 {
                    let d2 = if q == 2.0 { 2.0 * c } else if q > 2.0 { 0.0 } else { f64::INFINITY };
                    return Some((0.0, 0.0, d2));
                }
                let tq2 = t.powf(q - 2.0);
                Some((c * tq2 * t * t, c * q * tq2 * t, c * q * (q - 1.0) * tq2))
            }
            Profile::Barrier { r, c, q } => {
                if t >= r {
                    return None;
                }
                let (f, f1, f2) = Profile::Power { c, q }.eval(t)?;
                let w = 1.0 - t * t / (r * r);
                let w1 = -2.0 * t / (r * r);
                let w2 = -2.0 / (r * r);
                let g = f / w;
                let g1 = (f1 * w - f * w1) / (w * w);
                let g2 = (f2 * w * w - f * w * w2 - 2.0 * f1 * w * w1 + 2.0 * f * w1 * w1) / (w * w * w);
                Some((g, g1, g2))
            }
        }
    }

    /// Supremum of the open domain (`∞` when unbounded).
    pub(crate) fn open_limit(&self) -> f64 {
        match *self {
            Profile::Barrier { r, .. } => r,
            _ => f64::INFINITY,
        }
    }
}

impl PhaseFunction {
    pub fn quadratic_isotropic(n: usize, alpha: f64) -> Self {
        PhaseFunction::Quadratic(QuadForm::isotropic(n, alpha))
    }

    pub fn indicator_ball(r: f64, inner: PhaseFunction) -> Self {
        PhaseFunction::IndicatorBall {
            r,
            inner: Box::new(inner),
        }
    }

    pub fn validate(&self, n_entries: usize) -> Result<()> {
        match self {
            PhaseFunction::Zero => Ok(()),
            PhaseFunction::PowerLaw { c, p } => {
                if !(*c > 0.0) || !(*p > 1.0) {
                    return Err(Error::param(format!("power law needs c > 0 and p > 1 (c={c}, p={p})")));
                }
                Ok(())
            }
            PhaseFunction::Quadratic(q) => {
                if q.size() != n_entries {
                    return Err(Error::param(format!(
                        "quadratic form acts on {} entries but Λ has {n_entries}",
                        q.size()
                    )));
                }
                Ok(())
            }
            PhaseFunction::IndicatorBall { r, inner } => {
                if !(*r > 0.0) {
                    return Err(Error::param(format!("indicator radius {r} must be positive")));
                }
                if matches!(**inner, PhaseFunction::IndicatorBall { .. } | PhaseFunction::Barrier { .. }) {
                    return Err(Error::Unsupported("nested domain constraints".into()));
                }
                if inner.profile().is_none() {
                    return Err(Error::Unsupported("indicator ball with a non-isotropic inner energy".into()));
                }
                inner.validate(n_entries)
            }
            PhaseFunction::Barrier { r, c, p } => {
                if !(*r > 0.0 && *c > 0.0 && *p >= 2.0) {
                    return Err(Error::param(format!("barrier needs r > 0, c > 0, p >= 2 (r={r}, c={c}, p={p})")));
                }
                Ok(())
            }
        }
    }

    /// True when the phase is finite on all of matrix space.
    pub fn is_finite_valued(&self) -> bool {
        !matches!(self, PhaseFunction::IndicatorBall { .. } | PhaseFunction::Barrier { .. })
    }

    /// Radial profile and closed-ball cap, for rotation-invariant phases.
    pub(crate) fn profile(&self) -> Option<Profile> {
        match self {
            PhaseFunction::Zero => Some(Profile::Zero),
            PhaseFunction::PowerLaw { c, p } => Some(Profile::Power { c: *c, q: *p }),
            PhaseFunction::Quadratic(q) => q.isotropic_coefficient().map(|a| {
                if a == 0.0 {
                    Profile::Zero
                } else {
                    Profile::Power { c: a, q: 2.0 }
                }
            }),
            PhaseFunction::IndicatorBall { inner, .. } => inner.profile(),
            PhaseFunction::Barrier { r, c, p } => Some(Profile::Barrier { r: *r, c: *c, q: *p }),
        }
    }

    /// Closed-ball radius bounding the domain, if any.
    pub(crate) fn ball_cap(&self) -> Option<f64> {
        match self {
            PhaseFunction::IndicatorBall { r, .. } => Some(*r),
            _ => None,
        }
    }

    pub fn value(&self, lam: &Mat) -> ExtReal {
        match self {
            PhaseFunction::Zero => ExtReal::ZERO,
            PhaseFunction::PowerLaw { c, p } => ExtReal::Finite(c * lam.norm().powf(*p)),
            PhaseFunction::Quadratic(q) => ExtReal::Finite(q.value(lam)),
            PhaseFunction::IndicatorBall { r, inner } => {
                if lam.norm() <= *r {
                    inner.value(lam)
                } else {
                    ExtReal::Infinite
                }
            }
            PhaseFunction::Barrier { r, c, p } => {
                let s = lam.norm();
                if s < *r {
                    ExtReal::Finite(c * s.powf(*p) / (1.0 - s * s / (r * r)))
                } else {
                    ExtReal::Infinite
                }
            }
        }
    }

    /// Gradient in `Λ` at an interior point of the domain.
    pub fn grad(&self, lam: &Mat) -> Result<Mat> {
        match self {
            PhaseFunction::Zero => Ok(Mat::zeros(lam.rows(), lam.cols())),
            PhaseFunction::PowerLaw { c, p } => Ok(grad_power(*c, *p, lam)),
            PhaseFunction::Quadratic(q) => {
                let ax = q.apply(lam.as_slice());
                let mut g = *lam;
                for (gi, a) in g.as_mut_slice().iter_mut().zip(ax) {
                    *gi = 2.0 * a;
                }
                Ok(g)
            }
            PhaseFunction::IndicatorBall { r, inner } => {
                if lam.norm() < *r {
                    inner.grad(lam)
                } else {
                    Err(Error::domain(format!("|Λ| = {} not inside the ball of radius {r}", lam.norm())))
                }
            }
            PhaseFunction::Barrier { r, c, p } => {
                let s = lam.norm();
                if s >= *r {
                    return Err(Error::domain(format!("|Λ| = {s} outside the barrier radius {r}")));
                }
                if s == 0.0 {
                    return Ok(Mat::zeros(lam.rows(), lam.cols()));
                }
                let (_, g1, _) = Profile::Barrier { r: *r, c: *c, q: *p }.eval(s).expect("inside domain");
                Ok(lam.scale(g1 / s))
            }
        }
    }

    /// Value and gradient, or `None` when `Λ` is outside the domain.
    pub fn value_grad(&self, lam: &Mat) -> Option<(f64, Mat)> {
        let v = self.value(lam).finite()?;
        self.grad(lam).ok().map(|g| (v, g))
    }
}

/// `∇ c|Λ|^p = c p |Λ|^{p-2} Λ`, taken as 0 at `Λ = 0`.
pub(crate) fn grad_power(c: f64, p: f64, lam: &Mat) -> Mat {
    let s = lam.norm();
    if s == 0.0 {
        return Mat::zeros(lam.rows(), lam.cols());
    }
    lam.scale(c * p * s.powf(p - 2.0))
}
