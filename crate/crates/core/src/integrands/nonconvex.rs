use crate::error::{Error, Result};
use crate::mat::Mat;

#[derive(Clone, Debug, PartialEq)]
pub enum NonconvexKind {
    /// `γ·cap·(1 − exp(−(det Λ − 1)²/cap))`, square gradients only.
    DetWell,
    /// `γ·cap·(1 − exp(−sin²(Λ:Ξ)/cap))`.
    Oscillatory { xi: Mat },
}

/// Bounded, Lipschitz nonconvex perturbation added to the convex density.
#[derive(Clone, Debug, PartialEq)]
pub struct NonconvexSpec {
    pub gamma: f64,
    pub cap: f64,
    pub kind: NonconvexKind,
}

impl NonconvexSpec {
    pub fn validate(&self, m: usize, d: usize) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::param(format!("gamma {} must be >= 0", self.gamma)));
        }
        if !(self.cap > 0.0 && self.cap.is_finite()) {
            return Err(Error::param(format!("cap {} must be > 0", self.cap)));
        }
        match &self.kind {
            NonconvexKind::DetWell if m != d => Err(Error::param("det_well requires square gradients (m = d)")),
            NonconvexKind::Oscillatory { xi } if xi.rows() != m || xi.cols() != d => {
                Err(Error::param("oscillation direction must be m × d"))
            }
            _ => Ok(()),
        }
    }

    /// Upper bound `γ·cap` of the perturbation.
    pub fn bound(&self) -> f64 {
        self.gamma * self.cap
    }

    fn argument(&self, lam: &Mat) -> (f64, f64, Mat) {
        // Returns (u, du-scale, du/dΛ) with the saturating profile applied to u²-like inputs.
        match &self.kind {
            NonconvexKind::DetWell => {
                let u = lam.det() - 1.0;
                (u * u, 2.0 * u, lam.cofactor())
            }
            NonconvexKind::Oscillatory { xi } => {
                let x = lam.dot(xi);
                let s = x.sin();
                (s * s, (2.0 * x).sin(), *xi)
            }
        }
    }

    pub fn value(&self, lam: &Mat) -> f64 {
        let (z, _, _) = self.argument(lam);
        self.gamma * self.cap * (1.0 - (-z / self.cap).exp())
    }

    pub fn grad(&self, lam: &Mat) -> Mat {
        let (z, dz, dir) = self.argument(lam);
        dir.scale(self.gamma * (-z / self.cap).exp() * dz)
    }

    /// Local Lipschitz constant between `Λ` and `Λ'`.
    pub fn lipschitz_bound(&self, lam: &Mat, other: &Mat) -> f64 {
        match &self.kind {
            NonconvexKind::Oscillatory { xi } => self.gamma * xi.norm(),
            NonconvexKind::DetWell => {
                // |d/du cap(1 − e^{−u²/cap})| ≤ sqrt(2 cap / e); |cof Λ| ≤ |Λ|^{d−1}.
                let d = lam.rows() as i32;
                let r = lam.norm().max(other.norm());
                self.gamma * (2.0 * self.cap / std::f64::consts::E).sqrt() * (1.0 + r.powi(d - 1))
            }
        }
    }
}
