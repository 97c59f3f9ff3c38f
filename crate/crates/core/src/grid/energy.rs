use super::{BcKind, Element, Field, Grid};
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::integrands::{in_buffer, IntegrandSpec, Phase, TruncationLevel};
use crate::mat::Mat;
use crate::microstructure::Medium;
use crate::reduce::pairwise_sum;

/// Boundary handling of a cell problem with background gradient `Λ`.
#[derive(Clone, Debug, PartialEq)]
pub enum BCSpec {
    /// `φ ∈ W₀^{1,p}`, total gradient `Λ + ∇φ`.
    DirichletAffine(Mat),
    Periodic(Mat),
    /// `φ` free with zero mean gradient (enforced by projection in the solver).
    MeanZero(Mat),
    /// `v ∈ W₀^{1,p}`, total gradient `∇g + ∇v`. The dilation is not applied:
    /// `g` already carries it.
    DirichletData(Field),
    /// Dirichlet-affine under the density `|Λ|^p` within `eta` of `∂Q_R`.
    Buffer { lambda: Mat, eta: f64 },
}

impl BCSpec {
    pub fn field_kind(&self) -> BcKind {
        match self {
            BCSpec::DirichletAffine(_) | BCSpec::DirichletData(_) | BCSpec::Buffer { .. } => BcKind::DirichletZero,
            BCSpec::Periodic(_) => BcKind::Periodic,
            BCSpec::MeanZero(_) => BcKind::Free,
        }
    }

    /// Background gradient, when it is a constant.
    pub fn lambda(&self) -> Option<&Mat> {
        match self {
            BCSpec::DirichletAffine(l) | BCSpec::Periodic(l) | BCSpec::MeanZero(l) => Some(l),
            BCSpec::Buffer { lambda, .. } => Some(lambda),
            BCSpec::DirichletData(_) => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BCSpec::DirichletAffine(_) => "dirichlet_affine",
            BCSpec::Periodic(_) => "periodic",
            BCSpec::MeanZero(_) => "mean_zero",
            BCSpec::DirichletData(_) => "dirichlet_data",
            BCSpec::Buffer { .. } => "buffer",
        }
    }

    fn validate(&self, grid: &Grid, spec: &IntegrandSpec) -> Result<()> {
        if let Some(l) = self.lambda() {
            if l.rows() != spec.m || l.cols() != spec.d {
                return Err(Error::param(format!(
                    "Λ is {}x{} but the integrand expects {}x{}",
                    l.rows(),
                    l.cols(),
                    spec.m,
                    spec.d
                )));
            }
        }
        match self {
            BCSpec::Buffer { eta, .. } if !(*eta >= 0.0) => {
                Err(Error::param(format!("buffer width {eta} must be >= 0")))
            }
            BCSpec::DirichletData(g) => {
                if g.grid() != grid || g.m() != spec.m || g.bc().is_periodic() {
                    Err(Error::param("boundary data must be a non-periodic field on the same grid"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

enum Background {
    Constant(Mat),
    PerPoint(Vec<Mat>),
}

/// Discrete cell energy `φ ↦ ⨍_{Q_R} V(y, t(Λ + ∇φ))` with cached phases.
pub struct CellEnergy<'a> {
    grid: Grid,
    spec: &'a IntegrandSpec,
    bc: BCSpec,
    truncation: Option<TruncationLevel>,
    t: f64,
    nonconvex: bool,
    el: Element,
    phases: Vec<Phase>,
    background: Background,
    constrained: Vec<usize>,
}

impl<'a> CellEnergy<'a> {
    pub fn new(
        grid: &Grid,
        spec: &'a IntegrandSpec,
        medium: &dyn Medium,
        bc: BCSpec,
        truncation: Option<TruncationLevel>,
        t: f64,
    ) -> Result<Self> {
        if grid.dim() != spec.d {
            return Err(Error::param(format!(
                "grid dimension {} but integrand dimension {}",
                grid.dim(),
                spec.d
            )));
        }
        if medium.dim() != grid.dim() {
            return Err(Error::param("medium and grid dimensions differ"));
        }
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::param(format!("dilation t = {t} not in (0, 1]")));
        }
        bc.validate(grid, spec)?;
        let el = grid.element();
        let points = grid.quadrature_points();
        let eta = match &bc {
            BCSpec::Buffer { eta, .. } => *eta,
            _ => 0.0,
        };
        let phases = points
            .iter()
            .map(|y| {
                if in_buffer(y, grid.dim(), grid.side(), eta) {
                    Phase::Buffer
                } else if medium.in_inclusion(y) {
                    Phase::Inclusion
                } else {
                    Phase::Matrix
                }
            })
            .collect();
        let background = match &bc {
            BCSpec::DirichletData(g) => Background::PerPoint(point_gradients(grid, &el, g)),
            other => Background::Constant(*other.lambda().expect("constant background")),
        };
        let constrained = if bc.field_kind() == BcKind::DirichletZero {
            (0..grid.node_count(false)).filter(|&n| grid.on_boundary(n)).collect()
        } else {
            Vec::new()
        };
        Ok(CellEnergy {
            grid: grid.clone(),
            spec,
            bc,
            truncation,
            t,
            nonconvex: false,
            el,
            phases,
            background,
            constrained,
        })
    }

    /// Evaluate `W = V + W^nc` instead of `V`.
    pub fn with_nonconvex(mut self, on: bool) -> Self {
        self.nonconvex = on && self.spec.nonconvex.is_some();
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn bc(&self) -> &BCSpec {
        &self.bc
    }

    pub fn spec(&self) -> &IntegrandSpec {
        self.spec
    }

    pub fn truncation(&self) -> Option<TruncationLevel> {
        self.truncation
    }

    pub fn set_truncation(&mut self, k: Option<TruncationLevel>) {
        self.truncation = k;
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    /// Number of nodal unknowns (including constrained ones).
    pub fn len(&self) -> usize {
        self.grid.node_count(self.bc.field_kind().is_periodic()) * self.spec.m
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn zero_field(&self) -> Field {
        Field::zeros(&self.grid, self.spec.m, self.bc.field_kind())
    }

    pub fn field_from(&self, values: Vec<f64>) -> Result<Field> {
        Field::from_values(&self.grid, self.spec.m, self.bc.field_kind(), values)
    }

    /// Nodes whose values are fixed at zero.
    pub fn constrained_nodes(&self) -> &[usize] {
        &self.constrained
    }

    pub fn check_field(&self, field: &Field) -> Result<()> {
        if field.grid() != &self.grid || field.m() != self.spec.m || field.bc() != self.bc.field_kind() {
            return Err(Error::param(format!(
                "field ({} components, {}) does not match the {} problem",
                field.m(),
                field.bc().name(),
                self.bc.name()
            )));
        }
        Ok(())
    }

    /// Zero the constrained entries of a nodal vector.
    pub fn mask(&self, v: &mut [f64]) {
        let m = self.spec.m;
        for &node in &self.constrained {
            v[node * m..(node + 1) * m].iter_mut().for_each(|x| *x = 0.0);
        }
    }

    fn total_gradient(&self, local: &[f64], q: usize, gidx: usize) -> Mat {
        let (m, d, corners) = (self.spec.m, self.grid.dim(), self.el.corners);
        let mut g = match &self.background {
            Background::Constant(l) => *l,
            Background::PerPoint(v) => v[gidx],
        };
        for i in 0..m {
            for a in 0..d {
                let mut s = 0.0;
                for c in 0..corners {
                    s += self.el.dshape[(q * corners + c) * d + a] * local[c * m + i];
                }
                g[(i, a)] += s;
            }
        }
        if let Background::Constant(_) = self.background {
            g = g.scale(self.t);
        }
        g
    }

    fn gather(&self, values: &[f64], cell: usize, nodes: &mut [usize; 8], local: &mut [f64; 24]) {
        let m = self.spec.m;
        self.grid.cell_nodes(cell, self.bc.field_kind().is_periodic(), nodes);
        for c in 0..self.el.corners {
            for i in 0..m {
                local[c * m + i] = values[nodes[c] * m + i];
            }
        }
    }

    fn check_len(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::param(format!(
                "nodal vector has {} entries, expected {}",
                values.len(),
                self.len()
            )));
        }
        Ok(())
    }

    /// Energy of raw nodal values.
    pub fn value(&self, values: &[f64]) -> Result<ExtReal> {
        self.check_len(values)?;
        let nq = self.el.nq;
        let mut parts = Vec::with_capacity(self.phases.len());
        let mut nodes = [0usize; 8];
        let mut local = [0.0; 24];
        for cell in 0..self.grid.cell_count() {
            self.gather(values, cell, &mut nodes, &mut local);
            for q in 0..nq {
                let gidx = cell * nq + q;
                let lam = self.total_gradient(&local, q, gidx);
                match self.spec.density(self.phases[gidx], &lam, self.truncation, self.nonconvex)? {
                    ExtReal::Finite(v) => parts.push(v * self.el.weight[q]),
                    ExtReal::Infinite => return Ok(ExtReal::Infinite),
                }
            }
        }
        Ok(ExtReal::Finite(pairwise_sum(&parts)))
    }

    /// Energy and its exact gradient in the nodal values (constrained entries
    /// zeroed); `None` when the energy is infinite.
    pub fn value_grad(&self, values: &[f64]) -> Result<Option<(f64, Vec<f64>)>> {
        self.check_len(values)?;
        let (m, d, corners, nq) = (self.spec.m, self.grid.dim(), self.el.corners, self.el.nq);
        let scale = match self.background {
            Background::Constant(_) => self.t,
            Background::PerPoint(_) => 1.0,
        };
        let mut parts = Vec::with_capacity(self.phases.len());
        let mut grad = vec![0.0; values.len()];
        let mut nodes = [0usize; 8];
        let mut local = [0.0; 24];
        for cell in 0..self.grid.cell_count() {
            self.gather(values, cell, &mut nodes, &mut local);
            for q in 0..nq {
                let gidx = cell * nq + q;
                let lam = self.total_gradient(&local, q, gidx);
                let Some((v, dv)) = self.spec.density_grad(self.phases[gidx], &lam, self.truncation, self.nonconvex)?
                else {
                    return Ok(None);
                };
                let w = self.el.weight[q];
                parts.push(v * w);
                let f = w * scale;
                for c in 0..corners {
                    let ds = &self.el.dshape[(q * corners + c) * d..(q * corners + c + 1) * d];
                    for i in 0..m {
                        let mut s = 0.0;
                        for a in 0..d {
                            s += dv[(i, a)] * ds[a];
                        }
                        grad[nodes[c] * m + i] += f * s;
                    }
                }
            }
        }
        self.mask(&mut grad);
        Ok(Some((pairwise_sum(&parts), grad)))
    }
}

fn point_gradients(grid: &Grid, el: &Element, g: &Field) -> Vec<Mat> {
    let (m, d) = (g.m(), grid.dim());
    let mut out = Vec::with_capacity(grid.cell_count() * el.nq);
    let mut nodes = [0usize; 8];
    for cell in 0..grid.cell_count() {
        grid.cell_nodes(cell, false, &mut nodes);
        for q in 0..el.nq {
            let mut lam = Mat::zeros(m, d);
            for i in 0..m {
                for a in 0..d {
                    let mut s = 0.0;
                    for c in 0..el.corners {
                        s += el.dshape[(q * el.corners + c) * d + a] * g.values()[nodes[c] * m + i];
                    }
                    lam[(i, a)] = s;
                }
            }
            out.push(lam);
        }
    }
    out
}

/// Energy of a field; `+∞` when some quadrature point is infeasible.
pub fn energy(
    grid: &Grid,
    field: &Field,
    spec: &IntegrandSpec,
    medium: &dyn Medium,
    bc: &BCSpec,
    truncation: Option<TruncationLevel>,
    t: f64,
) -> Result<ExtReal> {
    let e = CellEnergy::new(grid, spec, medium, bc.clone(), truncation, t)?;
    e.check_field(field)?;
    e.value(field.values())
}

/// Exact nodal gradient of the discrete energy; a domain error when it is infinite.
pub fn energy_gradient(
    grid: &Grid,
    field: &Field,
    spec: &IntegrandSpec,
    medium: &dyn Medium,
    bc: &BCSpec,
    truncation: Option<TruncationLevel>,
    t: f64,
) -> Result<Vec<f64>> {
    let e = CellEnergy::new(grid, spec, medium, bc.clone(), truncation, t)?;
    e.check_field(field)?;
    match e.value_grad(field.values())? {
        Some((_, g)) => Ok(g),
        None => Err(Error::domain("energy is infinite at this field")),
    }
}

/// The linear map `P φ = φ − (mean ∇φ) x` on free nodal vectors, and its adjoint.
pub struct MeanZeroProjector {
    m: usize,
    d: usize,
    /// `mean ∇φ_{i,a} = Σ_node weights[node·d + a] φ_{node,i}`
    weights: Vec<f64>,
    coords: Vec<f64>,
}

impl MeanZeroProjector {
    pub fn new(grid: &Grid, m: usize) -> Self {
        let d = grid.dim();
        let el = grid.element();
        let nodes_total = grid.node_count(false);
        let mut weights = vec![0.0; nodes_total * d];
        let mut nodes = [0usize; 8];
        for cell in 0..grid.cell_count() {
            grid.cell_nodes(cell, false, &mut nodes);
            for q in 0..el.nq {
                for c in 0..el.corners {
                    for a in 0..d {
                        weights[nodes[c] * d + a] += el.weight[q] * el.dshape[(q * el.corners + c) * d + a];
                    }
                }
            }
        }
        let mut coords = Vec::with_capacity(nodes_total * d);
        for node in 0..nodes_total {
            let x = grid.node_coords(node, false);
            coords.extend_from_slice(&x[..d]);
        }
        MeanZeroProjector { m, d, weights, coords }
    }

    fn contract(&self, w: &[f64], v: &[f64]) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        let nodes = w.len() / self.d;
        for node in 0..nodes {
            for i in 0..self.m {
                let x = v[node * self.m + i];
                for a in 0..self.d {
                    out[i][a] += w[node * self.d + a] * x;
                }
            }
        }
        out
    }

    fn subtract(&self, w: &[f64], s: &[[f64; 3]; 3], v: &mut [f64]) {
        let nodes = w.len() / self.d;
        for node in 0..nodes {
            for i in 0..self.m {
                let mut corr = 0.0;
                for a in 0..self.d {
                    corr += s[i][a] * w[node * self.d + a];
                }
                v[node * self.m + i] -= corr;
            }
        }
    }

    pub fn apply(&self, v: &mut [f64]) {
        let g = self.contract(&self.weights, v);
        self.subtract(&self.coords, &g, v);
    }

    pub fn adjoint(&self, v: &mut [f64]) {
        let s = self.contract(&self.coords, v);
        self.subtract(&self.weights, &s, v);
    }
}
