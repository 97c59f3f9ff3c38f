use super::Grid;
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::microstructure::Point;
use crate::reduce::pairwise_sum;

/// How a field's nodal values are constrained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcKind {
    /// Values vanish on `∂Q_R`.
    DirichletZero,
    /// Opposite faces identified; `n^d` nodes.
    Periodic,
    Free,
}

impl BcKind {
    pub fn name(self) -> &'static str {
        match self {
            BcKind::DirichletZero => "dirichlet_zero",
            BcKind::Periodic => "periodic",
            BcKind::Free => "free",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "dirichlet_zero" => Some(BcKind::DirichletZero),
            "periodic" => Some(BcKind::Periodic),
            "free" => Some(BcKind::Free),
            _ => None,
        }
    }

    pub fn is_periodic(self) -> bool {
        self == BcKind::Periodic
    }
}

/// Nodal values of a map `Q_R → R^m`, stored node-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    m: usize,
    bc: BcKind,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &Grid, m: usize, bc: BcKind) -> Self {
        let len = grid.node_count(bc.is_periodic()) * m;
        Field {
            grid: grid.clone(),
            m,
            bc,
            values: vec![0.0; len],
        }
    }

    pub fn from_values(grid: &Grid, m: usize, bc: BcKind, values: Vec<f64>) -> Result<Self> {
        let expect = grid.node_count(bc.is_periodic()) * m;
        if values.len() != expect {
            return Err(Error::param(format!("field needs {expect} values, got {}", values.len())));
        }
        let f = Field {
            grid: grid.clone(),
            m,
            bc,
            values,
        };
        if bc == BcKind::DirichletZero {
            for node in 0..grid.node_count(false) {
                if grid.on_boundary(node) && f.node_values(node).iter().any(|&v| v != 0.0) {
                    return Err(Error::param("dirichlet_zero field is nonzero on the boundary"));
                }
            }
        }
        Ok(f)
    }

    /// Nodal interpolant of `x ↦ G x` (a free field).
    pub fn affine(grid: &Grid, g: &Mat) -> Self {
        let mut f = Field::zeros(grid, g.rows(), BcKind::Free);
        for node in 0..grid.node_count(false) {
            let x = grid.node_coords(node, false);
            for i in 0..g.rows() {
                let mut v = 0.0;
                for a in 0..grid.dim() {
                    v += g[(i, a)] * x[a];
                }
                f.values[node * g.rows() + i] = v;
            }
        }
        f
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn bc(&self) -> BcKind {
        self.bc
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Raw access; callers keep boundary values of Dirichlet fields at zero.
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn node_values(&self, node: usize) -> &[f64] {
        &self.values[node * self.m..(node + 1) * self.m]
    }

    /// Same values relabelled with another constraint kind of identical storage.
    pub fn with_bc(mut self, bc: BcKind) -> Result<Self> {
        if bc.is_periodic() != self.bc.is_periodic() {
            return Err(Error::param("periodic and non-periodic fields have different storage"));
        }
        self.bc = bc;
        Ok(self)
    }

    /// True when the node's values are fixed by the constraint.
    pub fn is_constrained(&self, node: usize) -> bool {
        self.bc == BcKind::DirichletZero && self.grid.on_boundary(node)
    }

    /// Q1 interpolation at a point of `Q_R` (wrapped for periodic fields).
    pub fn interpolate(&self, y: &Point) -> Vec<f64> {
        let g = &self.grid;
        let periodic = self.bc.is_periodic();
        let mut cell = 0;
        let mut stride = 1;
        let mut xi = [0.0; 3];
        for a in 0..g.dim() {
            let mut s = (y[a] - g.lo()) / g.h();
            if periodic {
                s = s.rem_euclid(g.n() as f64);
            }
            let c = (s.floor().max(0.0) as usize).min(g.n() - 1);
            xi[a] = (s - c as f64).clamp(0.0, 1.0);
            cell += c * stride;
            stride *= g.n();
        }
        let mut nodes = [0usize; 8];
        g.cell_nodes(cell, periodic, &mut nodes);
        let mut out = vec![0.0; self.m];
        for (c, &node) in nodes.iter().enumerate().take(1 << g.dim()) {
            let mut w = 1.0;
            for (a, &x) in xi.iter().enumerate().take(g.dim()) {
                w *= if (c >> a) & 1 == 1 { x } else { 1.0 - x };
            }
            for (o, v) in out.iter_mut().zip(self.node_values(node)) {
                *o += w * v;
            }
        }
        out
    }

    /// Plain-text form: header `dim R n m bc`, then one node per line.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{} {:?} {} {} {}\n",
            self.grid.dim(),
            self.grid.side(),
            self.grid.n(),
            self.m,
            self.bc.name()
        );
        for node in 0..self.values.len() / self.m {
            let row: Vec<String> = self.node_values(node).iter().map(|v| format!("{v:.16e}")).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Format("empty field file".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 5 {
            return Err(Error::Format(format!("field header needs `dim R n m bc`, got `{header}`")));
        }
        let num = |s: &str, what: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::Format(format!("bad {what} `{s}` in field header")))
        };
        let dim = num(h[0], "dim")?;
        let side: f64 = h[1]
            .parse()
            .map_err(|_| Error::Format(format!("bad R `{}` in field header", h[1])))?;
        let n = num(h[2], "n")?;
        let m = num(h[3], "m")?;
        let bc = BcKind::from_name(h[4]).ok_or_else(|| Error::Format(format!("unknown bc `{}`", h[4])))?;
        let grid = Grid::new(dim, side, n)?;
        let mut values = Vec::new();
        for (i, line) in lines.enumerate() {
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Format(format!("bad number on field line {}", i + 2)))?;
            if row.len() != m {
                return Err(Error::Format(format!("field line {} has {} values, expected {m}", i + 2, row.len())));
            }
            values.extend(row);
        }
        Field::from_values(&grid, m, bc, values).map_err(|e| Error::Format(e.to_string()))
    }
}

/// Volume average of `∇φ` over `Q_R` by the grid quadrature.
pub fn mean_gradient(grid: &Grid, field: &Field) -> Result<Mat> {
    if field.grid() != grid {
        return Err(Error::param("field lives on a different grid"));
    }
    let el = grid.element();
    let d = grid.dim();
    let m = field.m();
    let periodic = field.bc().is_periodic();
    let mut parts: Vec<Vec<f64>> = vec![Vec::with_capacity(grid.cell_count() * el.nq); m * d];
    let mut nodes = [0usize; 8];
    for cell in 0..grid.cell_count() {
        grid.cell_nodes(cell, periodic, &mut nodes);
        for q in 0..el.nq {
            for i in 0..m {
                for a in 0..d {
                    let mut g = 0.0;
                    for c in 0..el.corners {
                        g += el.dshape[(q * el.corners + c) * d + a] * field.values()[nodes[c] * m + i];
                    }
                    parts[i * d + a].push(g * el.weight[q]);
                }
            }
        }
    }
    let mut out = Mat::zeros(m, d);
    for i in 0..m {
        for a in 0..d {
            out[(i, a)] = pairwise_sum(&parts[i * d + a]);
        }
    }
    Ok(out)
}

/// `φ ← φ − (mean ∇φ) x`, so that the result has zero mean gradient.
pub fn project_mean_zero(grid: &Grid, field: &Field) -> Result<Field> {
    if field.bc() != BcKind::Free {
        return Err(Error::Unsupported(format!(
            "mean-zero projection of a {} field",
            field.bc().name()
        )));
    }
    let g = mean_gradient(grid, field)?;
    let affine = Field::affine(grid, &g);
    let mut out = field.clone();
    for (v, a) in out.values.iter_mut().zip(affine.values()) {
        *v -= a;
    }
    Ok(out)
}
