//! Regular Q1 finite elements on the cube `Q_R = [-R/2, R/2]^d`.

mod energy;
mod field;

pub use energy::{energy, energy_gradient, BCSpec, CellEnergy, MeanZeroProjector};
pub use field::{mean_gradient, project_mean_zero, BcKind, Field};

use crate::error::{Error, Result};
use crate::microstructure::Point;

/// Gauss–Legendre nodes and weights on `[0, 1]`.
fn gauss_rule(q: usize) -> Result<Vec<(f64, f64)>> {
    let (x, w): (Vec<f64>, Vec<f64>) = match q {
        1 => (vec![0.0], vec![2.0]),
        2 => {
            let a = 1.0 / 3f64.sqrt();
            (vec![-a, a], vec![1.0, 1.0])
        }
        3 => {
            let a = (0.6f64).sqrt();
            (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        4 => {
            let s = (6.0f64 / 5.0).sqrt();
            let a = ((3.0 - 2.0 * s) / 7.0).sqrt();
            let b = ((3.0 + 2.0 * s) / 7.0).sqrt();
            let wa = (18.0 + 30f64.sqrt()) / 36.0;
            let wb = (18.0 - 30f64.sqrt()) / 36.0;
            (vec![-b, -a, a, b], vec![wb, wa, wa, wb])
        }
        _ => return Err(Error::param(format!("{q} Gauss points per axis not supported (1..=4)"))),
    };
    Ok(x.iter().zip(&w).map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect())
}

/// Uniform grid of `n^d` cells with tensor Gauss quadrature.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    side: f64,
    n: usize,
    h: f64,
    quad: Vec<(f64, f64)>,
}

impl Grid {
    pub fn new(dim: usize, side: f64, n: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::param(format!("dimension {dim} not in 1..=3")));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::param(format!("cube side {side} must be positive")));
        }
        if n < 2 {
            return Err(Error::param(format!("need at least 2 cells per side, got {n}")));
        }
        Ok(Grid {
            dim,
            side,
            n,
            h: side / n as f64,
            quad: gauss_rule(2)?,
        })
    }

    /// Grid with `cells_per_unit · R` cells per side.
    pub fn with_density(dim: usize, side: f64, cells_per_unit: f64) -> Result<Self> {
        let n = (cells_per_unit * side).round();
        if !(n >= 2.0) || ((n - cells_per_unit * side).abs() > 1e-9 * n) {
            return Err(Error::param(format!(
                "cells_per_unit {cells_per_unit} does not give an integer cell count on side {side}"
            )));
        }
        Grid::new(dim, side, n as usize)
    }

    pub fn with_quadrature(mut self, points_per_axis: usize) -> Result<Self> {
        self.quad = gauss_rule(points_per_axis)?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn quadrature_order(&self) -> usize {
        self.quad.len()
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    pub fn nodes_per_axis(&self, periodic: bool) -> usize {
        if periodic {
            self.n
        } else {
            self.n + 1
        }
    }

    pub fn node_count(&self, periodic: bool) -> usize {
        self.nodes_per_axis(periodic).pow(self.dim as u32)
    }

    pub fn cell_count(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn quad_points_per_cell(&self) -> usize {
        self.quad.len().pow(self.dim as u32)
    }

    pub fn lo(&self) -> f64 {
        -0.5 * self.side
    }

    /// Multi-index of a node (axis 0 fastest).
    pub fn node_multi(&self, node: usize, periodic: bool) -> [usize; 3] {
        let np = self.nodes_per_axis(periodic);
        let mut idx = [0; 3];
        let mut r = node;
        for a in idx.iter_mut().take(self.dim) {
            *a = r % np;
            r /= np;
        }
        idx
    }

    pub fn node_coords(&self, node: usize, periodic: bool) -> Point {
        let idx = self.node_multi(node, periodic);
        let mut p = [0.0; 3];
        for a in 0..self.dim {
            p[a] = self.lo() + idx[a] as f64 * self.h;
        }
        p
    }

    /// True for nodes on `∂Q_R` of a non-periodic grid.
    pub fn on_boundary(&self, node: usize) -> bool {
        let idx = self.node_multi(node, false);
        idx[..self.dim].iter().any(|&i| i == 0 || i == self.n)
    }

    /// Global node numbers of the `2^d` corners of cell `cell` (corner bit `a` = axis `a`).
    pub(crate) fn cell_nodes(&self, cell: usize, periodic: bool, out: &mut [usize; 8]) {
        let np = self.nodes_per_axis(periodic);
        let mut c = [0; 3];
        let mut r = cell;
        for a in c.iter_mut().take(self.dim) {
            *a = r % self.n;
            r /= self.n;
        }
        for (corner, slot) in out.iter_mut().enumerate().take(1 << self.dim) {
            let mut node = 0;
            let mut stride = 1;
            for a in 0..self.dim {
                let mut i = c[a] + ((corner >> a) & 1);
                if periodic && i == self.n {
                    i = 0;
                }
                node += i * stride;
                stride *= np;
            }
            *slot = node;
        }
    }

    /// Lower corner of a cell.
    pub(crate) fn cell_origin(&self, cell: usize) -> Point {
        let mut p = [0.0; 3];
        let mut r = cell;
        for a in p.iter_mut().take(self.dim) {
            *a = self.lo() + (r % self.n) as f64 * self.h;
            r /= self.n;
        }
        p
    }

    /// Shape data on the reference cell, scaled to this mesh.
    pub(crate) fn element(&self) -> Element {
        Element::new(self)
    }

    /// Physical quadrature points, cell by cell, in evaluation order.
    pub fn quadrature_points(&self) -> Vec<Point> {
        let el = self.element();
        let mut out = Vec::with_capacity(self.cell_count() * el.nq);
        for cell in 0..self.cell_count() {
            let o = self.cell_origin(cell);
            for q in 0..el.nq {
                let mut y = o;
                for a in 0..self.dim {
                    y[a] += el.offset[q][a];
                }
                out.push(y);
            }
        }
        out
    }
}

/// Q1 shape functions, gradients and weights at the quadrature points of one cell.
#[derive(Clone, Debug)]
pub(crate) struct Element {
    pub corners: usize,
    pub nq: usize,
    /// `dshape[(q * corners + c) * dim + a]`, physical derivative.
    pub dshape: Vec<f64>,
    /// Quadrature weight divided by `|Q_R|` (a mean, not an integral).
    pub weight: Vec<f64>,
    pub offset: Vec<Point>,
}

impl Element {
    fn new(grid: &Grid) -> Self {
        let d = grid.dim;
        let corners = 1 << d;
        let q1 = grid.quad.len();
        let nq = q1.pow(d as u32);
        let cell_share = 1.0 / grid.cell_count() as f64;
        let mut dshape = Vec::with_capacity(nq * corners * d);
        let mut weight = Vec::with_capacity(nq);
        let mut offset = Vec::with_capacity(nq);
        for q in 0..nq {
            let mut xi = [0.0; 3];
            let mut w = cell_share;
            let mut r = q;
            for x in xi.iter_mut().take(d) {
                let (g, gw) = grid.quad[r % q1];
                *x = g;
                w *= gw;
                r /= q1;
            }
            weight.push(w);
            let mut off = [0.0; 3];
            for a in 0..d {
                off[a] = xi[a] * grid.h;
            }
            offset.push(off);
            for c in 0..corners {
                for a in 0..d {
                    let mut der = 1.0;
                    for (b, &x) in xi.iter().enumerate().take(d) {
                        let hi = (c >> b) & 1 == 1;
                        der *= if b == a {
                            if hi {
                                1.0
                            } else {
                                -1.0
                            }
                        } else if hi {
                            x
                        } else {
                            1.0 - x
                        };
                    }
                    dshape.push(der / grid.h);
                }
            }
        }
        Element {
            corners,
            nq,
            dshape,
            weight,
            offset,
        }
    }
}
