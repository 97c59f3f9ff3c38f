//! Penrose's graphical construction: greedy time-ordered thinning of a
//! space-time Poisson process.
//!
//! Candidates are generated per voxel from keyed substreams. Within a voxel,
//! the count is split down a fixed dyadic hierarchy with keyed binomial draws,
//! so the candidate set inside `Q_R` is the same realization whether the
//! construction runs on the plain box (with a margin) or on the torus. Only
//! branches that are not already blocked are materialized.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};

use super::geometry::{CellList, Geometry, Point};
use crate::error::{Error, Result};
use crate::seed::substream_rng;

/// Dyadic depth at which saturation-phase candidates are placed.
const SATURATION_DEPTH: u32 = 12;
/// Hard cap on doubling time blocks in the saturation phase.
const MAX_BLOCKS: u32 = 44;

#[derive(Clone, Debug)]
pub(crate) struct Thinning<'a> {
    pub dim: usize,
    pub side: f64,
    pub radius: f64,
    /// Candidates per unit volume per unit time.
    pub intensity: f64,
    pub margin: f64,
    pub periodic: bool,
    /// Continue the time axis past `t = 1` until no admissible site remains.
    pub saturate: bool,
    pub seed: u64,
    pub label: &'a str,
}

struct Candidate {
    time: f64,
    pos: Point,
}

struct State<'a> {
    cfg: &'a Thinning<'a>,
    voxel: f64,
    anchor: f64,
    exclusion: f64,
    accepted: CellList,
}

impl State<'_> {
    fn node_size(&self, depth: u32) -> f64 {
        self.voxel / (1u64 << depth) as f64
    }

    fn node_lo(&self, depth: u32, coords: &[i64; 3]) -> Point {
        let size = self.node_size(depth);
        let mut lo = [0.0; 3];
        for a in 0..self.cfg.dim {
            lo[a] = self.anchor + coords[a] as f64 * size;
        }
        lo
    }

    /// True when a single exclusion ball contains the whole node.
    fn covered(&self, depth: u32, coords: &[i64; 3]) -> bool {
        let size = self.node_size(depth);
        let lo = self.node_lo(depth, coords);
        let mut center = lo;
        for a in 0..self.cfg.dim {
            center[a] += 0.5 * size;
        }
        let geom = *self.accepted.geometry();
        let half_diag = 0.5 * size * (self.cfg.dim as f64).sqrt();
        let e2 = self.exclusion * self.exclusion;
        self.accepted.any_within(&center, self.exclusion + half_diag, |id, _| {
            let q = &self.accepted.points()[id];
            let mut far = 0.0;
            for a in 0..self.cfg.dim {
                let d = geom.delta(&center, q, a).abs() + 0.5 * size;
                far += d * d;
            }
            far < e2
        })
    }

    fn admissible(&self, p: &Point) -> bool {
        !self.accepted.any_within(p, self.exclusion, |_, _| true)
    }

    fn has_gap(&self, depth: u32, coords: &[i64; 3]) -> bool {
        if self.covered(depth, coords) {
            return false;
        }
        let size = self.node_size(depth);
        let mut center = self.node_lo(depth, coords);
        for a in 0..self.cfg.dim {
            center[a] += 0.5 * size;
        }
        if self.admissible(&center) {
            return true;
        }
        if depth == SATURATION_DEPTH {
            return false;
        }
        children(self.cfg.dim, coords).any(|c| self.has_gap(depth + 1, &c))
    }

    fn stream(&self, block: u32, depth: u32, coords: &[i64; 3], tag: i64) -> rand_chacha::ChaCha8Rng {
        substream_rng(
            self.cfg.seed,
            self.cfg.label,
            &[block as i64, depth as i64, coords[0], coords[1], coords[2], tag],
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(
        &self,
        block: u32,
        depth: u32,
        coords: &[i64; 3],
        count: u64,
        leaf_depth: u32,
        window: (f64, f64),
        out: &mut Vec<Candidate>,
    ) -> Result<()> {
        if depth == leaf_depth {
            let mut rng = self.stream(block, depth, coords, 1);
            let size = self.node_size(depth);
            let lo = self.node_lo(depth, coords);
            for _ in 0..count {
                let time = window.0 + (window.1 - window.0) * rng.random::<f64>();
                let mut pos = [0.0; 3];
                for a in 0..self.cfg.dim {
                    pos[a] = lo[a] + size * rng.random::<f64>();
                }
                out.push(Candidate { time, pos });
            }
            return Ok(());
        }
        let mut rng = self.stream(block, depth, coords, 2);
        let n_children = 1u64 << self.cfg.dim;
        let mut remaining = count;
        for (i, child) in children(self.cfg.dim, coords).enumerate() {
            let left = n_children - i as u64;
            let c = if left == 1 || remaining == 0 {
                remaining
            } else {
                Binomial::new(remaining, 1.0 / left as f64)
                    .map_err(|e| Error::param(format!("binomial split: {e}")))?
                    .sample(&mut rng)
            };
            remaining -= c;
            if c > 0 && !self.covered(depth + 1, &child) {
                self.descend(block, depth + 1, &child, c, leaf_depth, window, out)?;
            }
        }
        Ok(())
    }
}

fn children(dim: usize, coords: &[i64; 3]) -> impl Iterator<Item = [i64; 3]> + '_ {
    (0..(1usize << dim)).map(move |bits| {
        let mut c = [0i64; 3];
        for a in 0..dim {
            c[a] = 2 * coords[a] + ((bits >> a) & 1) as i64;
        }
        c
    })
}

impl Thinning<'_> {
    /// Runs the construction and returns accepted centers inside `Q_R`, in
    /// acceptance order.
    pub(crate) fn run(&self) -> Result<Vec<Point>> {
        let dim = self.dim;
        let per_axis = (self.side / (0.5 * self.radius)).ceil().max(1.0) as i64;
        let voxel = self.side / per_axis as f64;
        let margin_voxels = if self.periodic {
            0
        } else {
            (self.margin / voxel).ceil() as i64
        };
        let geom = if self.periodic {
            Geometry::centered(dim, self.side, true)
        } else {
            Geometry {
                dim,
                lo: -0.5 * self.side - margin_voxels as f64 * voxel,
                side: self.side + 2.0 * margin_voxels as f64 * voxel,
                periodic: false,
            }
        };
        let exclusion = 2.0 * self.radius;
        let reach = exclusion + voxel * (dim as f64).sqrt();
        let mut state = State {
            cfg: self,
            voxel,
            anchor: -0.5 * self.side,
            exclusion,
            accepted: CellList::new(geom, reach),
        };

        let lo = -margin_voxels;
        let hi = per_axis + margin_voxels;
        let span = (hi - lo) as usize;
        let mut active: Vec<[i64; 3]> = (0..span.pow(dim as u32))
            .map(|flat| {
                let mut c = [0i64; 3];
                let mut rem = flat;
                for a in 0..dim {
                    c[a] = lo + (rem % span) as i64;
                    rem /= span;
                }
                c
            })
            .collect();

        let voxel_volume = voxel.powi(dim as i32);
        for block in 0..MAX_BLOCKS {
            if block > 0 && !self.saturate {
                break;
            }
            let (window, leaf_depth) = if block == 0 {
                ((0.0, 1.0), 0)
            } else {
                let start = (1u64 << (block - 1)) as f64;
                ((start, 2.0 * start), SATURATION_DEPTH)
            };
            let mean = self.intensity * voxel_volume * (window.1 - window.0);
            let mut candidates = Vec::new();
            if mean > 0.0 {
                let poisson = Poisson::new(mean).map_err(|e| Error::param(format!("poisson mean {mean}: {e}")))?;
                for coords in &active {
                    let mut rng = state.stream(block, 0, coords, 0);
                    let count = poisson.sample(&mut rng) as u64;
                    if count > 0 {
                        state.descend(block, 0, coords, count, leaf_depth, window, &mut candidates)?;
                    }
                }
            }
            candidates.sort_by(|a, b| a.time.total_cmp(&b.time));
            for c in candidates {
                if state.admissible(&c.pos) {
                    state.accepted.insert(c.pos);
                }
            }
            if self.saturate {
                active.retain(|c| state.has_gap(0, c));
                if active.is_empty() {
                    break;
                }
            }
        }

        let inner = Geometry::centered(dim, self.side, self.periodic);
        Ok(state
            .accepted
            .points()
            .iter()
            .filter(|p| inner.contains(p))
            .copied()
            .collect())
    }
}
