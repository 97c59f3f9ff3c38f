//! Distances on boxes and tori, and a uniform cell list for neighbor queries.

pub type Point = [f64; 3];

/// Axis-aligned cube `[lo, lo + side)^d`, optionally with periodic identification.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Geometry {
    pub dim: usize,
    pub lo: f64,
    pub side: f64,
    pub periodic: bool,
}

impl Geometry {
    pub fn centered(dim: usize, side: f64, periodic: bool) -> Self {
        Geometry {
            dim,
            lo: -0.5 * side,
            side,
            periodic,
        }
    }

    #[inline]
    pub fn delta(&self, a: &Point, b: &Point, axis: usize) -> f64 {
        let d = a[axis] - b[axis];
        if self.periodic {
            d - self.side * (d / self.side).round()
        } else {
            d
        }
    }

    #[inline]
    pub fn dist_sq(&self, a: &Point, b: &Point) -> f64 {
        let mut s = 0.0;
        for axis in 0..self.dim {
            let d = self.delta(a, b, axis);
            s += d * d;
        }
        s
    }

    pub fn dist(&self, a: &Point, b: &Point) -> f64 {
        self.dist_sq(a, b).sqrt()
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..self.dim).all(|a| p[a] >= self.lo && p[a] < self.lo + self.side)
    }

    /// Wraps a point into the fundamental cell (identity on plain boxes).
    pub fn wrap(&self, p: &Point) -> Point {
        if !self.periodic {
            return *p;
        }
        let mut q = *p;
        for a in 0..self.dim {
            let mut x = (q[a] - self.lo).rem_euclid(self.side) + self.lo;
            if x >= self.lo + self.side {
                x = self.lo;
            }
            q[a] = x;
        }
        q
    }
}

/// Uniform grid of buckets over a geometry; queries are exact for radii up to `cell`.
#[derive(Clone, Debug)]
pub struct CellList {
    geom: Geometry,
    cell: f64,
    per_axis: usize,
    buckets: Vec<Vec<usize>>,
    points: Vec<Point>,
}

impl CellList {
    /// `reach` is the largest query radius that will be used.
    pub fn new(geom: Geometry, reach: f64) -> Self {
        let per_axis = ((geom.side / reach.max(1e-12)).floor() as usize).clamp(1, 256);
        let cell = geom.side / per_axis as f64;
        let buckets = vec![Vec::new(); per_axis.pow(geom.dim as u32)];
        CellList {
            geom,
            cell,
            per_axis,
            buckets,
            points: Vec::new(),
        }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    fn axis_index(&self, x: f64) -> i64 {
        ((x - self.geom.lo) / self.cell).floor() as i64
    }

    fn bucket_of(&self, p: &Point) -> usize {
        let mut idx = 0usize;
        let mut stride = 1usize;
        for a in 0..self.geom.dim {
            let i = self.axis_index(p[a]);
            let i = if self.geom.periodic {
                i.rem_euclid(self.per_axis as i64)
            } else {
                i.clamp(0, self.per_axis as i64 - 1)
            } as usize;
            idx += i * stride;
            stride *= self.per_axis;
        }
        idx
    }

    pub fn insert(&mut self, p: Point) -> usize {
        let id = self.points.len();
        let b = self.bucket_of(&p);
        self.buckets[b].push(id);
        self.points.push(p);
        id
    }

    /// Calls `f(index, dist_sq)` for every stored point within `radius` of `p`
    /// (`radius` must not exceed the construction reach). Stops early when `f`
    /// returns `true`; the return value reports whether it did.
    pub fn any_within<F: FnMut(usize, f64) -> bool>(&self, p: &Point, radius: f64, mut f: F) -> bool {
        let r2 = radius * radius;
        let n = self.per_axis as i64;
        let dim = self.geom.dim;
        // Periodic lists with fewer than three buckets per axis would visit
        // the same bucket twice; fall back to a scan.
        if n < 3 {
            for (i, q) in self.points.iter().enumerate() {
                let d2 = self.geom.dist_sq(p, q);
                if d2 < r2 && f(i, d2) {
                    return true;
                }
            }
            return false;
        }
        let mut base = [0i64; 3];
        for a in 0..dim {
            base[a] = self.axis_index(p[a]);
            if !self.geom.periodic {
                // Stored points live inside the box, so a query outside it only
                // needs the nearest edge buckets.
                base[a] = base[a].clamp(0, n - 1);
            }
        }
        let combos = 3usize.pow(dim as u32);
        'outer: for c in 0..combos {
            let mut idx = 0usize;
            let mut stride = 1usize;
            let mut rem = c;
            for a in 0..dim {
                let off = (rem % 3) as i64 - 1;
                rem /= 3;
                let mut i = base[a] + off;
                if self.geom.periodic {
                    i = i.rem_euclid(n);
                } else if !(0..n).contains(&i) {
                    continue 'outer;
                }
                idx += i as usize * stride;
                stride *= self.per_axis;
            }
            for &id in &self.buckets[idx] {
                let d2 = self.geom.dist_sq(p, &self.points[id]);
                if d2 < r2 && f(id, d2) {
                    return true;
                }
            }
        }
        false
    }

    /// Distance from `p` to the nearest stored point, if any lies within `radius`.
    pub fn nearest_within(&self, p: &Point, radius: f64) -> Option<f64> {
        let mut best = f64::INFINITY;
        self.any_within(p, radius, |_, d2| {
            best = best.min(d2);
            false
        });
        best.is_finite().then(|| best.sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_distance_uses_minimum_image() {
        let g = Geometry::centered(2, 10.0, true);
        let a = [-4.9, 0.0, 0.0];
        let b = [4.9, 0.0, 0.0];
        assert!((g.dist(&a, &b) - 0.2).abs() < 1e-12);
        let plain = Geometry::centered(2, 10.0, false);
        assert!((plain.dist(&a, &b) - 9.8).abs() < 1e-12);
    }

    #[test]
    fn cell_list_agrees_with_scan() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for periodic in [false, true] {
            let g = Geometry::centered(2, 7.0, periodic);
            let mut cl = CellList::new(g, 1.0);
            let pts: Vec<Point> = (0..200)
                .map(|_| [rng.random_range(-3.5..3.5), rng.random_range(-3.5..3.5), 0.0])
                .collect();
            for p in &pts {
                cl.insert(*p);
            }
            for _ in 0..200 {
                let q = [rng.random_range(-3.6..3.6), rng.random_range(-3.6..3.6), 0.0];
                let mut found = Vec::new();
                cl.any_within(&q, 0.9, |i, _| {
                    found.push(i);
                    false
                });
                found.sort();
                let expect: Vec<usize> = (0..pts.len()).filter(|&i| g.dist(&q, &pts[i]) < 0.9).collect();
                assert_eq!(found, expect);
            }
        }
    }
}
