//! Stationary point processes, their inclusion sets, and periodizations in law.
//!
//! Boxes are `Q_R = [-R/2, R/2)^d`. Inclusions are open balls `B_{R_n}(q_n)`.

mod geometry;
mod io;
mod thinning;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

pub use geometry::{CellList, Geometry, Point};
pub use io::{parse_sample, write_sample};

use crate::error::{Error, Result};
use crate::seed::substream_rng;
use thinning::Thinning;

/// The cube `Q_R` in dimension `dim`, optionally identified as a torus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxSpec {
    pub dim: usize,
    /// Side length `R`.
    pub side: f64,
    pub periodic: bool,
}

impl BoxSpec {
    pub fn new(dim: usize, side: f64) -> Result<Self> {
        let b = BoxSpec {
            dim,
            side,
            periodic: false,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn torus(dim: usize, side: f64) -> Result<Self> {
        let b = BoxSpec {
            dim,
            side,
            periodic: true,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::param(format!("dimension {} not in 1..=3", self.dim)));
        }
        if !(self.side > 0.0 && self.side.is_finite()) {
            return Err(Error::param(format!("box side {} must be positive", self.side)));
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    pub fn geometry(&self) -> Geometry {
        Geometry::centered(self.dim, self.side, self.periodic)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProcessKind {
    Poisson,
    RandomParking,
    Hardcore,
    DeterministicPeriodic,
}

impl ProcessKind {
    pub fn name(self) -> &'static str {
        match self {
            ProcessKind::Poisson => "poisson",
            ProcessKind::RandomParking => "random_parking",
            ProcessKind::Hardcore => "hardcore",
            ProcessKind::DeterministicPeriodic => "deterministic_periodic",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "poisson" => ProcessKind::Poisson,
            "random_parking" => ProcessKind::RandomParking,
            "hardcore" => ProcessKind::Hardcore,
            "deterministic_periodic" | "lattice" => ProcessKind::DeterministicPeriodic,
            _ => return None,
        })
    }
}

/// A realization of a point process on a box, with the radii of its inclusions.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSample {
    pub bbox: BoxSpec,
    pub points: Vec<Point>,
    pub radii: Vec<f64>,
    pub kind: ProcessKind,
    pub master_seed: u64,
    pub stream_label: String,
}

impl PointSample {
    pub fn empty(bbox: BoxSpec) -> Self {
        PointSample {
            bbox,
            points: Vec::new(),
            radii: Vec::new(),
            kind: ProcessKind::Poisson,
            master_seed: 0,
            stream_label: String::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_radius(&self) -> f64 {
        self.radii.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest distance between two centers (`+∞` for fewer than two points).
    pub fn min_pair_distance(&self) -> f64 {
        let g = self.bbox.geometry();
        let mut best = f64::INFINITY;
        for i in 0..self.points.len() {
            for j in 0..i {
                best = best.min(g.dist(&self.points[i], &self.points[j]));
            }
        }
        best
    }
}

/// A sample on `Q_R` extended `R`-periodically to all of space.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodizedSample {
    base: PointSample,
}

impl PeriodizedSample {
    pub fn base(&self) -> &PointSample {
        &self.base
    }

    pub fn period(&self) -> f64 {
        self.base.bbox.side
    }

    /// All periodic images whose centers lie in `Q_side` (centered at 0).
    pub fn points_in_cube(&self, side: f64) -> Vec<Point> {
        let dim = self.base.bbox.dim;
        let r = self.period();
        let reach = ((0.5 * side) / r).ceil() as i64 + 1;
        let target = Geometry::centered(dim, side, false);
        let mut out = Vec::new();
        let span = (2 * reach + 1) as usize;
        for flat in 0..span.pow(dim as u32) {
            let mut shift = [0.0; 3];
            let mut rem = flat;
            for s in shift.iter_mut().take(dim) {
                *s = ((rem % span) as i64 - reach) as f64 * r;
                rem /= span;
            }
            for p in &self.base.points {
                let mut q = *p;
                for a in 0..dim {
                    q[a] += shift[a];
                }
                if target.contains(&q) {
                    out.push(q);
                }
            }
        }
        out
    }
}

/// Parameters of the supported point processes.
#[derive(Clone, Debug, PartialEq)]
pub enum PointProcess {
    Poisson {
        intensity: f64,
        radius: f64,
    },
    RandomParking {
        radius: f64,
        candidate_intensity: Option<f64>,
        margin: Option<f64>,
    },
    Hardcore {
        intensity: f64,
        radius: f64,
        margin: Option<f64>,
    },
    /// Centers at `offset + spacing·z`, `z ∈ Z^d`.
    Lattice {
        spacing: f64,
        radius: f64,
        offset: f64,
    },
}

impl PointProcess {
    pub fn kind(&self) -> ProcessKind {
        match self {
            PointProcess::Poisson { .. } => ProcessKind::Poisson,
            PointProcess::RandomParking { .. } => ProcessKind::RandomParking,
            PointProcess::Hardcore { .. } => ProcessKind::Hardcore,
            PointProcess::Lattice { .. } => ProcessKind::DeterministicPeriodic,
        }
    }

    pub fn radius(&self) -> f64 {
        match *self {
            PointProcess::Poisson { radius, .. }
            | PointProcess::RandomParking { radius, .. }
            | PointProcess::Hardcore { radius, .. }
            | PointProcess::Lattice { radius, .. } => radius,
        }
    }

    pub fn sample(&self, bbox: BoxSpec, seed: u64, label: &str) -> Result<PointSample> {
        match *self {
            PointProcess::Poisson { intensity, radius } => sample_poisson(intensity, radius, bbox, seed, label),
            PointProcess::RandomParking {
                radius,
                candidate_intensity,
                margin,
            } => sample_random_parking(
                &ParkingParams {
                    radius,
                    candidate_intensity,
                    margin,
                },
                bbox,
                seed,
                label,
            ),
            PointProcess::Hardcore {
                intensity,
                radius,
                margin,
            } => sample_hardcore(intensity, radius, margin, bbox, seed, label),
            PointProcess::Lattice {
                spacing,
                radius,
                offset,
            } => sample_lattice(spacing, radius, offset, bbox),
        }
    }

    /// Samples on `Q_R` and periodizes in law in one step.
    pub fn sample_periodized(&self, dim: usize, side: f64, seed: u64, label: &str) -> Result<PeriodizedSample> {
        let base = self.sample(BoxSpec::new(dim, side)?, seed, label)?;
        periodize_in_law(self, &base)
    }
}

/// Draws a Poisson process of the given intensity on `Q_R`; every inclusion has `radius`.
pub fn sample_poisson(intensity: f64, radius: f64, bbox: BoxSpec, seed: u64, label: &str) -> Result<PointSample> {
    bbox.validate()?;
    if !intensity.is_finite() || intensity < 0.0 {
        return Err(Error::param(format!("poisson intensity {intensity} must be finite and >= 0")));
    }
    check_radius(radius)?;
    let mut rng = substream_rng(seed, label, &[]);
    let mean = intensity * bbox.volume();
    let count = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|e| Error::param(format!("poisson mean {mean}: {e}")))?
            .sample(&mut rng) as usize
    } else {
        0
    };
    let half = 0.5 * bbox.side;
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let mut p = [0.0; 3];
        for x in p.iter_mut().take(bbox.dim) {
            *x = rng.random_range(-half..half);
        }
        points.push(p);
    }
    Ok(PointSample {
        bbox,
        radii: vec![radius; points.len()],
        points,
        kind: ProcessKind::Poisson,
        master_seed: seed,
        stream_label: label.to_string(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParkingParams {
    pub radius: f64,
    /// Candidates per unit volume per unit time; default `5 / |B_radius|`.
    pub candidate_intensity: Option<f64>,
    /// Extra layer simulated around `Q_R`; default `max(0, 3·radius·ln R)`.
    pub margin: Option<f64>,
}

pub fn ball_volume(dim: usize, radius: f64) -> f64 {
    let unit = match dim {
        1 => 2.0,
        2 => std::f64::consts::PI,
        _ => 4.0 / 3.0 * std::f64::consts::PI,
    };
    unit * radius.powi(dim as i32)
}

pub fn default_margin(radius: f64, side: f64) -> f64 {
    (3.0 * radius * side.ln()).max(0.0)
}

pub fn default_candidate_intensity(dim: usize, radius: f64) -> f64 {
    5.0 / ball_volume(dim, radius)
}

fn check_radius(radius: f64) -> Result<()> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::param(format!("radius {radius} must be positive")));
    }
    Ok(())
}

/// Random parking (saturated random sequential adsorption) via the
/// graphical construction: candidates carry time marks in `[0, ∞)` and are
/// accepted greedily in time order when at distance `≥ 2·radius` from every
/// accepted center. The time axis is followed until no admissible site is
/// left in the simulated region.
pub fn sample_random_parking(params: &ParkingParams, bbox: BoxSpec, seed: u64, label: &str) -> Result<PointSample> {
    parking_like(params, true, bbox, seed, label, ProcessKind::RandomParking)
}

/// Hardcore Poisson process: the same thinning applied to a Poisson process
/// with time marks in `(0, 1)`.
pub fn sample_hardcore(
    intensity: f64,
    radius: f64,
    margin: Option<f64>,
    bbox: BoxSpec,
    seed: u64,
    label: &str,
) -> Result<PointSample> {
    if !intensity.is_finite() || intensity < 0.0 {
        return Err(Error::param(format!("hardcore intensity {intensity} must be finite and >= 0")));
    }
    let params = ParkingParams {
        radius,
        candidate_intensity: Some(intensity),
        margin,
    };
    parking_like(&params, false, bbox, seed, label, ProcessKind::Hardcore)
}

fn parking_like(
    params: &ParkingParams,
    saturate: bool,
    bbox: BoxSpec,
    seed: u64,
    label: &str,
    kind: ProcessKind,
) -> Result<PointSample> {
    bbox.validate()?;
    check_radius(params.radius)?;
    let intensity = params
        .candidate_intensity
        .unwrap_or_else(|| default_candidate_intensity(bbox.dim, params.radius));
    if !intensity.is_finite() || intensity < 0.0 {
        return Err(Error::param(format!("candidate intensity {intensity} invalid")));
    }
    let margin = params.margin.unwrap_or_else(|| default_margin(params.radius, bbox.side));
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(Error::param(format!("margin {margin} must be >= 0")));
    }
    let points = Thinning {
        dim: bbox.dim,
        side: bbox.side,
        radius: params.radius,
        intensity,
        margin,
        periodic: bbox.periodic,
        saturate,
        seed,
        label,
    }
    .run()?;
    Ok(PointSample {
        bbox,
        radii: vec![params.radius; points.len()],
        points,
        kind,
        master_seed: seed,
        stream_label: label.to_string(),
    })
}

/// Centers `offset + spacing·z` inside `Q_R`.
pub fn sample_lattice(spacing: f64, radius: f64, offset: f64, bbox: BoxSpec) -> Result<PointSample> {
    bbox.validate()?;
    check_radius(radius)?;
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::param(format!("lattice spacing {spacing} must be positive")));
    }
    let half = 0.5 * bbox.side;
    let lo = ((-half - offset) / spacing).floor() as i64 - 1;
    let hi = ((half - offset) / spacing).ceil() as i64 + 1;
    let span = (hi - lo + 1) as usize;
    let geom = Geometry::centered(bbox.dim, bbox.side, false);
    let mut points = Vec::new();
    for flat in 0..span.pow(bbox.dim as u32) {
        let mut p = [0.0; 3];
        let mut rem = flat;
        for x in p.iter_mut().take(bbox.dim) {
            *x = offset + (lo + (rem % span) as i64) as f64 * spacing;
            rem /= span;
        }
        if geom.contains(&p) {
            points.push(p);
        }
    }
    Ok(PointSample {
        bbox,
        radii: vec![radius; points.len()],
        points,
        kind: ProcessKind::DeterministicPeriodic,
        master_seed: 0,
        stream_label: String::new(),
    })
}

/// Admissible periodization in law of a sample on `Q_R`.
///
/// Poisson and lattice samples are tiled as they are. Random parking and
/// hardcore samples re-run the graphical construction on the torus
/// `R^d / R Z^d` with the candidate process of the original sample restricted
/// to `Q_R`.
pub fn periodize_in_law(process: &PointProcess, sample: &PointSample) -> Result<PeriodizedSample> {
    if process.kind() != sample.kind {
        return Err(Error::param(format!(
            "process kind {} does not match sample kind {}",
            process.kind().name(),
            sample.kind.name()
        )));
    }
    let torus = BoxSpec {
        periodic: true,
        ..sample.bbox
    };
    let base = match process {
        PointProcess::Poisson { .. } | PointProcess::Lattice { .. } => {
            let mut base = sample.clone();
            base.bbox = torus;
            base
        }
        PointProcess::RandomParking { .. } | PointProcess::Hardcore { .. } => {
            process.sample(torus, sample.master_seed, &sample.stream_label)?
        }
    };
    Ok(PeriodizedSample { base })
}

/// Same as [`periodize_in_law`] but checks the requested period against the sample box.
pub fn periodize_with_period(process: &PointProcess, sample: &PointSample, period: f64) -> Result<PeriodizedSample> {
    if (period - sample.bbox.side).abs() > 1e-12 * period.abs().max(1.0) {
        return Err(Error::param(format!(
            "period {period} does not match sample box side {}",
            sample.bbox.side
        )));
    }
    periodize_in_law(process, sample)
}

/// Anything that can answer "is `y` inside an inclusion?".
pub trait Medium: Sync {
    fn dim(&self) -> usize;
    fn in_inclusion(&self, y: &Point) -> bool;
}

fn indicator_scan(sample: &PointSample, y: &Point) -> bool {
    let g = sample.bbox.geometry();
    sample
        .points
        .iter()
        .zip(&sample.radii)
        .any(|(q, &r)| g.dist_sq(y, q) < r * r)
}

/// `1_E(y)` for the union of open balls (torus metric when the box is periodic).
pub fn inclusion_indicator(sample: &PointSample, y: &Point) -> bool {
    indicator_scan(sample, y)
}

impl Medium for PointSample {
    fn dim(&self) -> usize {
        self.bbox.dim
    }
    fn in_inclusion(&self, y: &Point) -> bool {
        indicator_scan(self, y)
    }
}

impl Medium for PeriodizedSample {
    fn dim(&self) -> usize {
        self.base.bbox.dim
    }
    fn in_inclusion(&self, y: &Point) -> bool {
        indicator_scan(&self.base, y)
    }
}

/// Cell-list accelerated inclusion queries over a fixed sample.
pub struct InclusionIndex<'a> {
    sample: &'a PointSample,
    cells: CellList,
    reach: f64,
}

impl<'a> InclusionIndex<'a> {
    pub fn new(sample: &'a PointSample) -> Self {
        let reach = sample.max_radius().max(1e-9);
        let mut cells = CellList::new(sample.bbox.geometry(), reach);
        for p in &sample.points {
            cells.insert(*p);
        }
        InclusionIndex { sample, cells, reach }
    }
}

impl Medium for InclusionIndex<'_> {
    fn dim(&self) -> usize {
        self.sample.bbox.dim
    }
    fn in_inclusion(&self, y: &Point) -> bool {
        let radii = &self.sample.radii;
        self.cells
            .any_within(y, self.reach, |id, d2| d2 < radii[id] * radii[id])
    }
}

/// Separation condition for well-separated stiff inclusions:
/// `inf_{m≠n} dist(B_m, B_n) / R_n ≥ 1/C` and `R_n ≤ C` for every `n`.
pub fn check_separation(sample: &PointSample, c: f64) -> Result<bool> {
    if !(c > 0.0) {
        return Err(Error::param(format!("separation constant {c} must be positive")));
    }
    let g = sample.bbox.geometry();
    for (n, (q, &rn)) in sample.points.iter().zip(&sample.radii).enumerate() {
        if rn > c {
            return Ok(false);
        }
        for (m, (p, &rm)) in sample.points.iter().zip(&sample.radii).enumerate() {
            if m == n {
                continue;
            }
            let gap = (g.dist(p, q) - rm - rn).max(0.0);
            if gap / rn < 1.0 / c {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
