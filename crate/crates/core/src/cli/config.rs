//! Line-oriented `section.key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::homogenize::{CellProblem, CorrectorBc, CorrectorConfig, Experiment, Formula, DEFAULT_T_SCHEDULE};
use crate::integrands::{IntegrandSpec, NonconvexKind, NonconvexSpec, PhaseFunction, QuadForm};
use crate::mat::Mat;
use crate::microstructure::{PointProcess, ProcessKind};
use crate::solver::{default_k_schedule, SolverOptions, SweepOptions};

/// Phase density as written in a config; sizes are resolved against `Λ`.
#[derive(Clone, Debug, PartialEq)]
pub enum PhaseExpr {
    Zero,
    Quadratic(f64),
    /// Full `n × n` coefficient matrix, row-major, `n = m·d`.
    QuadForm(Vec<f64>),
    Power { c: f64, p: f64 },
    IndicatorBall { r: f64, inner: Box<PhaseExpr> },
    Barrier { r: f64, c: f64, p: f64 },
}

impl PhaseExpr {
    pub fn parse(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(i) if s.ends_with(')') => (s[..i].trim(), &s[i + 1..s.len() - 1]),
            Some(_) => return Err(format!("unbalanced parentheses in `{s}`")),
            None => (s, ""),
        };
        let nums = |want: usize| -> std::result::Result<Vec<f64>, String> {
            let v = split_top(args, ',').iter().map(|a| parse_f64(a)).collect::<std::result::Result<Vec<_>, _>>()?;
            if v.len() != want {
                return Err(format!("`{name}` takes {want} numbers, got {}", v.len()));
            }
            Ok(v)
        };
        Ok(match name {
            "zero" if args.is_empty() => PhaseExpr::Zero,
            "quadratic" => PhaseExpr::Quadratic(nums(1)?[0]),
            "quadform" => PhaseExpr::QuadForm(
                args.split_whitespace().map(parse_f64).collect::<std::result::Result<Vec<_>, _>>()?,
            ),
            "power" => {
                let v = nums(2)?;
                PhaseExpr::Power { c: v[0], p: v[1] }
            }
            "barrier" => {
                let v = nums(3)?;
                PhaseExpr::Barrier { r: v[0], c: v[1], p: v[2] }
            }
            "indicator_ball" => {
                let parts = split_top(args, ',');
                if parts.len() != 2 {
                    return Err("`indicator_ball` takes a radius and an inner phase".into());
                }
                PhaseExpr::IndicatorBall {
                    r: parse_f64(parts[0])?,
                    inner: Box::new(PhaseExpr::parse(parts[1])?),
                }
            }
            _ => return Err(format!("unknown phase `{s}`")),
        })
    }

    pub fn to_phase(&self, n: usize) -> Result<PhaseFunction> {
        Ok(match self {
            PhaseExpr::Zero => PhaseFunction::Zero,
            PhaseExpr::Quadratic(a) => PhaseFunction::quadratic_isotropic(n, *a),
            PhaseExpr::QuadForm(a) => PhaseFunction::Quadratic(QuadForm::new(n, a.clone())?),
            PhaseExpr::Power { c, p } => PhaseFunction::PowerLaw { c: *c, p: *p },
            PhaseExpr::IndicatorBall { r, inner } => PhaseFunction::indicator_ball(*r, inner.to_phase(n)?),
            PhaseExpr::Barrier { r, c, p } => PhaseFunction::Barrier { r: *r, c: *c, p: *p },
        })
    }
}

impl std::fmt::Display for PhaseExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PhaseExpr::Zero => write!(f, "zero"),
            PhaseExpr::Quadratic(a) => write!(f, "quadratic({a:?})"),
            PhaseExpr::QuadForm(a) => {
                write!(f, "quadform(")?;
                for (i, x) in a.iter().enumerate() {
                    write!(f, "{}{x:?}", if i > 0 { " " } else { "" })?;
                }
                write!(f, ")")
            }
            PhaseExpr::Power { c, p } => write!(f, "power({c:?}, {p:?})"),
            PhaseExpr::IndicatorBall { r, inner } => write!(f, "indicator_ball({r:?}, {inner})"),
            PhaseExpr::Barrier { r, c, p } => write!(f, "barrier({r:?}, {c:?}, {p:?})"),
        }
    }
}

/// Splits on `sep` outside parentheses.
fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    let last = s[start..].trim();
    if !last.is_empty() || !out.is_empty() {
        out.push(last);
    }
    out
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    s.parse::<f64>().map_err(|_| format!("`{s}` is not a number"))
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    split_top(s, ',').into_iter().map(parse_f64).collect()
}

/// `a b; c d` → 2 × 2, rows separated by `;`.
fn parse_mat(s: &str) -> std::result::Result<Mat, String> {
    let rows: Vec<Vec<f64>> = s
        .split(';')
        .map(|r| r.split_whitespace().map(parse_f64).collect())
        .collect::<std::result::Result<_, _>>()?;
    let cols = rows.first().map_or(0, Vec::len);
    if cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(format!("`{s}` is not a rectangular matrix"));
    }
    if rows.len() > 3 || cols > 3 {
        return Err(format!("`{s}` exceeds 3 × 3"));
    }
    Ok(Mat::from_slice(rows.len(), cols, &rows.concat()))
}

fn fmt_mat(m: &Mat) -> String {
    (0..m.rows())
        .map(|i| {
            m.as_slice()[i * m.cols()..(i + 1) * m.cols()]
                .iter()
                .map(|x| format!("{x:?}"))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NonconvexChoice {
    None,
    Oscillatory,
    DetWell,
}

impl NonconvexChoice {
    fn name(self) -> &'static str {
        match self {
            NonconvexChoice::None => "none",
            NonconvexChoice::Oscillatory => "oscillatory",
            NonconvexChoice::DetWell => "det_well",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MicrostructureConfig {
    pub kind: ProcessKind,
    pub intensity: f64,
    pub radius: f64,
    pub candidate_intensity: Option<f64>,
    pub margin: Option<f64>,
    /// Lattice only.
    pub spacing: f64,
    pub offset: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegrandConfig {
    pub matrix_phase: PhaseExpr,
    pub inclusion_phase: PhaseExpr,
    pub p: f64,
    pub growth_c: f64,
    pub gamma: f64,
    pub cap: f64,
    pub nonconvex_kind: NonconvexChoice,
    /// Oscillation direction; all ones when omitted.
    pub xi: Option<Mat>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridConfig {
    pub cells_per_unit: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub tol_e: f64,
    pub tol_g: f64,
    pub max_iter: usize,
    pub memory: usize,
    pub restarts: usize,
    pub k_schedule: Vec<f64>,
    pub t_schedule: Vec<f64>,
    pub stab_tol: f64,
    pub warm_start: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub formula: Vec<Formula>,
    pub lambdas: Vec<Mat>,
    pub r_list: Vec<f64>,
    pub realizations: usize,
    pub theta: f64,
    pub t: f64,
    pub master_seed: u64,
    pub out_path: String,
    pub corrector_bc: CorrectorBc,
    pub r_outer: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub microstructure: MicrostructureConfig,
    pub integrand: IntegrandConfig,
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub run: RunConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let s = SolverOptions::default();
        ExperimentConfig {
            microstructure: MicrostructureConfig {
                kind: ProcessKind::Poisson,
                intensity: 0.3,
                radius: 0.5,
                candidate_intensity: None,
                margin: None,
                spacing: 1.0,
                offset: 0.0,
            },
            integrand: IntegrandConfig {
                matrix_phase: PhaseExpr::Quadratic(1.0),
                inclusion_phase: PhaseExpr::Quadratic(4.0),
                p: 2.0,
                growth_c: 1.0,
                gamma: 0.0,
                cap: 1.0,
                nonconvex_kind: NonconvexChoice::None,
                xi: None,
            },
            grid: GridConfig {
                cells_per_unit: 4.0,
            },
            solver: SolverConfig {
                tol_e: s.tol_e,
                tol_g: s.tol_g,
                max_iter: s.max_iter,
                memory: s.memory,
                restarts: 8,
                k_schedule: default_k_schedule(),
                t_schedule: DEFAULT_T_SCHEDULE.to_vec(),
                stab_tol: SweepOptions::default().stab_tol,
                warm_start: true,
            },
            run: RunConfig {
                formula: vec![Formula::DirichletTrunc],
                lambdas: Vec::new(),
                r_list: vec![8.0],
                realizations: 8,
                theta: 1.0,
                t: 1.0,
                master_seed: 0,
                out_path: "out".into(),
                corrector_bc: CorrectorBc::Periodic,
                r_outer: None,
            },
        }
    }
}

type Setter = fn(&mut ExperimentConfig, &str) -> std::result::Result<(), String>;

fn positive(x: f64) -> std::result::Result<f64, String> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{x} must be positive"))
    }
}

fn parse_usize(s: &str) -> std::result::Result<usize, String> {
    s.trim().parse().map_err(|_| format!("`{}` is not a non-negative integer", s.trim()))
}

fn increasing(v: Vec<f64>) -> std::result::Result<Vec<f64>, String> {
    if v.is_empty() || v.windows(2).any(|w| !(w[1] > w[0])) {
        return Err("list must be non-empty and strictly increasing".into());
    }
    Ok(v)
}

const KEYS: &[(&str, Setter)] = &[
    ("microstructure.kind", |c, v| {
        c.microstructure.kind = ProcessKind::from_name(v).ok_or(format!("unknown process `{v}`"))?;
        Ok(())
    }),
    ("microstructure.intensity", |c, v| {
        let x = parse_f64(v)?;
        if !(x >= 0.0 && x.is_finite()) {
            return Err(format!("intensity {x} must be >= 0"));
        }
        c.microstructure.intensity = x;
        Ok(())
    }),
    ("microstructure.radius", |c, v| {
        c.microstructure.radius = positive(parse_f64(v)?)?;
        Ok(())
    }),
    ("microstructure.candidate_intensity", |c, v| {
        c.microstructure.candidate_intensity = Some(positive(parse_f64(v)?)?);
        Ok(())
    }),
    ("microstructure.margin", |c, v| {
        let x = parse_f64(v)?;
        if !(x >= 0.0 && x.is_finite()) {
            return Err(format!("margin {x} must be >= 0"));
        }
        c.microstructure.margin = Some(x);
        Ok(())
    }),
    ("microstructure.spacing", |c, v| {
        c.microstructure.spacing = positive(parse_f64(v)?)?;
        Ok(())
    }),
    ("microstructure.offset", |c, v| {
        c.microstructure.offset = parse_f64(v)?;
        Ok(())
    }),
    ("integrand.matrix_phase", |c, v| {
        c.integrand.matrix_phase = PhaseExpr::parse(v)?;
        Ok(())
    }),
    ("integrand.inclusion_phase", |c, v| {
        c.integrand.inclusion_phase = PhaseExpr::parse(v)?;
        Ok(())
    }),
    ("integrand.p", |c, v| {
        let p = parse_f64(v)?;
        if !(p > 1.0 && p.is_finite()) {
            return Err(format!("p = {p} must be > 1"));
        }
        c.integrand.p = p;
        Ok(())
    }),
    ("integrand.growth_c", |c, v| {
        c.integrand.growth_c = positive(parse_f64(v)?)?;
        Ok(())
    }),
    ("integrand.gamma", |c, v| {
        let g = parse_f64(v)?;
        if !(g >= 0.0 && g.is_finite()) {
            return Err(format!("gamma {g} must be >= 0"));
        }
        c.integrand.gamma = g;
        Ok(())
    }),
    ("integrand.cap", |c, v| {
        c.integrand.cap = positive(parse_f64(v)?)?;
        Ok(())
    }),
    ("integrand.nonconvex_kind", |c, v| {
        c.integrand.nonconvex_kind = match v {
            "none" => NonconvexChoice::None,
            "oscillatory" => NonconvexChoice::Oscillatory,
            "det_well" => NonconvexChoice::DetWell,
            _ => return Err(format!("unknown nonconvex kind `{v}`")),
        };
        Ok(())
    }),
    ("integrand.xi", |c, v| {
        c.integrand.xi = Some(parse_mat(v)?);
        Ok(())
    }),
    ("grid.cells_per_unit", |c, v| {
        c.grid.cells_per_unit = positive(parse_f64(v)?)?;
        Ok(())
    }),
    ("solver.tol_e", |c, v| {
        c.solver.tol_e = positive(parse_f64(v)?)?;
        Ok(())
    }),
    ("solver.tol_g", |c, v| {
        c.solver.tol_g = positive(parse_f64(v)?)?;
        Ok(())
    }),
    ("solver.max_iter", |c, v| {
        c.solver.max_iter = parse_usize(v)?;
        Ok(())
    }),
    ("solver.memory", |c, v| {
        let m = parse_usize(v)?;
        if m == 0 {
            return Err("memory must be >= 1".into());
        }
        c.solver.memory = m;
        Ok(())
    }),
    ("solver.restarts", |c, v| {
        c.solver.restarts = parse_usize(v)?;
        Ok(())
    }),
    ("solver.k_schedule", |c, v| {
        let k = increasing(parse_list(v)?)?;
        positive(k[0])?;
        c.solver.k_schedule = k;
        Ok(())
    }),
    ("solver.t_schedule", |c, v| {
        let t = increasing(parse_list(v)?)?;
        if t[0] <= 0.0 || *t.last().unwrap() > 1.0 {
            return Err("dilations must lie in (0, 1]".into());
        }
        c.solver.t_schedule = t;
        Ok(())
    }),
    ("solver.stab_tol", |c, v| {
        c.solver.stab_tol = positive(parse_f64(v)?)?;
        Ok(())
    }),
    ("solver.warm_start", |c, v| {
        c.solver.warm_start = v.parse().map_err(|_| format!("`{v}` is not true/false"))?;
        Ok(())
    }),
    ("run.formula", |c, v| {
        let f = split_top(v, ',')
            .into_iter()
            .map(|s| Formula::from_name(s).ok_or(format!("unknown formula `{s}`")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if f.is_empty() {
            return Err("at least one formula required".into());
        }
        c.run.formula = f;
        Ok(())
    }),
    ("run.lambdas", |c, v| {
        c.run.lambdas = split_top(v, ',').into_iter().map(parse_mat).collect::<std::result::Result<_, _>>()?;
        Ok(())
    }),
    ("run.R_list", |c, v| {
        let r = increasing(parse_list(v)?)?;
        positive(r[0])?;
        c.run.r_list = r;
        Ok(())
    }),
    ("run.realizations", |c, v| {
        let n = parse_usize(v)?;
        if n == 0 {
            return Err("at least one realization required".into());
        }
        c.run.realizations = n;
        Ok(())
    }),
    ("run.theta", |c, v| {
        c.run.theta = positive(parse_f64(v)?)?;
        Ok(())
    }),
    ("run.t", |c, v| {
        let t = parse_f64(v)?;
        if !(t > 0.0 && t <= 1.0) {
            return Err(format!("t = {t} not in (0, 1]"));
        }
        c.run.t = t;
        Ok(())
    }),
    ("run.master_seed", |c, v| {
        c.run.master_seed = v.parse().map_err(|_| format!("`{v}` is not a u64"))?;
        Ok(())
    }),
    ("run.out_path", |c, v| {
        if v.is_empty() {
            return Err("empty path".into());
        }
        c.run.out_path = v.to_string();
        Ok(())
    }),
    ("run.corrector_bc", |c, v| {
        c.run.corrector_bc = CorrectorBc::from_name(v).ok_or(format!("unknown corrector bc `{v}`"))?;
        Ok(())
    }),
    ("run.r_outer", |c, v| {
        c.run.r_outer = Some(positive(parse_f64(v)?)?);
        Ok(())
    }),
];

/// Parses a config; omitted keys keep their defaults. The result is not yet
/// validated as a whole, see [`ExperimentConfig::validate`].
pub fn parse_config_text(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| Error::Config {
            line,
            key: body.to_string(),
            message: "expected `section.key = value`".into(),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if let Some(first) = seen.insert(key.to_string(), line) {
            return Err(Error::Config {
                line,
                key: key.to_string(),
                message: format!("duplicate key, first set on line {first}"),
            });
        }
        let setter = KEYS.iter().find(|(k, _)| *k == key).ok_or_else(|| Error::Config {
            line,
            key: key.to_string(),
            message: "unknown key".into(),
        })?;
        (setter.1)(&mut cfg, value).map_err(|message| Error::Config {
            line,
            key: key.to_string(),
            message,
        })?;
    }
    Ok(cfg)
}

/// Parses and validates.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg = parse_config_text(text)?;
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    /// Gradient shape `(m, d)` shared by all `Λ`.
    pub fn shape(&self) -> Result<(usize, usize)> {
        let first = self.run.lambdas.first().ok_or_else(|| Error::Validation("run.lambdas missing".into()))?;
        Ok((first.rows(), first.cols()))
    }

    pub fn validate(&self) -> Result<()> {
        let (m, d) = self.shape()?;
        if self.run.lambdas.iter().any(|l| l.rows() != m || l.cols() != d) {
            return Err(Error::Validation("run.lambdas must share one shape".into()));
        }
        let spec = self.integrand_spec()?;
        if self.run.formula.contains(&Formula::Nonconvex) && spec.nonconvex.is_none() {
            return Err(Error::Validation(
                "formula nonconvex needs integrand.nonconvex_kind other than none".into(),
            ));
        }
        self.process()?;
        for p in self.problems()? {
            p.validate(&spec)?;
        }
        Ok(())
    }

    pub fn integrand_spec(&self) -> Result<IntegrandSpec> {
        let (m, d) = self.shape()?;
        let i = &self.integrand;
        let spec = IntegrandSpec::new(
            i.matrix_phase.to_phase(m * d)?,
            i.inclusion_phase.to_phase(m * d)?,
            i.p,
            m,
            d,
            i.growth_c,
        )
        .map_err(|e| Error::Validation(format!("integrand: {e}")))?;
        let kind = match i.nonconvex_kind {
            NonconvexChoice::None => return Ok(spec),
            NonconvexChoice::DetWell => NonconvexKind::DetWell,
            NonconvexChoice::Oscillatory => NonconvexKind::Oscillatory {
                xi: i.xi.unwrap_or_else(|| Mat::from_slice(m, d, &vec![1.0; m * d])),
            },
        };
        spec.with_nonconvex(NonconvexSpec {
            gamma: i.gamma,
            cap: i.cap,
            kind,
        })
        .map_err(|e| Error::Validation(format!("integrand: {e}")))
    }

    pub fn process(&self) -> Result<PointProcess> {
        let s = &self.microstructure;
        Ok(match s.kind {
            ProcessKind::Poisson => PointProcess::Poisson {
                intensity: s.intensity,
                radius: s.radius,
            },
            ProcessKind::RandomParking => PointProcess::RandomParking {
                radius: s.radius,
                candidate_intensity: s.candidate_intensity,
                margin: s.margin,
            },
            ProcessKind::Hardcore => PointProcess::Hardcore {
                intensity: s.intensity,
                radius: s.radius,
                margin: s.margin,
            },
            ProcessKind::DeterministicPeriodic => PointProcess::Lattice {
                spacing: s.spacing,
                radius: s.radius,
                offset: s.offset,
            },
        })
    }

    pub fn experiment(&self) -> Result<Experiment> {
        let s = &self.solver;
        Ok(Experiment {
            spec: self.integrand_spec()?,
            process: self.process()?,
            solver: SolverOptions {
                tol_e: s.tol_e,
                tol_g: s.tol_g,
                max_iter: s.max_iter,
                memory: s.memory,
            },
            sweep: SweepOptions {
                stab_tol: s.stab_tol,
                warm_start: s.warm_start,
            },
            master_seed: self.run.master_seed,
            restarts: s.restarts,
            corrector: CorrectorConfig {
                r_outer: self.run.r_outer,
                bc: self.run.corrector_bc,
            },
        })
    }

    /// Cell problems in output order: formula, then `Λ`, then `R`.
    pub fn problems(&self) -> Result<Vec<CellProblem>> {
        self.shape()?;
        let mut out = Vec::new();
        for &formula in &self.run.formula {
            for lambda in &self.run.lambdas {
                for &side in &self.run.r_list {
                    out.push(CellProblem {
                        lambda: *lambda,
                        formula,
                        side,
                        cells_per_unit: self.grid.cells_per_unit,
                        k_schedule: self.solver.k_schedule.clone(),
                        t: self.run.t,
                        theta: self.run.theta,
                    });
                }
            }
        }
        Ok(out)
    }

    /// Every key with its resolved value; re-parses to an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let ms = &self.microstructure;
        let _ = writeln!(s, "microstructure.kind = {}", ms.kind.name());
        let _ = writeln!(s, "microstructure.intensity = {:?}", ms.intensity);
        let _ = writeln!(s, "microstructure.radius = {:?}", ms.radius);
        if let Some(c) = ms.candidate_intensity {
            let _ = writeln!(s, "microstructure.candidate_intensity = {c:?}");
        }
        if let Some(m) = ms.margin {
            let _ = writeln!(s, "microstructure.margin = {m:?}");
        }
        let _ = writeln!(s, "microstructure.spacing = {:?}", ms.spacing);
        let _ = writeln!(s, "microstructure.offset = {:?}", ms.offset);
        let i = &self.integrand;
        let _ = writeln!(s, "integrand.matrix_phase = {}", i.matrix_phase);
        let _ = writeln!(s, "integrand.inclusion_phase = {}", i.inclusion_phase);
        let _ = writeln!(s, "integrand.p = {:?}", i.p);
        let _ = writeln!(s, "integrand.growth_c = {:?}", i.growth_c);
        let _ = writeln!(s, "integrand.gamma = {:?}", i.gamma);
        let _ = writeln!(s, "integrand.cap = {:?}", i.cap);
        let _ = writeln!(s, "integrand.nonconvex_kind = {}", i.nonconvex_kind.name());
        if let Some(xi) = &i.xi {
            let _ = writeln!(s, "integrand.xi = {}", fmt_mat(xi));
        }
        let _ = writeln!(s, "grid.cells_per_unit = {:?}", self.grid.cells_per_unit);
        let sv = &self.solver;
        let _ = writeln!(s, "solver.tol_e = {:?}", sv.tol_e);
        let _ = writeln!(s, "solver.tol_g = {:?}", sv.tol_g);
        let _ = writeln!(s, "solver.max_iter = {}", sv.max_iter);
        let _ = writeln!(s, "solver.memory = {}", sv.memory);
        let _ = writeln!(s, "solver.restarts = {}", sv.restarts);
        let _ = writeln!(s, "solver.k_schedule = {}", fmt_list(&sv.k_schedule));
        let _ = writeln!(s, "solver.t_schedule = {}", fmt_list(&sv.t_schedule));
        let _ = writeln!(s, "solver.stab_tol = {:?}", sv.stab_tol);
        let _ = writeln!(s, "solver.warm_start = {}", sv.warm_start);
        let r = &self.run;
        let names: Vec<&str> = r.formula.iter().map(|f| f.name()).collect();
        let _ = writeln!(s, "run.formula = {}", names.join(", "));
        if !r.lambdas.is_empty() {
            let l: Vec<String> = r.lambdas.iter().map(fmt_mat).collect();
            let _ = writeln!(s, "run.lambdas = {}", l.join(", "));
        }
        let _ = writeln!(s, "run.R_list = {}", fmt_list(&r.r_list));
        let _ = writeln!(s, "run.realizations = {}", r.realizations);
        let _ = writeln!(s, "run.theta = {:?}", r.theta);
        let _ = writeln!(s, "run.t = {:?}", r.t);
        let _ = writeln!(s, "run.master_seed = {}", r.master_seed);
        let _ = writeln!(s, "run.out_path = {}", r.out_path);
        let _ = writeln!(s, "run.corrector_bc = {}", r.corrector_bc.name());
        if let Some(ro) = r.r_outer {
            let _ = writeln!(s, "run.r_outer = {ro:?}");
        }
        s
    }
}
