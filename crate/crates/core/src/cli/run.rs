//! Experiment execution and CSV / report emission.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::homogenize::{estimate, r_sweep, t_sweep, CellProblem, Formula, HomogEstimate};
use crate::mat::Mat;
use crate::microstructure::ProcessKind;
use crate::oracle::{constant_vbar, laminate_1d_vbar, LaminateSpec};

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Fill the `seconds` column; off by default so outputs stay byte-identical.
    pub timings: bool,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub estimates: Vec<HomogEstimate>,
    pub infeasible: usize,
    pub seconds: f64,
}

/// 17 significant digits; infinities as `inf`.
pub fn fmt_value(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn lambda_header(m: usize, d: usize) -> String {
    let mut cols = Vec::with_capacity(m * d);
    for i in 1..=m {
        for j in 1..=d {
            cols.push(format!("lambda_{i}_{j}"));
        }
    }
    cols.join(",")
}

fn lambda_cells(l: &Mat) -> String {
    l.as_slice().iter().map(|&x| fmt_value(x)).collect::<Vec<_>>().join(",")
}

pub fn solves_header(m: usize, d: usize) -> String {
    format!(
        "formula,{},R,n,k,t,eta,seed_index,value,converged,iterations,seconds\n",
        lambda_header(m, d)
    )
}

pub fn summary_header(m: usize, d: usize) -> String {
    format!("formula,{},R,mean,stderr,N,diverged\n", lambda_header(m, d))
}

/// Per-solve rows of one estimate.
pub fn solve_rows(e: &HomogEstimate, timings: bool) -> String {
    let p = &e.problem;
    let eta = if p.formula == Formula::Buffer { p.theta } else { 0.0 };
    let mut s = String::new();
    for r in &e.realizations {
        for rec in &r.solves {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                p.formula.name(),
                lambda_cells(&p.lambda),
                fmt_value(p.side),
                p.n(),
                rec.k.map_or_else(|| "NA".to_string(), fmt_value),
                fmt_value(p.t),
                fmt_value(eta),
                r.seed_index,
                fmt_value(rec.value),
                rec.converged,
                rec.iterations,
                if timings { format!("{:.6}", rec.seconds) } else { "NA".into() }
            );
        }
    }
    s
}

/// Summary row; an infeasible estimate is written with `mean = inf`.
pub fn summary_row(name: &str, lambda: &Mat, side: f64, mean: ExtReal, stderr: f64, n: usize, diverged: usize) -> String {
    format!(
        "{name},{},{},{},{},{n},{diverged}\n",
        lambda_cells(lambda),
        fmt_value(side),
        fmt_value(mean.to_f64()),
        fmt_value(stderr)
    )
}

fn estimate_row(e: &HomogEstimate) -> String {
    let mean = if e.infeasible { ExtReal::Infinite } else { e.mean };
    summary_row(e.problem.formula.name(), &e.problem.lambda, e.problem.side, mean, e.stderr, e.n, e.diverged_count)
}

/// Git-style blob hash (`blob <len>\0<content>`) with SHA-256.
pub fn content_hash(text: &str) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", text.len()).as_bytes());
    h.update(text.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, text)?;
    Ok(path)
}

fn write_report(dir: &Path, cfg: &ExperimentConfig, command: &str, extra: &str) -> Result<PathBuf> {
    let resolved = cfg.to_text();
    let mut s = String::new();
    let _ = writeln!(s, "command: {command}");
    let _ = writeln!(s, "input hash: sha256:{}", content_hash(&resolved));
    let _ = writeln!(s, "\n[resolved config]");
    s.push_str(&resolved);
    let _ = writeln!(s, "\n[results]");
    s.push_str(extra);
    write(dir, "report.txt", &s)
}

/// Runs every (formula, `Λ`, `R`) estimate and writes `solves.csv`,
/// `summary.csv` and `report.txt`.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let (m, d) = cfg.shape()?;
    let exp = cfg.experiment()?;
    let mut solves = solves_header(m, d);
    let mut summary = summary_header(m, d);
    let mut estimates = Vec::new();
    let mut extra = String::new();
    for p in cfg.problems()? {
        let t0 = Instant::now();
        let e = estimate(&exp, &p, cfg.run.realizations)?;
        let _ = writeln!(
            extra,
            "{} Λ = {:?} R = {}: mean {} ± {} (N = {}, diverged {}{}) in {:.3} s",
            p.formula.name(),
            p.lambda,
            p.side,
            fmt_value(e.mean.to_f64()),
            fmt_value(e.stderr),
            e.n,
            e.diverged_count,
            if e.infeasible { ", infeasible" } else { "" },
            t0.elapsed().as_secs_f64()
        );
        solves.push_str(&solve_rows(&e, opts.timings));
        summary.push_str(&estimate_row(&e));
        estimates.push(e);
    }
    let seconds = start.elapsed().as_secs_f64();
    let infeasible = estimates.iter().filter(|e| e.infeasible).count();
    let _ = writeln!(extra, "estimates: {}, infeasible: {infeasible}", estimates.len());
    let _ = writeln!(extra, "wall clock total: {seconds:.3} s");
    write(&opts.out_dir, "solves.csv", &solves)?;
    write(&opts.out_dir, "summary.csv", &summary)?;
    write_report(&opts.out_dir, cfg, "homogenize", &extra)?;
    Ok(RunOutcome {
        estimates,
        infeasible,
        seconds,
    })
}

/// R- and t-sweeps per formula and `Λ`; writes `sweep.csv` and `report.txt`.
pub fn run_sweep(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<String> {
    cfg.validate()?;
    let start = Instant::now();
    let (m, d) = cfg.shape()?;
    let exp = cfg.experiment()?;
    let mut csv = format!("sweep,formula,{},R,t,mean,stderr,N,diverged\n", lambda_header(m, d));
    let mut extra = String::new();
    let n = cfg.run.realizations;
    let row = |kind: &str, e: &HomogEstimate| {
        let mean = if e.infeasible { ExtReal::Infinite } else { e.mean };
        format!(
            "{kind},{},{},{},{},{},{},{},{}\n",
            e.problem.formula.name(),
            lambda_cells(&e.problem.lambda),
            fmt_value(e.problem.side),
            fmt_value(e.problem.t),
            fmt_value(mean.to_f64()),
            fmt_value(e.stderr),
            e.n,
            e.diverged_count
        )
    };
    let problems = cfg.problems()?;
    let mut templates: Vec<&CellProblem> = Vec::new();
    for p in &problems {
        if !templates.iter().any(|q| q.formula == p.formula && q.lambda == p.lambda) {
            templates.push(p);
        }
    }
    let r_max = *cfg.run.r_list.last().expect("validated");
    for p in templates {
        let rs = r_sweep(&exp, p, &cfg.run.r_list, n)?;
        for e in &rs.estimates {
            csv.push_str(&row("R", e));
        }
        let mut at_max = p.clone();
        at_max.side = r_max;
        let ts = t_sweep(&exp, &at_max, &cfg.solver.t_schedule, n)?;
        for e in &ts.estimates {
            csv.push_str(&row("t", e));
        }
        let _ = writeln!(
            extra,
            "{} Λ = {:?}: R-rate {}, value at largest feasible t {}",
            p.formula.name(),
            p.lambda,
            rs.rate.map_or_else(|| "NA".into(), |r| format!("{r:.3}")),
            ts.value.map_or_else(|| "NA".into(), fmt_value)
        );
    }
    let _ = writeln!(extra, "wall clock total: {:.3} s", start.elapsed().as_secs_f64());
    write(&opts.out_dir, "sweep.csv", &csv)?;
    write_report(&opts.out_dir, cfg, "sweep", &extra)?;
    Ok(csv)
}

/// Reference value for one `Λ`, when an oracle applies to the configured medium.
pub fn oracle_value(cfg: &ExperimentConfig, lambda: &Mat) -> Result<ExtReal> {
    let spec = cfg.integrand_spec()?;
    let ms = &cfg.microstructure;
    let no_inclusions = ms.kind == ProcessKind::Poisson && ms.intensity == 0.0;
    if spec.matrix_phase == spec.inclusion_phase || no_inclusions {
        return Ok(constant_vbar(&spec.matrix_phase, lambda));
    }
    if spec.d == 1 && ms.kind == ProcessKind::DeterministicPeriodic {
        let f = 2.0 * ms.radius / ms.spacing;
        if f >= 1.0 {
            return Ok(constant_vbar(&spec.inclusion_phase, lambda));
        }
        let lam = LaminateSpec::new(
            vec![spec.matrix_phase.clone(), spec.inclusion_phase.clone()],
            vec![1.0 - f, f],
            spec.p,
        )?;
        return laminate_1d_vbar(&lam, lambda.as_slice()[0]).map(ExtReal::Finite);
    }
    Err(Error::Unsupported(
        "no oracle for this medium (needs a constant density or a 1D lattice laminate)".into(),
    ))
}

/// Oracle rows in the summary schema (`formula = oracle`), one per `Λ` and `R`.
pub fn run_oracle(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<String> {
    cfg.validate()?;
    let (m, d) = cfg.shape()?;
    let mut csv = summary_header(m, d);
    for lambda in &cfg.run.lambdas {
        let v = oracle_value(cfg, lambda)?;
        for &side in &cfg.run.r_list {
            csv.push_str(&summary_row("oracle", lambda, side, v, 0.0, 0, 0));
        }
    }
    write(&opts.out_dir, "oracle.csv", &csv)?;
    Ok(csv)
}
