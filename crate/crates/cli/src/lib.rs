//! Subcommands of the `rosl` binary.
//!
//! Each `cmd_*` function returns the process exit code and writes its report
//! to the supplied writer. Errors in the problem file or arguments are
//! reported on the error writer with exit code [`EXIT_SPEC_ERROR`].

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};

use rosl_core::formats::{fmt_f64, read_trace_csv, write_scan_csv, write_trace_csv};
use rosl_core::{
    estimate_lipschitz, estimate_rosl, scan_solution_set, solve, verify_trace_bounds, AxisBox,
    BuiltinMap, Error, Multimap, SolveConfig, Status, Vector,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SPEC_ERROR: i32 = 1;
pub const EXIT_MAX_ITER: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;
/// `audit` found at least one bound violation.
pub const EXIT_VIOLATIONS: i32 = 4;

/// Environment variable capping the number of scan worker threads.
pub const THREADS_ENV: &str = "ROSL_THREADS";

/// Contents of a problem file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub map: BuiltinMap,
    pub y_bar: Vector,
    pub config: SolveConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vector>,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<AxisBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_counts: Option<Vec<usize>>,
}

impl ProblemSpec {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let spec: ProblemSpec =
            serde_json::from_str(text).map_err(|e| anyhow!("malformed problem file: {e}"))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read problem file {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn dim(&self) -> usize {
        self.map.dim()
    }

    /// Checks that every dimensioned field agrees with the map.
    pub fn validate(&self) -> anyhow::Result<()> {
        let dim = self.dim();
        check_dim("y_bar", self.y_bar.dim(), dim)?;
        if let Some(x0) = &self.x0 {
            check_dim("x0", x0.dim(), dim)?;
        }
        if let Some(bounds) = &self.bounds {
            bounds.validate()?;
            check_dim("box", bounds.dim(), dim)?;
        }
        if let Some(counts) = &self.grid_counts {
            check_dim("grid_counts", counts.len(), dim)?;
        }
        self.config.validate(dim)?;
        Ok(())
    }

    fn bounds(&self) -> anyhow::Result<&AxisBox> {
        self.bounds
            .as_ref()
            .ok_or_else(|| anyhow!("problem file has no \"box\""))
    }
}

fn check_dim(field: &str, found: usize, expected: usize) -> anyhow::Result<()> {
    if found != expected {
        return Err(
            anyhow::Error::new(Error::DimensionMismatch { expected, found })
                .context(format!("field {field}")),
        );
    }
    Ok(())
}

/// Parses a comma-separated point such as `"1.5,-2"`.
pub fn parse_point(text: &str) -> anyhow::Result<Vector> {
    let coords = text
        .split(',')
        .map(|c| {
            c.trim()
                .parse::<f64>()
                .with_context(|| format!("bad coordinate {c:?} in {text:?}"))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(Vector::new(coords)?)
}

fn report(result: anyhow::Result<i32>, err: &mut dyn Write) -> i32 {
    result.unwrap_or_else(|e| {
        let _ = writeln!(err, "error: {e:#}");
        EXIT_SPEC_ERROR
    })
}

fn status_code(status: Status) -> i32 {
    match status {
        Status::Converged => EXIT_OK,
        Status::MaxIter => EXIT_MAX_ITER,
        Status::Diverged => EXIT_DIVERGED,
    }
}

fn fmt_point(v: &Vector) -> String {
    let parts: Vec<String> = v.coords().iter().map(|&c| fmt_f64(c)).collect();
    format!("[{}]", parts.join(", "))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

/// `solve`: iterates from `x0` (flag, else the problem file) and writes the
/// trace CSV. Exit 0 converged, 2 max_iter, 3 diverged.
pub fn cmd_solve(
    problem: &Path,
    x0: Option<&str>,
    out_trace: &Path,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    report(run_solve(problem, x0, out_trace, out), err)
}

fn run_solve(
    problem: &Path,
    x0: Option<&str>,
    out_trace: &Path,
    out: &mut dyn Write,
) -> anyhow::Result<i32> {
    let spec = ProblemSpec::load(problem)?;
    let x0 = match x0 {
        Some(text) => parse_point(text)?,
        None => spec
            .x0
            .clone()
            .ok_or_else(|| anyhow!("no starting point: pass --x0 or set \"x0\""))?,
    };
    check_dim("x0", x0.dim(), spec.dim())?;

    let trace = solve(&spec.map, &spec.y_bar, &x0, &spec.config)?;
    let mut file = create(out_trace)?;
    write_trace_csv(&trace, &mut file)?;
    file.flush()?;

    writeln!(out, "status: {}", trace.status.as_str())?;
    writeln!(out, "iterations: {}", trace.len() - 1)?;
    if let Some(defect) = trace.final_defect() {
        writeln!(out, "final_defect: {}", fmt_f64(defect))?;
    }
    if let Some(cert) = trace.certificates.last() {
        writeln!(
            out,
            "certificate_center: {}",
            fmt_point(&cert.inclusion_center)
        )?;
        writeln!(
            out,
            "certificate_radius: {}",
            fmt_f64(cert.inclusion_radius)
        )?;
        match cert.exclusion_radius {
            Some(r) => writeln!(out, "exclusion_radius: {}", fmt_f64(r))?,
            None => writeln!(out, "exclusion_radius: none")?,
        }
    }
    if let Some(limit) = &trace.limit {
        writeln!(out, "limit: {}", fmt_point(limit))?;
    }
    if let Some(diag) = &trace.diagnostic {
        writeln!(out, "diagnostic: {diag}")?;
    }
    Ok(status_code(trace.status))
}

/// Reads the thread cap from [`THREADS_ENV`]; `None` means machine default.
pub fn thread_cap() -> anyhow::Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(text) => match text.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => bail!("{THREADS_ENV} must be a positive integer, got {text:?}"),
        },
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => bail!("{THREADS_ENV}: {e}"),
    }
}

/// `scan`: solves from every node of the problem's grid and writes the scan
/// CSV. Exit 0 iff every node converged, else 3 if any diverged, else 2.
pub fn cmd_scan(problem: &Path, out_csv: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    report(run_scan(problem, out_csv, out), err)
}

fn run_scan(problem: &Path, out_csv: &Path, out: &mut dyn Write) -> anyhow::Result<i32> {
    let spec = ProblemSpec::load(problem)?;
    let bounds = spec.bounds()?;
    let counts = spec
        .grid_counts
        .as_ref()
        .ok_or_else(|| anyhow!("problem file has no \"grid_counts\""))?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;
    let scan =
        pool.install(|| scan_solution_set(&spec.map, &spec.y_bar, bounds, counts, &spec.config))?;

    let mut file = create(out_csv)?;
    write_scan_csv(&scan, &mut file)?;
    file.flush()?;

    let count = |s: Status| scan.statuses.iter().filter(|&&t| t == s).count();
    let max_residual = scan
        .membership_residuals
        .iter()
        .flatten()
        .fold(0.0f64, |a, &b| a.max(b));
    writeln!(out, "nodes: {}", scan.len())?;
    writeln!(out, "converged: {}", count(Status::Converged))?;
    writeln!(out, "max_iter: {}", count(Status::MaxIter))?;
    writeln!(out, "diverged: {}", count(Status::Diverged))?;
    writeln!(out, "max_residual: {}", fmt_f64(max_residual))?;

    Ok(if scan.all_converged() {
        EXIT_OK
    } else if count(Status::Diverged) > 0 {
        EXIT_DIVERGED
    } else {
        EXIT_MAX_ITER
    })
}

#[derive(Debug, Serialize)]
struct EstimateReport {
    l_estimate: f64,
    #[serde(rename = "L_estimate")]
    lipschitz_estimate: f64,
    samples: usize,
    seed: u64,
}

/// `estimate`: sampled ROSL and Lipschitz constants over the problem's box.
pub fn cmd_estimate(
    problem: &Path,
    samples: usize,
    seed: u64,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    report(run_estimate(problem, samples, seed, out), err)
}

fn run_estimate(
    problem: &Path,
    samples: usize,
    seed: u64,
    out: &mut dyn Write,
) -> anyhow::Result<i32> {
    let spec = ProblemSpec::load(problem)?;
    let bounds = spec.bounds()?;
    let report = EstimateReport {
        l_estimate: estimate_rosl(&spec.map, bounds, samples, seed)?,
        lipschitz_estimate: estimate_lipschitz(&spec.map, bounds, samples, seed)?,
        samples,
        seed,
    };
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    Ok(EXIT_OK)
}

/// `audit`: checks a trace CSV against the bounds implied by the problem's
/// configuration. Exit 0 clean, 2 if the trace did not converge, 4 on
/// violations.
pub fn cmd_audit(
    trace_csv: &Path,
    problem: &Path,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    report(run_audit(trace_csv, problem, out), err)
}

fn run_audit(trace_csv: &Path, problem: &Path, out: &mut dyn Write) -> anyhow::Result<i32> {
    let spec = ProblemSpec::load(problem)?;
    let file =
        File::open(trace_csv).with_context(|| format!("cannot open {}", trace_csv.display()))?;
    let trace = read_trace_csv(BufReader::new(file))
        .with_context(|| format!("in {}", trace_csv.display()))?;
    if let Some(x) = trace.iterates.first() {
        check_dim("trace", x.dim(), spec.dim())?;
    }
    let report = match verify_trace_bounds(&trace, &spec.config) {
        Ok(report) => report,
        Err(Error::NotConverged) => {
            writeln!(
                out,
                "trace status is {}; nothing to audit",
                trace.status.as_str()
            )?;
            return Ok(EXIT_MAX_ITER);
        }
        Err(e) => return Err(e.into()),
    };
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    Ok(if report.is_clean() {
        EXIT_OK
    } else {
        EXIT_VIOLATIONS
    })
}
