//! CSV encodings of solver traces and scan results.
//!
//! Floats are written with 17 significant digits so that a trace read back
//! from disk is bit-identical to the one that was written. Absent values
//! (exclusion radius without `L`, limits of runs that did not converge) are
//! empty fields.

use std::io::{Read, Write};

use crate::analyze::ScanResult;
use crate::error::{Error, Result};
use crate::solve::{Certificate, IterationTrace, Status};
use crate::vector::Vector;

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    if e.is_io_error() {
        Error::Io(e.to_string())
    } else {
        Error::Format(e.to_string())
    }
}

fn numbered(prefix: &str, dim: usize) -> impl Iterator<Item = String> + '_ {
    (1..=dim).map(move |i| format!("{prefix}_{i}"))
}

/// Header of a trace CSV for dimension `dim`.
pub fn trace_header(dim: usize) -> Vec<String> {
    let mut h = vec!["n".to_string()];
    h.extend(numbered("x", dim));
    h.extend(numbered("v", dim));
    h.push("defect".into());
    h.extend(numbered("cert_center", dim));
    h.push("cert_radius".into());
    h.push("excl_radius".into());
    h.push("status".into());
    h
}

pub fn write_trace_csv<W: Write>(trace: &IterationTrace, out: W) -> Result<()> {
    let dim = trace
        .iterates
        .first()
        .map(Vector::dim)
        .ok_or_else(|| Error::Format("cannot write an empty trace".into()))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trace_header(dim)).map_err(csv_err)?;
    let last = trace.len() - 1;
    for (n, ((x, v), (defect, cert))) in trace
        .iterates
        .iter()
        .zip(&trace.defect_vectors)
        .zip(trace.defect_norms.iter().zip(&trace.certificates))
        .enumerate()
    {
        let mut row = vec![n.to_string()];
        row.extend(x.coords().iter().map(|&c| fmt_f64(c)));
        row.extend(v.coords().iter().map(|&c| fmt_f64(c)));
        row.push(fmt_f64(*defect));
        row.extend(cert.inclusion_center.coords().iter().map(|&c| fmt_f64(c)));
        row.push(fmt_f64(cert.inclusion_radius));
        row.push(fmt_opt(cert.exclusion_radius));
        row.push(if n == last {
            trace.status.as_str().to_string()
        } else {
            String::new()
        });
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

fn parse_f64(field: &str, what: &str, row: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Format(format!("row {row}: bad {what} value {field:?}")))
}

fn parse_vector(fields: &[&str], what: &str, row: usize) -> Result<Vector> {
    let coords = fields
        .iter()
        .map(|f| parse_f64(f, what, row))
        .collect::<Result<Vec<_>>>()?;
    Vector::new(coords).map_err(|e| Error::Format(format!("row {row}: {what}: {e}")))
}

/// Reads a trace written by [`write_trace_csv`]. The limit of a converged
/// trace is its last iterate.
pub fn read_trace_csv<R: Read>(input: R) -> Result<IterationTrace> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_string)
        .collect();
    let dim = header.iter().filter(|h| h.starts_with("x_")).count();
    if dim == 0 || header != trace_header(dim) {
        return Err(Error::Format(format!("unexpected trace header {header:?}")));
    }
    let mut trace = IterationTrace {
        iterates: Vec::new(),
        defect_vectors: Vec::new(),
        defect_norms: Vec::new(),
        certificates: Vec::new(),
        status: Status::MaxIter,
        limit: None,
        diagnostic: None,
    };
    let mut status = None;
    for (row, record) in r.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let f: Vec<&str> = record.iter().collect();
        if status.is_some() {
            return Err(Error::Format(format!(
                "row {row}: data after the status row"
            )));
        }
        let n: usize = f[0]
            .parse()
            .map_err(|_| Error::Format(format!("row {row}: bad iterate index {:?}", f[0])))?;
        if n != row {
            return Err(Error::Format(format!(
                "row {row}: iterate index {n} out of order"
            )));
        }
        let x = parse_vector(&f[1..1 + dim], "x", row)?;
        let v = parse_vector(&f[1 + dim..1 + 2 * dim], "v", row)?;
        let defect = parse_f64(f[1 + 2 * dim], "defect", row)?;
        let center = parse_vector(&f[2 + 2 * dim..2 + 3 * dim], "cert_center", row)?;
        let radius = parse_f64(f[2 + 3 * dim], "cert_radius", row)?;
        let excl = match f[3 + 3 * dim].trim() {
            "" => None,
            s => Some(parse_f64(s, "excl_radius", row)?),
        };
        match f[4 + 3 * dim].trim() {
            "" => {}
            s => {
                status = Some(
                    Status::parse(s)
                        .ok_or_else(|| Error::Format(format!("row {row}: unknown status {s:?}")))?,
                )
            }
        }
        trace.iterates.push(x);
        trace.defect_vectors.push(v);
        trace.defect_norms.push(defect);
        trace.certificates.push(Certificate {
            inclusion_center: center,
            inclusion_radius: radius,
            exclusion_radius: excl,
        });
    }
    trace.status = status.ok_or_else(|| Error::Format("trace has no status row".into()))?;
    if trace.status == Status::Converged {
        trace.limit = trace.iterates.last().cloned();
    }
    Ok(trace)
}

/// Header of a scan CSV for dimension `dim`.
pub fn scan_header(dim: usize) -> Vec<String> {
    let mut h: Vec<String> = numbered("gx", dim).collect();
    h.push("status".into());
    h.extend(numbered("limit", dim));
    h.push("residual".into());
    h
}

pub fn write_scan_csv<W: Write>(scan: &ScanResult, out: W) -> Result<()> {
    let dim = scan
        .grid_points
        .first()
        .map(Vector::dim)
        .ok_or_else(|| Error::Format("cannot write an empty scan".into()))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(scan_header(dim)).map_err(csv_err)?;
    for i in 0..scan.len() {
        let mut row: Vec<String> = scan.grid_points[i]
            .coords()
            .iter()
            .map(|&c| fmt_f64(c))
            .collect();
        row.push(scan.statuses[i].as_str().into());
        match &scan.limits[i] {
            Some(limit) => row.extend(limit.coords().iter().map(|&c| fmt_f64(c))),
            None => row.extend(std::iter::repeat_n(String::new(), dim)),
        }
        row.push(fmt_opt(scan.membership_residuals[i]));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}
