//! Problem files and in-process subcommand calls shared by the criteria.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

pub fn square() -> Value {
    json!({"polytope": {"vertices": [[-1, -1], [1, -1], [1, 1], [-1, 1]]}})
}

pub fn rotation(l: f64, lip: f64) -> Value {
    json!({"rotation2d": {"l": l, "L": lip}})
}

pub fn piecewise(l: f64, lip: f64) -> Value {
    json!({"piecewise1d": {"l": l, "L": lip}})
}

pub fn rotated_square() -> Value {
    json!({"rotated_polytope": {"matrix": [[-3, 0], [0, -3]], "polytope": square()}})
}

pub fn config(scheme: &str, l: f64, lip: f64) -> Value {
    json!({"scheme": scheme, "l": l, "L": lip})
}

pub fn problem(map: Value, dim: usize, config: Value) -> Value {
    json!({"map": map, "y_bar": vec![0.0; dim], "config": config})
}

pub fn write_json(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

/// A built-in problem with correct constants and starting points inside its
/// region of validity.
pub struct Case {
    pub label: String,
    pub problem: Value,
    pub starts: Vec<String>,
}

pub fn builtin_cases() -> Vec<Case> {
    let mut cases = Vec::new();
    for lip in [1.0, 1.5, 1.9] {
        cases.push(Case {
            label: format!("rotation basic L={lip}"),
            problem: problem(rotation(-1.0, lip), 2, config("basic", -1.0, lip)),
            starts: vec!["1,0".into(), "-2,3".into(), "0.3,-4".into()],
        });
    }
    let sqrt2 = 2f64.sqrt();
    cases.push(Case {
        label: "rotation lipschitz_refined L=sqrt2".into(),
        problem: problem(
            rotation(-1.0, sqrt2),
            2,
            config("lipschitz_refined", -1.0, sqrt2),
        ),
        starts: vec!["1,0".into(), "-2,3".into()],
    });
    cases.push(Case {
        label: "linear lipschitz_refined".into(),
        problem: problem(
            rotation(-2.0, 2.0),
            2,
            config("lipschitz_refined", -2.0, 2.0),
        ),
        starts: vec!["3,-1".into()],
    });
    for lip in [2.0, 3.0, 3.8] {
        cases.push(Case {
            label: format!("piecewise basic L={lip}"),
            problem: problem(piecewise(-1.0, lip), 1, config("basic", -1.0, lip)),
            starts: vec!["0.5".into(), "-0.9".into(), "1".into()],
        });
    }
    cases.push(Case {
        label: "piecewise lipschitz_refined_1d L=2".into(),
        problem: problem(
            piecewise(-1.0, 2.0),
            1,
            config("lipschitz_refined_1d", -1.0, 2.0),
        ),
        starts: vec!["0.25".into(), "0.5".into(), "1".into()],
    });
    // The rotated square is 4-Lipschitz; see the core property tests.
    cases.push(Case {
        label: "rotated square basic L=4".into(),
        problem: problem(rotated_square(), 2, config("basic", -2.0, 4.0)),
        starts: vec![
            "3,3".into(),
            "-2.4,0.6".into(),
            "0,-3".into(),
            "1.5,-0.3".into(),
        ],
    });
    cases
}

/// Returns `problem` with the configured `L` multiplied by `factor`.
pub fn scale_lipschitz(problem: &Value, factor: f64) -> Value {
    let mut p = problem.clone();
    let lip = p["config"]["L"].as_f64().unwrap();
    p["config"]["L"] = json!(lip * factor);
    p
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn solve(problem: &Path, x0: Option<&str>, trace: &Path) -> Run {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = rosl_cli::cmd_solve(problem, x0, trace, &mut out, &mut err);
    run(code, out, err)
}

pub fn scan(problem: &Path, csv: &Path) -> Run {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = rosl_cli::cmd_scan(problem, csv, &mut out, &mut err);
    run(code, out, err)
}

pub fn estimate(problem: &Path, samples: usize, seed: u64) -> Run {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = rosl_cli::cmd_estimate(problem, samples, seed, &mut out, &mut err);
    run(code, out, err)
}

pub fn audit(trace: &Path, problem: &Path) -> Run {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = rosl_cli::cmd_audit(trace, problem, &mut out, &mut err);
    run(code, out, err)
}

fn run(code: i32, out: Vec<u8>, err: Vec<u8>) -> Run {
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}
