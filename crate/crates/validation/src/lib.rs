//! Acceptance suite for the solver workspace.
//!
//! [`run_all`] evaluates every criterion in order and prints one PASS/FAIL
//! line each; the `acceptance` test target is a thin wrapper around it.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

pub mod criteria;
pub mod fixtures;

/// Collects the failed checks of one criterion.
#[derive(Debug, Default)]
pub struct Checks {
    pub total: usize,
    pub failures: Vec<String>,
}

impl Checks {
    pub fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.total += 1;
        if !ok {
            self.failures.push(what());
        }
    }
}

pub struct Criterion {
    pub number: usize,
    pub name: &'static str,
    /// Wall-clock budget in seconds; `None` when the criterion has none.
    pub budget_s: Option<f64>,
    pub run: fn(&mut Checks),
}

pub fn criteria() -> Vec<Criterion> {
    use criteria::*;
    let c = |number, name, budget_s, run| Criterion {
        number,
        name,
        budget_s,
        run,
    };
    vec![
        c(1, "rotation sharp rate", Some(1.0), criterion_1),
        c(2, "rotation divergence threshold", Some(1.0), criterion_2),
        c(3, "1D threshold", Some(1.0), criterion_3),
        c(4, "d=1 rate formula", Some(1.0), criterion_4),
        c(5, "refined-scheme rate", Some(1.0), criterion_5),
        c(6, "d=1 refined scheme", Some(1.0), criterion_6),
        c(7, "certificate sharpness", Some(1.0), criterion_7),
        c(8, "solution-set scan", Some(10.0), criterion_8),
        c(9, "projection oracle equivalence", None, criterion_9),
        c(10, "IVT oracle", None, criterion_10),
        c(11, "bound audit", None, criterion_11),
    ]
}

#[derive(Debug)]
pub struct Outcome {
    pub number: usize,
    pub name: &'static str,
    pub checks: Checks,
    pub elapsed_s: f64,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.failures.is_empty()
    }

    pub fn line(&self) -> String {
        let detail = if self.passed() {
            format!("{} checks", self.checks.total)
        } else {
            let shown = &self.checks.failures[..self.checks.failures.len().min(3)];
            format!(
                "{} of {} checks failed; {}",
                self.checks.failures.len(),
                self.checks.total,
                shown.join("; ")
            )
        };
        format!(
            "{} criterion {:>2} ({}): {detail} [{:.3} s]",
            if self.passed() { "PASS" } else { "FAIL" },
            self.number,
            self.name,
            self.elapsed_s
        )
    }
}

pub fn evaluate(criterion: &Criterion) -> Outcome {
    let mut checks = Checks::default();
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(|| (criterion.run)(&mut checks)));
    let elapsed_s = start.elapsed().as_secs_f64();
    if let Err(panic) = result {
        let msg = panic
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        checks.failures.push(format!("panicked: {msg}"));
    }
    if let Some(budget) = criterion.budget_s {
        if elapsed_s >= budget {
            checks
                .failures
                .push(format!("took {elapsed_s:.3} s, budget {budget} s"));
        }
    }
    Outcome {
        number: criterion.number,
        name: criterion.name,
        checks,
        elapsed_s,
    }
}

/// Runs every criterion, printing a line per criterion and a summary.
/// Returns the number of failed criteria.
pub fn run_all() -> usize {
    let all = criteria();
    let mut failed = 0;
    for criterion in &all {
        let outcome = evaluate(criterion);
        if !outcome.passed() {
            failed += 1;
        }
        println!("{}", outcome.line());
    }
    println!(
        "acceptance: {}/{} criteria passed",
        all.len() - failed,
        all.len()
    );
    failed
}
