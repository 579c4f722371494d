//! Bookkeeping for the acceptance suite. Each criterion runs in isolation,
//! is timed, and prints one PASS/FAIL line; a panic inside a criterion
//! counts as a failure instead of aborting the run.

use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

/// Individual assertions gathered while evaluating one criterion.
#[derive(Debug, Default)]
pub struct Checks {
    items: Vec<(bool, String)>,
    notes: Vec<String>,
}

impl Checks {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn check(&mut self, ok: bool, what: impl Into<String>) -> bool {
        self.items.push((ok, what.into()));
        ok
    }

    /// Context printed with the verdict but not counted.
    pub fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }

    pub fn passed(&self) -> bool {
        !self.items.is_empty() && self.items.iter().all(|(ok, _)| *ok)
    }

    pub fn failures(&self) -> impl Iterator<Item = &str> {
        self.items.iter().filter(|(ok, _)| !ok).map(|(_, s)| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub id: u32,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {} [{}] {} ({:.1} s): {}",
            self.id,
            self.title,
            if self.pass { "PASS" } else { "FAIL" },
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "panic".to_string()
    }
}

/// Run one criterion. `budget` is a wall-clock limit that is part of the
/// criterion itself.
pub fn run(id: u32, title: &'static str, budget: Option<Duration>, f: impl FnOnce(&mut Checks)) -> Outcome {
    let start = Instant::now();
    let mut checks = Checks::new();
    let result = catch_unwind(AssertUnwindSafe(|| f(&mut checks)));
    let elapsed = start.elapsed();
    if let Some(limit) = budget {
        checks.check(
            elapsed <= limit,
            format!("runtime {:.1} s within {:.0} s", elapsed.as_secs_f64(), limit.as_secs_f64()),
        );
    }
    let mut detail = String::new();
    let pass = match result {
        Ok(()) => checks.passed(),
        Err(payload) => {
            let _ = write!(detail, "panicked: {}; ", panic_message(payload.as_ref()));
            false
        }
    };
    if pass {
        let _ = write!(detail, "{} checks passed", checks.len());
    } else {
        let failed: Vec<&str> = checks.failures().collect();
        let _ = write!(detail, "{} of {} checks failed: {}", failed.len(), checks.len(), failed.join("; "));
    }
    if !checks.notes().is_empty() {
        let _ = write!(detail, " | {}", checks.notes().join("; "));
    }
    Outcome {
        id,
        title,
        pass,
        detail,
        elapsed,
    }
}

/// Criterion ids selected on the command line; empty means all.
pub fn selected_ids(args: impl Iterator<Item = String>) -> Vec<u32> {
    args.filter_map(|a| a.parse().ok()).collect()
}
