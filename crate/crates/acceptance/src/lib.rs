//! Acceptance criteria for horoflow. Each criterion compares library output
//! with closed forms or an independent solver and reports the measured
//! errors next to their limits.

use std::fmt;
use std::time::{Duration, Instant};

pub mod criteria;
pub mod lp;

/// One measured quantity: `passed` when `error <= limit`.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub label: String,
    pub error: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    pub fn within(label: impl Into<String>, error: f64, limit: f64) -> Self {
        Self {
            label: label.into(),
            error,
            limit,
            passed: error <= limit,
        }
    }

    /// A yes/no condition, recorded as error 0 or 1 against limit 0.
    pub fn holds(label: impl Into<String>, ok: bool) -> Self {
        Self::within(label, if ok { 0.0 } else { 1.0 }, 0.0)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.passed { "ok  " } else { "FAIL" };
        write!(f, "{mark} {}: {:.3e} <= {:.1e}", self.label, self.error, self.limit)
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub checks: Vec<Check>,
    /// Set when the criterion could not be evaluated at all.
    pub error: Option<String>,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.error.is_none() && !self.checks.is_empty() && self.checks.iter().all(|c| c.passed) && self.elapsed <= self.budget
    }

    /// The single summary line, e.g. `AC3 PASS jacobi ... (1.2 s)`.
    pub fn summary(&self) -> String {
        format!(
            "AC{} {} {} ({:.1} s, budget {} s)",
            self.id,
            if self.passed() { "PASS" } else { "FAIL" },
            self.title,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs()
        )
    }
}

pub const IDS: [u8; 8] = [1, 2, 3, 4, 5, 6, 7, 8];

pub fn title(id: u8) -> &'static str {
    match id {
        1 => "algebraic identities",
        2 => "horocycle characterization",
        3 => "jacobi and riccati closed forms",
        4 => "riccati integrated identity",
        5 => "critical value",
        6 => "closed orbits",
        7 => "action potential properties",
        8 => "conjugacy action identity",
        _ => "unknown",
    }
}

fn budget(id: u8) -> Duration {
    Duration::from_secs(match id {
        1 | 8 => 1,
        3 => 10,
        4 => 120,
        2 => 300,
        _ => 600,
    })
}

/// Runs one criterion; `seed` drives every random draw it makes.
pub fn run(id: u8, seed: u64) -> Outcome {
    let start = Instant::now();
    let res = match id {
        1 => criteria::algebraic_identities(seed),
        2 => criteria::horocycle_characterization(seed),
        3 => criteria::closed_forms(),
        4 => criteria::riccati_identity(seed),
        5 => criteria::critical_value(),
        6 => criteria::closed_orbits(seed),
        7 => criteria::potential_properties(seed),
        8 => criteria::conjugacy_identity(),
        _ => Err(horoflow::Error::InvalidArgument(format!("no criterion {id}"))),
    };
    let (checks, error) = match res {
        Ok(c) => (c, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    Outcome {
        id,
        title: title(id),
        checks,
        error,
        elapsed: start.elapsed(),
        budget: budget(id),
    }
}

pub fn run_all(seed: u64) -> Vec<Outcome> {
    IDS.iter().map(|&id| run(id, seed)).collect()
}
