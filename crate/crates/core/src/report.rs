//! Structured verification results.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Pass,
    Inconclusive,
    Fail,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Inconclusive => "INCONCLUSIVE",
            Status::Fail => "FAIL",
        }
    }

    /// The worse of two outcomes; `Fail` dominates `Inconclusive`.
    pub fn and(self, other: Status) -> Status {
        self.max(other)
    }
}

/// How a check's value is compared with its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// passes iff `value < tolerance`
    Below,
    /// passes iff `value > tolerance`
    Above,
    /// passes iff `value == tolerance`
    Equal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub status: Status,
}

impl Check {
    pub fn new(name: &str, value: f64, relation: Relation, tolerance: f64) -> Self {
        let ok = match relation {
            Relation::Below => value < tolerance,
            Relation::Above => value > tolerance,
            Relation::Equal => value == tolerance,
        };
        Self {
            name: String::from(name),
            value,
            tolerance,
            relation,
            status: if ok { Status::Pass } else { Status::Fail },
        }
    }

    pub fn below(name: &str, value: f64, tolerance: f64) -> Self {
        Self::new(name, value, Relation::Below, tolerance)
    }

    pub fn above(name: &str, value: f64, tolerance: f64) -> Self {
        Self::new(name, value, Relation::Above, tolerance)
    }

    pub fn equal(name: &str, value: f64, expected: f64) -> Self {
        Self::new(name, value, Relation::Equal, expected)
    }

    /// Downgrades a would-be result to `Inconclusive`.
    pub fn inconclusive(mut self) -> Self {
        self.status = Status::Inconclusive;
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSummary {
    pub tol_kernel: f64,
    /// Sector `ℓ` → number of eigenvalues with `|μ| < tol_kernel`.
    pub counts: BTreeMap<u32, usize>,
    /// `Σ (2ℓ+1)·counts[ℓ]`.
    pub dim: usize,
    /// Sector → `|cos|` between the kernel eigenvector and the analytic mode.
    pub alignments: BTreeMap<u32, f64>,
    /// Smallest `|μ|` outside the kernel cluster, over all sectors.
    pub gap: f64,
    pub sector_gaps: BTreeMap<u32, f64>,
    /// Sector → `|μ|` of the kernel eigenvalue(s), largest first.
    pub kernel_eigenvalues: BTreeMap<u32, Vec<f64>>,
    /// Eigenvalues in the ambiguous band `[tol, 10·tol)`.
    pub ambiguous: Vec<(u32, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub dim: usize,
    pub tol_kernel: f64,
    /// Sector → largest kernel `|μ|`.
    pub kernel_eigenvalues: BTreeMap<u32, f64>,
    pub alignments: BTreeMap<u32, f64>,
    pub gap: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub kernel: Option<KernelSummary>,
    pub convergence: Vec<ConvergenceRow>,
    pub status: Status,
}

impl Default for VerificationReport {
    fn default() -> Self {
        Self::new()
    }
}

impl VerificationReport {
    pub fn new() -> Self {
        Self {
            checks: Vec::new(),
            kernel: None,
            convergence: Vec::new(),
            status: Status::Pass,
        }
    }

    pub fn push(&mut self, check: Check) {
        self.status = self.status.and(check.status);
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        for c in other.checks {
            self.push(c);
        }
        if other.kernel.is_some() {
            self.kernel = other.kernel;
        }
        self.convergence.extend(other.convergence);
        self.status = self.status.and(other.status);
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}
