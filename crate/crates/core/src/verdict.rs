use serde::{Deserialize, Serialize};

/// Outcome of one checked claim, with the numbers behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub claim: String,
    pub passed: bool,
    /// Human-readable measured values and thresholds.
    pub detail: String,
}

impl Verdict {
    pub fn new(claim: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            claim: claim.into(),
            passed,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.claim,
            self.detail
        )
    }
}

pub fn all_passed(verdicts: &[Verdict]) -> bool {
    verdicts.iter().all(|v| v.passed)
}
