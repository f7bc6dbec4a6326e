//! Structured outcomes of locality/derivative/identity probes, with a CSV
//! form shared by the test harness and the command-line runner.

/// Probe outcome. `Pass` means every residual stayed within tolerance·scale;
/// `Fail` means some witness exceeded ten times that; anything in between is
/// inconclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Structured outcome of a probe: residuals per trial, the magnitude
/// normalizer, and the verdict derived from them.
#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub functional: String,
    pub test: String,
    pub trials: u32,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// Magnitude normalizer: max |F| over the trial operand set.
    pub scale: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub seed: u64,
    pub parameters: Vec<(String, String)>,
}

impl ProbeReport {
    /// Build a report from raw residuals, applying the pass/fail rule.
    pub fn from_residuals(
        functional: &str,
        test: &str,
        residuals: Vec<f64>,
        scale: f64,
        tolerance: f64,
        seed: u64,
    ) -> Self {
        let max_residual = residuals.iter().fold(0.0f64, |a, &b| a.max(b));
        let verdict = verdict_for(max_residual, scale, tolerance);
        Self {
            functional: functional.to_string(),
            test: test.to_string(),
            trials: residuals.len() as u32,
            residuals,
            max_residual,
            scale,
            tolerance,
            verdict,
            seed,
            parameters: Vec::new(),
        }
    }

    /// An inconclusive report with no trials (used when a normalizer
    /// vanishes or a probe cannot run).
    pub fn inconclusive(functional: &str, test: &str, seed: u64, reason: &str) -> Self {
        Self {
            functional: functional.to_string(),
            test: test.to_string(),
            trials: 0,
            residuals: Vec::new(),
            max_residual: 0.0,
            scale: 0.0,
            tolerance: 0.0,
            verdict: Verdict::Inconclusive,
            seed,
            parameters: vec![("reason".to_string(), reason.to_string())],
        }
    }

    pub fn with_parameter(mut self, key: &str, value: String) -> Self {
        self.parameters.push((key.to_string(), value));
        self
    }

    /// CSV column header shared by all probe tables.
    pub fn csv_header() -> &'static str {
        "functional,test,seed,row,residual,scale,tolerance,verdict"
    }

    /// One row per trial plus a summary row carrying the verdict.
    pub fn csv_rows(&self) -> Vec<String> {
        let mut rows: Vec<String> = self
            .residuals
            .iter()
            .enumerate()
            .map(|(i, r)| {
                format!(
                    "{},{},{},{},{},{},{},",
                    self.functional, self.test, self.seed, i, r, self.scale, self.tolerance
                )
            })
            .collect();
        rows.push(format!(
            "{},{},{},summary,{},{},{},{}",
            self.functional,
            self.test,
            self.seed,
            self.max_residual,
            self.scale,
            self.tolerance,
            self.verdict
        ));
        rows
    }

    /// Human-oriented header lines for the report file.
    pub fn header_lines(&self) -> Vec<String> {
        let mut out = vec![format!(
            "# {} / {}: trials={} seed={} verdict={}",
            self.functional, self.test, self.trials, self.seed, self.verdict
        )];
        for (k, v) in &self.parameters {
            out.push(format!("#   {k}={v}"));
        }
        out
    }
}

/// The pass/fail rule: pass iff max ≤ tol·scale, fail iff max > 10·tol·scale.
pub fn verdict_for(max_residual: f64, scale: f64, tolerance: f64) -> Verdict {
    if max_residual <= tolerance * scale {
        Verdict::Pass
    } else if max_residual > 10.0 * tolerance * scale {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    }
}
