//! Run reports and their serialized forms: `report.json`, `rounds.csv` and
//! `trials.csv`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bounds::{BoundRow, BoundStatus};
use crate::error::{Error, Result};

/// Evaluation mode of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Exact,
    MonteCarlo,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::MonteCarlo => "monte-carlo",
        }
    }
}

/// Per-round aggregate. In exact mode sums and means are weighted by the
/// probability of reaching each belief and ratios are the maximum over
/// reachable beliefs; in Monte Carlo mode they are trial averages and
/// maxima.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RoundSummary {
    /// 0-based round index.
    pub t: usize,
    pub r: Option<f64>,
    pub r_plus: Option<f64>,
    pub info_gain: Option<f64>,
    pub info_gain_c: Option<f64>,
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub lambda_c: Option<f64>,
    pub potential_drops: Vec<Option<f64>>,
    pub potential_rhs: Vec<Option<f64>>,
    pub expected_play_loss: f64,
    pub expected_optimal_loss: Option<f64>,
    pub rare_term: Option<f64>,
    pub common_term: Option<f64>,
    pub entropy: Option<f64>,
    pub coord_entropy: Option<f64>,
    /// Number of distinct beliefs (exact) or trials (Monte Carlo) behind
    /// the row.
    pub support: usize,
}

/// A per-round or per-run inequality that failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantViolation {
    pub t: Option<usize>,
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
}

/// Realized outcome of one Monte Carlo trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    /// Index of the drawn scenario, for explicit finite priors.
    pub scenario: Option<usize>,
    pub loss: f64,
    pub lstar: f64,
    pub regret: f64,
}

/// Everything a run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: Mode,
    pub prior: String,
    pub d: usize,
    pub m: usize,
    pub horizon: usize,
    pub actions: usize,
    pub scenarios: Option<usize>,
    pub feedback: String,
    pub policy: String,
    pub gamma: Option<f64>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub expected_regret: f64,
    pub standard_error: Option<f64>,
    pub ci95: Option<(f64, f64)>,
    pub expected_loss: f64,
    pub expected_lstar: f64,
    pub lstar_max: f64,
    /// `H(p_1)`.
    pub entropy: Option<f64>,
    /// `H^c(p_1)`.
    pub coord_entropy: Option<f64>,
    /// Tsallis entropy of `p_1` with exponent 1/2.
    pub tsallis_half: Option<f64>,
    pub potentials: Vec<String>,
    pub rounds: Vec<RoundSummary>,
    pub bounds: Vec<BoundRow>,
    pub violations: Vec<InvariantViolation>,
    /// Total number of violations, including any not stored.
    pub violation_count: usize,
    /// Exact law of the realized regret as `(value, probability)` pairs.
    pub regret_distribution: Option<Vec<(f64, f64)>>,
    pub trial_records: Vec<TrialRecord>,
}

/// Violations kept verbatim in a report; the rest are only counted.
pub const MAX_STORED_VIOLATIONS: usize = 200;

impl RunReport {
    /// True when an invariant failed or an asserted bound did not hold.
    pub fn has_failures(&self) -> bool {
        self.violation_count > 0 || self.bounds.iter().any(|b| b.status == BoundStatus::Fail)
    }

    /// `P[regret >= threshold]` under the exact regret law.
    pub fn regret_tail(&self, threshold: f64) -> Option<f64> {
        self.regret_distribution
            .as_ref()
            .map(|dist| dist.iter().filter(|(v, _)| *v >= threshold - 1e-9).map(|(_, p)| p).sum())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Header of `rounds.csv`.
    pub fn rounds_header(&self) -> Vec<String> {
        let mut header: Vec<String> =
            ["t", "r_t", "r_t_plus", "I_t", "I_c_t", "Gamma_t", "Lambda_t", "Lambda_c_t"].iter().map(|s| s.to_string()).collect();
        header.extend(self.potentials.iter().map(|p| format!("drop_{p}")));
        header.extend(self.potentials.iter().map(|p| format!("rhs_{p}")));
        header.extend(["expected_play_loss", "expected_optimal_loss", "rare_term", "common_term", "entropy", "coord_entropy"].map(String::from));
        header
    }

    /// `rounds.csv`: one row per round, `t` 1-based, `NA` where undefined.
    pub fn rounds_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.rounds_header()).map_err(csv_err)?;
        for row in &self.rounds {
            let mut rec = vec![(row.t + 1).to_string()];
            for v in [row.r, row.r_plus, row.info_gain, row.info_gain_c, row.gamma, row.lambda, row.lambda_c] {
                rec.push(cell(v));
            }
            for k in 0..self.potentials.len() {
                rec.push(cell(row.potential_drops.get(k).copied().flatten()));
            }
            for k in 0..self.potentials.len() {
                rec.push(cell(row.potential_rhs.get(k).copied().flatten()));
            }
            rec.push(row.expected_play_loss.to_string());
            for v in [row.expected_optimal_loss, row.rare_term, row.common_term, row.entropy, row.coord_entropy] {
                rec.push(cell(v));
            }
            w.write_record(rec).map_err(csv_err)?;
        }
        finish(w)
    }

    /// `trials.csv`: `trial,scenario,loss,lstar,regret`.
    pub fn trials_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["trial", "scenario", "loss", "lstar", "regret"]).map_err(csv_err)?;
        for r in &self.trial_records {
            let scenario = r.scenario.map_or_else(|| "NA".to_string(), |s| s.to_string());
            w.write_record([r.trial.to_string(), scenario, r.loss.to_string(), r.lstar.to_string(), r.regret.to_string()])
                .map_err(csv_err)?;
        }
        finish(w)
    }

    /// Write `report.json`, `rounds.csv` and, when there are trials,
    /// `trials.csv` into `dir`.
    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), self.to_json()?)?;
        fs::write(dir.join("rounds.csv"), self.rounds_csv()?)?;
        if !self.trial_records.is_empty() {
            fs::write(dir.join("trials.csv"), self.trials_csv()?)?;
        }
        Ok(())
    }

    /// Human-readable summary.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "prior      {}", self.prior);
        let _ = writeln!(
            out,
            "setting    d={} m={} T={} |A|={} scenarios={}",
            self.d,
            self.m,
            self.horizon,
            self.actions,
            self.scenarios.map_or_else(|| "lazy".to_string(), |s| s.to_string())
        );
        let gamma = self.gamma.map_or_else(String::new, |g| format!(" (gamma={g:.6})"));
        let _ = writeln!(out, "feedback   {}   policy {}{gamma}", self.feedback, self.policy);
        match self.mode {
            Mode::Exact => {
                let _ = writeln!(out, "mode       exact");
                let _ = writeln!(out, "E[R_T]     {:.9}", self.expected_regret);
            }
            Mode::MonteCarlo => {
                let _ = writeln!(
                    out,
                    "mode       monte-carlo, {} trials, seed {}",
                    self.trials.unwrap_or(0),
                    self.seed.unwrap_or(0)
                );
                let se = self.standard_error.unwrap_or(0.0);
                let (lo, hi) = self.ci95.unwrap_or((f64::NAN, f64::NAN));
                let _ = writeln!(out, "E[R_T]     {:.6} +- {:.6} (95% CI [{lo:.6}, {hi:.6}])", self.expected_regret, se);
            }
        }
        let _ = writeln!(out, "E[L_T]     {:.6}", self.expected_loss);
        let _ = writeln!(out, "E[L*]      {:.6}   max L* {:.6}", self.expected_lstar, self.lstar_max);
        if let (Some(h), Some(hc)) = (self.entropy, self.coord_entropy) {
            let _ = writeln!(out, "H(p1)      {h:.6}   H^c(p1) {hc:.6}");
        }
        if !self.bounds.is_empty() {
            let _ = writeln!(out, "\n{:<30} {:>12} {:>12} {:>10}  status", "bound", "measured", "rhs", "ratio");
            for b in &self.bounds {
                let _ = writeln!(
                    out,
                    "{:<30} {:>12} {:>12} {:>10}  {}",
                    b.name,
                    fmt_opt(Some(b.lhs), 6),
                    fmt_opt(b.rhs, 6),
                    fmt_opt(b.ratio, 4),
                    b.status.label()
                );
            }
        }
        if self.violation_count > 0 {
            let _ = writeln!(out, "\n{} invariant violation(s):", self.violation_count);
            for v in &self.violations {
                let t = v.t.map_or_else(|| "run".to_string(), |t| format!("t={}", t + 1));
                let _ = writeln!(out, "  [{t}] {}: {} > {}", v.check, v.lhs, v.rhs);
            }
        } else {
            let _ = writeln!(out, "\nall invariants hold");
        }
        out
    }
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.digits$}"))
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Serialization(e.to_string())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Serialization(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
}
