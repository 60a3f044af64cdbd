//! Machine- and human-readable command reports. The JSON form is stable and
//! round-trips; everything except `wall_ms` is deterministic for a fixed
//! input file, command line, and seed.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::jetexpr::OracleConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OracleEcho {
    pub seed: u64,
    pub samples: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Degenerate,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct VerdictEntry {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    /// Human-readable evidence on failure.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Report {
    pub schema: u32,
    pub command: String,
    pub inputs_digest: String,
    pub oracle: OracleEcho,
    pub verdicts: Vec<VerdictEntry>,
    /// Named printable expressions produced by the command, in input
    /// grammar (re-consumable as fixture material).
    pub derived: Vec<[String; 2]>,
    pub residual_max: f64,
    pub residual_median: f64,
    pub wall_ms: u128,
}

pub fn digest(file_bytes: &[u8], arg_echo: &str) -> String {
    let mut h = Sha256::new();
    h.update(file_bytes);
    h.update(arg_echo.as_bytes());
    hex::encode(h.finalize())
}

impl Report {
    pub fn new(command: &str, inputs_digest: String, cfg: &OracleConfig) -> Self {
        Report {
            schema: SCHEMA_VERSION,
            command: command.to_string(),
            inputs_digest,
            oracle: OracleEcho {
                seed: cfg.seed,
                samples: cfg.samples,
                tol: cfg.rel_tol,
            },
            verdicts: Vec::new(),
            derived: Vec::new(),
            residual_max: 0.0,
            residual_median: 0.0,
            wall_ms: 0,
        }
    }

    pub fn verdict(&mut self, name: &str, pass: bool, residual: Option<f64>, witness: Option<String>) {
        self.verdicts.push(VerdictEntry {
            name: name.to_string(),
            status: if pass { Status::Pass } else { Status::Fail },
            residual,
            witness: if pass { None } else { witness },
        });
    }

    pub fn degenerate(&mut self, name: &str, witness: &str) {
        self.verdicts.push(VerdictEntry {
            name: name.to_string(),
            status: Status::Degenerate,
            residual: None,
            witness: Some(witness.to_string()),
        });
    }

    pub fn derive(&mut self, name: &str, printed: String) {
        self.derived.push([name.to_string(), printed]);
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.status == Status::Pass)
    }

    /// Fill the residual statistics from the recorded verdicts.
    pub fn finish(&mut self, wall_ms: u128) {
        let mut rs: Vec<f64> = self.verdicts.iter().filter_map(|v| v.residual).collect();
        rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        self.residual_max = rs.last().copied().unwrap_or(0.0);
        self.residual_median = if rs.is_empty() {
            0.0
        } else {
            rs[rs.len() / 2]
        };
        self.wall_ms = wall_ms;
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("command: {}\n", self.command));
        out.push_str(&format!(
            "oracle: seed={} samples={} tol={:e}\n",
            self.oracle.seed, self.oracle.samples, self.oracle.tol
        ));
        for v in &self.verdicts {
            let status = match v.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Degenerate => "DEGENERATE",
            };
            out.push_str(&format!("  [{status}] {}", v.name));
            if let Some(r) = v.residual {
                out.push_str(&format!(" (residual {r:.3e})"));
            }
            if let Some(w) = &v.witness {
                out.push_str(&format!(" — {w}"));
            }
            out.push('\n');
        }
        for [n, e] in &self.derived {
            out.push_str(&format!("  {n}: {e}\n"));
        }
        out.push_str(&format!(
            "residuals: max {:.3e}, median {:.3e}; wall {} ms\n",
            self.residual_max, self.residual_median, self.wall_ms
        ));
        out
    }
}
