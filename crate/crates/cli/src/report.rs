//! Versioned JSON reports.
//!
//! Field order is fixed by the struct definitions and every list is produced
//! in a canonical order, so identical inputs give byte-identical JSON. The
//! only wall-clock content is `generated_at`, present when `--timestamp` is
//! passed.

use serde::Serialize;
use sha2::{Digest, Sha256};

use cyclepersist_core::bifurcation::{BifurcationProfile, Pr1Check};
use cyclepersist_core::cycle::CycleSummary;
use cyclepersist_core::degree::DegreeReport;
use cyclepersist_core::floquet::FloquetSummary;
use cyclepersist_core::model::AnalysisSettings;
use cyclepersist_core::persist::{Corollary1Probe, PersistOptions, PersistenceRun};
use cyclepersist_core::selfcheck::SelfcheckReport;

pub const SCHEMA_VERSION: &str = "1.0.0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    HypothesisFailure,
    NumericalFailure,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::NumericalFailure => 1,
            Status::HypothesisFailure => 2,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

impl Default for Tool {
    fn default() -> Self {
        Self {
            name: "cyclepersist",
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    /// SHA-256 of the configuration file bytes.
    pub config_sha256: String,
    pub system: String,
    pub settings: AnalysisSettings,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub persist: Option<PersistOptions>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub schema_version: &'static str,
    pub kind: &'static str,
    pub tool: Tool,
    pub provenance: Provenance,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycle: Option<CycleSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub floquet: Option<FloquetSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bifurcation: Option<BifurcationProfile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<DegreeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
}

impl AnalysisReport {
    pub fn new(provenance: Provenance) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind: "analysis",
            tool: Tool::default(),
            provenance,
            status: Status::Ok,
            error: None,
            cycle: None,
            floquet: None,
            bifurcation: None,
            degree: None,
            generated_at: None,
        }
    }
}

/// Section-distance probe at a zero of `f0` where `f1(θ0, ·)` has a zero.
#[derive(Debug, Clone, Serialize)]
pub struct Corollary1Entry {
    pub theta0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<Corollary1Probe>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub schema_version: &'static str,
    pub kind: &'static str,
    pub tool: Tool,
    pub provenance: Provenance,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<DegreeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree_error: Option<String>,
    pub pr1: Vec<Pr1Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub persistence: Option<PersistenceRun>,
    pub corollary1: Vec<Corollary1Entry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
}

impl VerifyReport {
    pub fn new(provenance: Provenance) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind: "verify",
            tool: Tool::default(),
            provenance,
            status: Status::Ok,
            error: None,
            degree: None,
            degree_error: None,
            pr1: Vec::new(),
            persistence: None,
            corollary1: Vec::new(),
            generated_at: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfcheckEnvelope<'a> {
    pub schema_version: &'static str,
    pub kind: &'static str,
    pub tool: Tool,
    #[serde(flatten)]
    pub report: &'a SelfcheckReport,
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports contain only serializable data");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_known_input() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Status::Ok.exit_code(), 0);
        assert_eq!(Status::NumericalFailure.exit_code(), 1);
        assert_eq!(Status::HypothesisFailure.exit_code(), 2);
    }
}
