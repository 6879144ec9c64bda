//! The four governance properties, checked online as records are written
//! or offline over an exported trail.

mod monitor;
pub mod oracle;
mod property;
mod trace;

pub use monitor::Monitor;
pub use oracle::{oracle_enumerate, runtime_enumerate, OracleError, OracleSetup, TraceVerdict};
pub use property::{PropertyKind, PropertySpec, Violation};

use crate::runtime::{AuditRecord, AuditTrail, Snapshot};
use crate::spec_lang::ParseError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error("unknown {what} `{name}` in community `{community}`")]
    UnknownIdentifier {
        what: &'static str,
        name: String,
        community: String,
    },
    #[error("trail does not start with a genesis record")]
    MissingGenesis,
    #[error("template in genesis does not parse: {0}")]
    Template(ParseError),
}

/// Anything that can be read as a trail of audit records.
pub trait TraceSource {
    fn trace(&self) -> &[AuditRecord];
}

impl TraceSource for [AuditRecord] {
    fn trace(&self) -> &[AuditRecord] {
        self
    }
}

impl TraceSource for Vec<AuditRecord> {
    fn trace(&self) -> &[AuditRecord] {
        self
    }
}

impl TraceSource for Snapshot {
    fn trace(&self) -> &[AuditRecord] {
        self.records()
    }
}

impl TraceSource for AuditTrail {
    fn trace(&self) -> &[AuditRecord] {
        &self.records
    }
}

/// Runs a fresh monitor over the whole trail. An empty trail holds
/// every property.
pub fn check_properties<S: TraceSource + ?Sized>(
    source: &S,
    specs: &[PropertySpec],
) -> Result<Vec<Violation>, VerifyError> {
    let mut monitor = Monitor::new(specs.to_vec());
    let mut out = Vec::new();
    for r in source.trace() {
        out.extend(monitor.observe(r)?);
    }
    Ok(out)
}

pub fn check_property<S: TraceSource + ?Sized>(
    source: &S,
    spec: &PropertySpec,
) -> Result<Vec<Violation>, VerifyError> {
    check_properties(source, std::slice::from_ref(spec))
}

pub fn check_safety<S: TraceSource + ?Sized>(
    source: &S,
    guarded_action: &str,
    guard_burden: &str,
) -> Result<Vec<Violation>, VerifyError> {
    check_property(source, &PropertySpec::safety(guarded_action, guard_burden))
}

pub fn check_authority<S: TraceSource + ?Sized>(
    source: &S,
    decision_action: &str,
    authorized_role: &str,
) -> Result<Vec<Violation>, VerifyError> {
    check_property(source, &PropertySpec::authority(decision_action, authorized_role))
}

pub fn check_prohibition<S: TraceSource + ?Sized>(
    source: &S,
    action: &str,
    group: &str,
) -> Result<Vec<Violation>, VerifyError> {
    check_property(source, &PropertySpec::prohibition(action, group))
}

pub fn check_accountability<S: TraceSource + ?Sized>(source: &S) -> Result<Vec<Violation>, VerifyError> {
    check_property(source, &PropertySpec::PrincipalTraceability)
}

/// One JSON object per line.
pub fn export_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| serde_json::to_string(v).expect("violations always serialize") + "\n")
        .collect()
}

pub fn import_violations(text: &str) -> Result<Vec<Violation>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
