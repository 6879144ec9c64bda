//! Append-only, hash-chained audit trail and its line-delimited export.
//!
//! Each record's hash is SHA-256 over the previous record's hash followed by
//! the canonical JSON of `(seq, kind, actor, detail)`. The genesis record
//! chains from 32 zero bytes. The export is one header line per community
//! followed by one canonical JSON record per line, fields in the order
//! `seq, kind, actor, detail, prev_hash, hash`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};

use super::objects::{AppliedEffect, EffectRule};
use super::speech::SpeechBody;
use crate::deontic::{DeonticToken, Principal, TokenState};
use crate::verifier::{PropertySpec, Violation};
use crate::vocab::{AgentId, DeploymentMode, PrincipalId, RoleKind, Seq, TokenId};

/// Name of the digest algorithm, written into genesis and export headers.
pub const DIGEST_ALGORITHM: &str = "sha256";
const EXPORT_MAGIC: &str = "# community-audit v1";

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub const ZERO: Digest = Digest([0; 32]);

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", &self.to_hex()[..12])
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Digest {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let mut out = [0u8; 32];
        hex::decode_to_slice(&s, &mut out).map_err(serde::de::Error::custom)?;
        Ok(Digest(out))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Genesis,
    Binding,
    ModeChange,
    SpeechAct,
    ActionRequest,
    Verdict,
    TokenTransition,
    PropertyViolation,
    Escalation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictOutcome {
    Admissible,
    Blocked,
    /// AI-initiated action held back in advisory mode pending human acceptance.
    Recommended,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SpeechStatus {
    Accepted,
    Rejected { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RecordDetail {
    Genesis {
        community: String,
        digest: String,
        mode: DeploymentMode,
        owner: Principal,
        /// Canonical text of the community template.
        template: String,
        effects: Vec<EffectRule>,
        monitors: Vec<PropertySpec>,
    },
    RegisterPrincipal {
        principal: Principal,
    },
    RetirePrincipal {
        principal: PrincipalId,
    },
    Bind {
        role: String,
        agent: AgentId,
        agent_kind: RoleKind,
        principal: PrincipalId,
    },
    Unbind {
        role: String,
        agent: AgentId,
    },
    ModeChange {
        from: DeploymentMode,
        to: DeploymentMode,
    },
    ActionRequest {
        action: String,
        subject: Option<String>,
    },
    Verdict {
        request: Seq,
        action: String,
        subject: Option<String>,
        outcome: VerdictOutcome,
        /// Permit that justified an admissible action.
        permit: Option<TokenId>,
        exceptions: Vec<TokenId>,
        blocked_by: Vec<TokenId>,
        reason: Option<String>,
        approved_by: Option<AgentId>,
        effects: Vec<AppliedEffect>,
    },
    SpeechAct {
        act: SpeechBody,
        #[serde(flatten)]
        status: SpeechStatus,
        effects: Vec<AppliedEffect>,
    },
    TokenTransition {
        token: DeonticToken,
        from: TokenState,
        to: TokenState,
    },
    Escalation {
        condition: String,
        role: Option<String>,
        trigger: Seq,
        review: Option<TokenId>,
    },
    PropertyViolation {
        violation: Violation,
    },
}

impl RecordDetail {
    pub fn kind(&self) -> RecordKind {
        match self {
            RecordDetail::Genesis { .. } => RecordKind::Genesis,
            RecordDetail::RegisterPrincipal { .. }
            | RecordDetail::RetirePrincipal { .. }
            | RecordDetail::Bind { .. }
            | RecordDetail::Unbind { .. } => RecordKind::Binding,
            RecordDetail::ModeChange { .. } => RecordKind::ModeChange,
            RecordDetail::ActionRequest { .. } => RecordKind::ActionRequest,
            RecordDetail::Verdict { .. } => RecordKind::Verdict,
            RecordDetail::SpeechAct { .. } => RecordKind::SpeechAct,
            RecordDetail::TokenTransition { .. } => RecordKind::TokenTransition,
            RecordDetail::Escalation { .. } => RecordKind::Escalation,
            RecordDetail::PropertyViolation { .. } => RecordKind::PropertyViolation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub seq: Seq,
    pub kind: RecordKind,
    pub actor: Option<AgentId>,
    pub detail: RecordDetail,
    pub prev_hash: Digest,
    pub hash: Digest,
}

#[derive(Serialize)]
struct HashInput<'a> {
    seq: Seq,
    kind: RecordKind,
    actor: &'a Option<AgentId>,
    detail: &'a RecordDetail,
}

impl AuditRecord {
    pub fn compute_hash(&self) -> Digest {
        digest_of(self.seq, self.kind, &self.actor, &self.detail, &self.prev_hash)
    }

    /// The single export line for this record, without the newline.
    pub fn canonical_line(&self) -> String {
        serde_json::to_string(self).expect("audit records always serialize")
    }
}

fn digest_of(
    seq: Seq,
    kind: RecordKind,
    actor: &Option<AgentId>,
    detail: &RecordDetail,
    prev: &Digest,
) -> Digest {
    let body = serde_json::to_vec(&HashInput {
        seq,
        kind,
        actor,
        detail,
    })
    .expect("audit records always serialize");
    let mut h = Sha256::new();
    h.update(prev.0);
    h.update(&body);
    Digest(h.finalize().into())
}

/// Head of a log: last sequence number and hash.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AuditHead {
    pub seq: Seq,
    pub hash: Digest,
}

/// The in-memory trail of one community instance. Records are only appended.
#[derive(Debug, Clone, Default)]
pub struct AuditLog {
    records: Arc<Vec<AuditRecord>>,
}

impl AuditLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next_seq(&self) -> Seq {
        self.records.len() as Seq
    }

    pub fn append(&mut self, actor: Option<AgentId>, detail: RecordDetail) -> Seq {
        let seq = self.next_seq();
        let prev_hash = self.records.last().map_or(Digest::ZERO, |r| r.hash);
        let kind = detail.kind();
        let hash = digest_of(seq, kind, &actor, &detail, &prev_hash);
        Arc::make_mut(&mut self.records).push(AuditRecord {
            seq,
            kind,
            actor,
            detail,
            prev_hash,
            hash,
        });
        seq
    }

    pub fn records(&self) -> &[AuditRecord] {
        &self.records
    }

    /// A cheap shared handle to the records written so far.
    pub fn shared(&self) -> Arc<Vec<AuditRecord>> {
        Arc::clone(&self.records)
    }

    pub fn head(&self) -> Option<AuditHead> {
        self.records.last().map(|r| AuditHead {
            seq: r.seq,
            hash: r.hash,
        })
    }

    pub fn get(&self, seq: Seq) -> Option<&AuditRecord> {
        self.records.get(seq as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("integrity failure in {community} at seq {seq} (line {line}): {reason}")]
pub struct IntegrityError {
    pub community: String,
    /// Sequence number of the first record that fails verification.
    pub seq: Seq,
    /// 1-based line in the export, 0 when checking in memory.
    pub line: usize,
    pub reason: String,
}

/// Re-verifies sequence numbering and the hash chain from genesis.
pub fn verify_chain(community: &str, records: &[AuditRecord]) -> Result<(), IntegrityError> {
    let mut prev = Digest::ZERO;
    for (i, r) in records.iter().enumerate() {
        let fail = |reason: String| IntegrityError {
            community: community.to_string(),
            seq: i as Seq,
            line: 0,
            reason,
        };
        if r.seq != i as Seq {
            return Err(fail(format!("expected seq {i}, found {}", r.seq)));
        }
        if r.kind != r.detail.kind() {
            return Err(fail("record kind does not match its detail".into()));
        }
        if (i == 0) != (r.kind == RecordKind::Genesis) {
            return Err(fail("genesis must be exactly the first record".into()));
        }
        if r.prev_hash != prev {
            return Err(fail("prev_hash does not match previous record".into()));
        }
        if r.compute_hash() != r.hash {
            return Err(fail("recomputed digest mismatch".into()));
        }
        prev = r.hash;
    }
    Ok(())
}

/// One community's trail as read from an export.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditTrail {
    pub community: String,
    pub records: Vec<AuditRecord>,
}

impl AuditTrail {
    pub fn genesis(&self) -> Option<&AuditRecord> {
        self.records.first()
    }
}

fn header(community: &str) -> String {
    format!("{EXPORT_MAGIC} community={community} digest={DIGEST_ALGORITHM}")
}

pub fn export_records(community: &str, records: &[AuditRecord]) -> String {
    let mut out = header(community);
    out.push('\n');
    for r in records {
        out.push_str(&r.canonical_line());
        out.push('\n');
    }
    out
}

/// Concatenates several trails into one export document.
pub fn export_trails<'a>(trails: impl IntoIterator<Item = (&'a str, &'a [AuditRecord])>) -> String {
    trails
        .into_iter()
        .map(|(c, r)| export_records(c, r))
        .collect()
}

/// Parses an export and re-verifies every chain. Each line must be the
/// canonical serialization of the record it decodes to, so any byte-level
/// change is reported at the record it belongs to.
pub fn import_export(text: &str) -> Result<Vec<AuditTrail>, IntegrityError> {
    let mut trails: Vec<AuditTrail> = Vec::new();
    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        if let Some(rest) = raw.strip_prefix(EXPORT_MAGIC) {
            let community = parse_header(rest).ok_or_else(|| IntegrityError {
                community: String::new(),
                seq: 0,
                line: line_no,
                reason: format!("malformed header `{raw}`"),
            })?;
            trails.push(AuditTrail {
                community,
                records: Vec::new(),
            });
            continue;
        }
        let Some(current) = trails.last_mut() else {
            if raw.is_empty() {
                continue;
            }
            return Err(IntegrityError {
                community: String::new(),
                seq: 0,
                line: line_no,
                reason: "record before any header".into(),
            });
        };
        let seq = current.records.len() as Seq;
        let fail = |reason: String| IntegrityError {
            community: current.community.clone(),
            seq,
            line: line_no,
            reason,
        };
        if raw.is_empty() {
            // only the final newline may produce an empty line
            if idx + 1 == text.split('\n').count() {
                continue;
            }
            return Err(fail("empty line inside trail".into()));
        }
        let record: AuditRecord =
            serde_json::from_str(raw).map_err(|e| fail(format!("unparseable record: {e}")))?;
        if record.canonical_line() != raw {
            return Err(fail("record is not in canonical form".into()));
        }
        current.records.push(record);
    }
    for t in &trails {
        verify_chain(&t.community, &t.records).map_err(|mut e| {
            e.line = line_of(text, &t.community, e.seq);
            e
        })?;
    }
    Ok(trails)
}

fn parse_header(rest: &str) -> Option<String> {
    let mut community = None;
    let mut digest_ok = false;
    for field in rest.split_whitespace() {
        if let Some(c) = field.strip_prefix("community=") {
            community = Some(c.to_string());
        } else {
            let d = field.strip_prefix("digest=")?;
            digest_ok = d == DIGEST_ALGORITHM;
        }
    }
    if digest_ok {
        community.filter(|c| !c.is_empty())
    } else {
        None
    }
}

fn line_of(text: &str, community: &str, seq: Seq) -> usize {
    let target = header(community);
    text.split('\n')
        .position(|l| l == target)
        .map_or(0, |h| h + 2 + seq as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_log() -> AuditLog {
        let mut log = AuditLog::new();
        log.append(
            None,
            RecordDetail::Genesis {
                community: "C".into(),
                digest: DIGEST_ALGORITHM.into(),
                mode: DeploymentMode::Autonomous,
                owner: Principal::organization("H", "Hospital"),
                template: "community C {\n}\n".into(),
                effects: vec![],
                monitors: vec![],
            },
        );
        log.append(
            None,
            RecordDetail::RegisterPrincipal {
                principal: Principal::organization("V", "Vendor"),
            },
        );
        log.append(
            Some(AgentId::new("a")),
            RecordDetail::ActionRequest {
                action: "read".into(),
                subject: Some("p1".into()),
            },
        );
        log
    }

    #[test]
    fn chain_links_and_genesis() {
        let log = sample_log();
        let r = log.records();
        assert_eq!(r[0].prev_hash, Digest::ZERO);
        assert_eq!(r[1].prev_hash, r[0].hash);
        assert!(verify_chain("C", r).is_ok());
        assert_eq!(log.head().unwrap().seq, 2);
    }

    #[test]
    fn export_import_round_trip() {
        let log = sample_log();
        let text = export_records("C", log.records());
        let trails = import_export(&text).unwrap();
        assert_eq!(trails.len(), 1);
        assert_eq!(trails[0].records, log.records());
    }

    #[test]
    fn field_order_is_fixed() {
        let line = sample_log().records()[2].canonical_line();
        let keys = ["\"seq\"", "\"kind\"", "\"actor\"", "\"detail\"", "\"prev_hash\"", "\"hash\""];
        let positions: Vec<usize> = keys.iter().map(|k| line.find(k).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]), "{line}");
    }

    #[test]
    fn tampering_is_localized() {
        let log = sample_log();
        let text = export_records("C", log.records());
        let tampered = text.replacen("\"read\"", "\"reed\"", 1);
        let err = import_export(&tampered).unwrap_err();
        assert_eq!(err.seq, 2);
        assert_eq!(err.line, 4);
    }

    #[test]
    fn non_canonical_whitespace_rejected() {
        let log = sample_log();
        let text = export_records("C", log.records());
        let tampered = text.replacen("{\"seq\":1,", "{\"seq\": 1,", 1);
        let err = import_export(&tampered).unwrap_err();
        assert_eq!(err.seq, 1);
    }
}
