//! Running communities: role bindings, serialized event application,
//! enterprise objects, deployment modes and the audit trail.

pub mod audit;
mod instance;
pub mod objects;
mod queue;
mod replay;
mod roster;
mod snapshot;
pub mod speech;

pub use audit::{
    export_records, export_trails, import_export, verify_chain, AuditHead, AuditLog, AuditRecord,
    AuditTrail, Digest, IntegrityError, RecordDetail, RecordKind, SpeechStatus, VerdictOutcome,
};
pub use instance::{
    instantiate_community, Applied, CommunityInstance, Event, InstanceConfig, POLICY_VIOLATION,
    REVIEW_ACTION,
};
pub use objects::{AppliedEffect, Effect, EffectRule, EffectTrigger, EnterpriseObject};
pub use queue::InstanceHandle;
pub use replay::{replay_trail, ReplayError};
pub use roster::{RoleBinding, Roster};
pub use snapshot::Snapshot;
pub use speech::{AcceptTarget, Clause, Negotiation, SpeechAct, SpeechBody, TokenRef};

use crate::deontic::DeonticError;
use crate::vocab::{AgentId, PrincipalId, RoleKind, SpeechActKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuntimeError {
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    #[error("unknown role `{0}`")]
    UnknownRole(String),
    #[error("role `{role}` is filled by {expected} agents, not {found}")]
    KindMismatch {
        role: String,
        expected: RoleKind,
        found: RoleKind,
    },
    #[error("binding would exceed cardinality {cardinality} of `{role}`")]
    CardinalityExceeded { role: String, cardinality: String },
    #[error("unknown principal `{0}`")]
    UnknownPrincipal(PrincipalId),
    #[error("principal `{0}` is already registered")]
    DuplicatePrincipal(PrincipalId),
    #[error("`{agent}` already fills `{role}`")]
    AlreadyBound { role: String, agent: AgentId },
    #[error("`{agent}` does not fill `{role}`")]
    NotBound { role: String, agent: AgentId },
    #[error("`{0}` is already bound with a different kind or principal")]
    InconsistentAgent(AgentId),
    #[error("unknown agent `{0}`")]
    UnknownAgent(AgentId),
    #[error("unknown enterprise object `{0}`")]
    UnknownObject(String),
    #[error("`{object}` does not allow {effect:?} effects")]
    EffectNotPermitted { object: String, effect: Effect },
    #[error("{0}")]
    UnknownIdentifier(String),
    #[error(transparent)]
    Deontic(#[from] DeonticError),
}

/// Why a speech act was refused. Refusals are logged with this reason.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpeechRejection {
    #[error("`{sender}` is not authorized to {kind}")]
    Unauthorized { kind: SpeechActKind, sender: AgentId },
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error(transparent)]
    Deontic(#[from] DeonticError),
    #[error("{0}")]
    Invalid(String),
}
