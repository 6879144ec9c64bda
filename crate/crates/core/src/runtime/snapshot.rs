use std::collections::BTreeMap;
use std::sync::Arc;

use super::audit::{AuditHead, AuditRecord, Digest};
use super::instance::CommunityInstance;
use super::roster::RoleBinding;
use crate::deontic::TokenStore;
use crate::vocab::{DeploymentMode, PrincipalId};

/// Immutable view of an instance at one point of its trail.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub community: String,
    pub mode: DeploymentMode,
    pub principals: Vec<PrincipalId>,
    pub bindings: Vec<RoleBinding>,
    pub tokens: TokenStore,
    pub objects: BTreeMap<String, Digest>,
    pub head: AuditHead,
    /// The trail up to and including `head`.
    pub records: Arc<Vec<AuditRecord>>,
}

impl CommunityInstance {
    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            community: self.name().to_string(),
            mode: self.mode(),
            principals: self.roster().principals().map(|p| p.id.clone()).collect(),
            bindings: self.bindings().to_vec(),
            tokens: self.tokens().clone(),
            objects: self
                .objects()
                .iter()
                .map(|(k, o)| (k.clone(), o.digest()))
                .collect(),
            head: self.audit().head().expect("instances always have a genesis record"),
            records: self.audit().shared(),
        }
    }
}

impl Snapshot {
    pub fn records(&self) -> &[AuditRecord] {
        &self.records
    }
}
