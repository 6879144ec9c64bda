//! Community state as reconstructed from audit records alone.

use std::collections::{BTreeMap, BTreeSet};

use super::VerifyError;
use crate::deontic::{DeonticToken, Holder, TokenState};
use crate::runtime::{AuditRecord, RecordDetail};
use crate::spec_lang::{parse_spec, CommunityTemplate};
use crate::vocab::{AgentId, Modality, PrincipalId, RoleKind, Seq, TokenId, GROUP_ALL, GROUP_ALL_AI_AGENTS};

#[derive(Debug, Clone)]
pub(crate) struct TracedBinding {
    pub role: String,
    pub agent: AgentId,
    pub kind: RoleKind,
    pub principal: PrincipalId,
    pub seq: Seq,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct TraceState {
    pub template: Option<CommunityTemplate>,
    pub principals: BTreeSet<PrincipalId>,
    pub bindings: Vec<TracedBinding>,
    pub tokens: BTreeMap<TokenId, DeonticToken>,
}

impl TraceState {
    pub fn apply(&mut self, r: &AuditRecord) -> Result<(), VerifyError> {
        match &r.detail {
            RecordDetail::Genesis {
                template, owner, ..
            } => {
                self.template = Some(parse_spec(template).map_err(VerifyError::Template)?);
                self.principals.insert(owner.id.clone());
            }
            RecordDetail::RegisterPrincipal { principal } => {
                self.principals.insert(principal.id.clone());
            }
            RecordDetail::RetirePrincipal { principal } => {
                self.principals.remove(principal);
            }
            RecordDetail::Bind {
                role,
                agent,
                agent_kind,
                principal,
            } => self.bindings.push(TracedBinding {
                role: role.clone(),
                agent: agent.clone(),
                kind: *agent_kind,
                principal: principal.clone(),
                seq: r.seq,
            }),
            RecordDetail::Unbind { role, agent } => self
                .bindings
                .retain(|b| !(b.role == *role && b.agent == *agent)),
            RecordDetail::TokenTransition { token, .. } => {
                self.tokens.insert(token.id, token.clone());
            }
            _ => {}
        }
        Ok(())
    }

    pub fn binding_of(&self, agent: &AgentId) -> Option<&TracedBinding> {
        self.bindings.iter().find(|b| b.agent == *agent)
    }

    pub fn member_of(&self, group: &str, b: &TracedBinding) -> bool {
        match group {
            GROUP_ALL => true,
            GROUP_ALL_AI_AGENTS => matches!(b.kind, RoleKind::AgenticAi | RoleKind::LlmAgent),
            name if name == b.role => true,
            name => self.template.as_ref().is_some_and(|t| {
                t.group(name)
                    .is_some_and(|g| g.members.contains(&b.role))
            }),
        }
    }

    pub fn in_group(&self, group: &str, agent: &AgentId) -> bool {
        self.bindings
            .iter()
            .any(|b| b.agent == *agent && self.member_of(group, b))
    }

    pub fn covers(&self, holder: &Holder, agent: &AgentId) -> bool {
        match holder {
            Holder::Agent(a) => a == agent && self.binding_of(agent).is_some(),
            Holder::Role(r) | Holder::Group(r) => self.in_group(r, agent),
        }
    }

    pub fn held(&self, modality: Modality) -> impl Iterator<Item = &DeonticToken> {
        self.tokens
            .values()
            .filter(move |t| t.modality == modality && t.state == TokenState::Held)
    }
}
