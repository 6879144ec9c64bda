use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::RuntimeError;
use crate::deontic::{Holder, Membership, Principal};
use crate::spec_lang::CommunityTemplate;
use crate::vocab::{AgentId, PrincipalId, RoleKind, Seq, GROUP_ALL, GROUP_ALL_AI_AGENTS};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleBinding {
    pub role: String,
    pub agent: AgentId,
    pub agent_kind: RoleKind,
    pub principal: PrincipalId,
    pub bound_at: Seq,
}

/// Who fills which role, and which principals are registered.
///
/// Principals that are retired stay referenced by existing bindings; they
/// simply stop being registered, which is what accountability checks see.
#[derive(Debug, Clone)]
pub struct Roster {
    template: Arc<CommunityTemplate>,
    principals: BTreeMap<PrincipalId, Principal>,
    bindings: Vec<RoleBinding>,
}

impl Roster {
    pub fn new(template: Arc<CommunityTemplate>) -> Self {
        Self {
            template,
            principals: BTreeMap::new(),
            bindings: Vec::new(),
        }
    }

    pub fn bindings(&self) -> &[RoleBinding] {
        &self.bindings
    }

    pub fn principals(&self) -> impl Iterator<Item = &Principal> {
        self.principals.values()
    }

    pub fn binding_count(&self, role: &str) -> usize {
        self.bindings.iter().filter(|b| b.role == role).count()
    }

    pub fn roles_of<'a>(&'a self, agent: &'a AgentId) -> impl Iterator<Item = &'a RoleBinding> + 'a {
        self.bindings.iter().filter(move |b| b.agent == *agent)
    }

    pub fn kind_of(&self, agent: &AgentId) -> Option<RoleKind> {
        self.roles_of(agent).next().map(|b| b.agent_kind)
    }

    pub fn check_register(&self, principal: &Principal) -> Result<(), RuntimeError> {
        if self.principals.contains_key(&principal.id) {
            return Err(RuntimeError::DuplicatePrincipal(principal.id.clone()));
        }
        Ok(())
    }

    pub fn register(&mut self, principal: Principal) -> Result<(), RuntimeError> {
        self.check_register(&principal)?;
        self.principals.insert(principal.id.clone(), principal);
        Ok(())
    }

    pub fn check_retire(&self, principal: &PrincipalId) -> Result<(), RuntimeError> {
        if !self.principals.contains_key(principal) {
            return Err(RuntimeError::UnknownPrincipal(principal.clone()));
        }
        Ok(())
    }

    pub fn retire(&mut self, principal: &PrincipalId) -> Result<(), RuntimeError> {
        self.check_retire(principal)?;
        self.principals.remove(principal);
        Ok(())
    }

    /// Checks every binding precondition without changing anything.
    ///
    /// Only the upper cardinality bound is enforced: an instance starts with
    /// no bindings at all, so lower bounds describe a staffed community
    /// rather than a state every prefix of the trace can satisfy.
    pub fn check_bind(
        &self,
        role: &str,
        agent: &AgentId,
        kind: RoleKind,
        principal: &PrincipalId,
    ) -> Result<(), RuntimeError> {
        let decl = self
            .template
            .role(role)
            .ok_or_else(|| RuntimeError::UnknownRole(role.to_string()))?;
        if decl.kind != kind {
            return Err(RuntimeError::KindMismatch {
                role: role.to_string(),
                expected: decl.kind,
                found: kind,
            });
        }
        if !self.principals.contains_key(principal) {
            return Err(RuntimeError::UnknownPrincipal(principal.clone()));
        }
        if self.bindings.iter().any(|b| b.role == role && b.agent == *agent) {
            return Err(RuntimeError::AlreadyBound {
                role: role.to_string(),
                agent: agent.clone(),
            });
        }
        if let Some(existing) = self.roles_of(agent).next() {
            if existing.principal != *principal || existing.agent_kind != kind {
                return Err(RuntimeError::InconsistentAgent(agent.clone()));
            }
        }
        let count = self.binding_count(role) as u32 + 1;
        if !decl.cardinality.admits(count) {
            return Err(RuntimeError::CardinalityExceeded {
                role: role.to_string(),
                cardinality: decl.cardinality.to_string(),
            });
        }
        Ok(())
    }

    pub fn bind(&mut self, binding: RoleBinding) -> Result<(), RuntimeError> {
        self.check_bind(
            &binding.role,
            &binding.agent,
            binding.agent_kind,
            &binding.principal,
        )?;
        self.bindings.push(binding);
        Ok(())
    }

    pub fn check_unbind(&self, role: &str, agent: &AgentId) -> Result<(), RuntimeError> {
        if self.template.role(role).is_none() {
            return Err(RuntimeError::UnknownRole(role.to_string()));
        }
        if !self.bindings.iter().any(|b| b.role == role && b.agent == *agent) {
            return Err(RuntimeError::NotBound {
                role: role.to_string(),
                agent: agent.clone(),
            });
        }
        Ok(())
    }

    pub fn unbind(&mut self, role: &str, agent: &AgentId) -> Result<(), RuntimeError> {
        self.check_unbind(role, agent)?;
        self.bindings.retain(|b| !(b.role == role && b.agent == *agent));
        Ok(())
    }

    /// Interprets a holder name from a speech act: role, then group, then
    /// bound agent.
    pub fn holder_named(&self, name: &str) -> Option<Holder> {
        if self.template.role(name).is_some() {
            Some(Holder::Role(name.to_string()))
        } else if name == GROUP_ALL
            || name == GROUP_ALL_AI_AGENTS
            || self.template.group(name).is_some()
        {
            Some(Holder::Group(name.to_string()))
        } else {
            let agent = AgentId::new(name);
            self.is_bound(&agent).then_some(Holder::Agent(agent))
        }
    }

    fn in_group(&self, group: &str, binding: &RoleBinding) -> bool {
        match group {
            GROUP_ALL => true,
            GROUP_ALL_AI_AGENTS => binding.agent_kind.is_ai(),
            g => self
                .template
                .group(g)
                .is_some_and(|decl| decl.members.contains(&binding.role)),
        }
    }
}

impl Membership for Roster {
    fn is_bound(&self, agent: &AgentId) -> bool {
        self.roles_of(agent).next().is_some()
    }

    fn covers(&self, holder: &Holder, agent: &AgentId) -> bool {
        match holder {
            Holder::Agent(a) => a == agent && self.is_bound(agent),
            Holder::Role(r) => self.roles_of(agent).any(|b| b.role == *r),
            Holder::Group(g) => self.roles_of(agent).any(|b| self.in_group(g, b)),
        }
    }

    fn resolves(&self, holder: &Holder) -> bool {
        match holder {
            Holder::Agent(a) => self.is_bound(a),
            Holder::Role(r) => self.template.role(r).is_some(),
            Holder::Group(g) => {
                g == GROUP_ALL || g == GROUP_ALL_AI_AGENTS || self.template.group(g).is_some()
            }
        }
    }

    fn principal_of(&self, agent: &AgentId) -> Option<&PrincipalId> {
        self.bindings
            .iter()
            .find(|b| b.agent == *agent)
            .map(|b| &b.principal)
    }

    fn is_principal(&self, principal: &PrincipalId) -> bool {
        self.principals.contains_key(principal)
    }
}
