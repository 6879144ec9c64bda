//! Deontic tokens (burdens, permits, embargoes), their lifecycle and
//! delegation chains, and the admissibility judgment for actions.

mod chain;
mod intent;
mod judgment;
mod store;
mod token;

use serde::{Deserialize, Serialize};

pub use chain::{ChainNode, DelegationChain, DelegationLink};
pub use intent::{CommitmentReadiness, IntentRecord, IntentView, NotOwner};
pub use judgment::{check_action_admissible, Admissibility, BlockReason};
pub use store::TokenStore;
pub use token::{
    create_token, delegate_burden, discharge_burden, expire_burden, revoke_token,
    trace_to_principal, AuditRef, DeonticToken, Discharge, Exception, Holder, Party,
    Requirement, StateEntry, TokenSpec, TokenState,
};

use crate::vocab::{AgentId, PrincipalId, TokenId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrincipalKind {
    Organization,
    NaturalPerson,
}

impl std::str::FromStr for PrincipalKind {
    type Err = crate::vocab::UnknownKeyword;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "organization" => Ok(PrincipalKind::Organization),
            "natural_person" => Ok(PrincipalKind::NaturalPerson),
            other => Err(crate::vocab::UnknownKeyword(other.to_string())),
        }
    }
}

impl PrincipalKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PrincipalKind::Organization => "organization",
            PrincipalKind::NaturalPerson => "natural_person",
        }
    }
}

/// A party that bears legal responsibility for the agents acting for it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Principal {
    pub id: PrincipalId,
    pub name: String,
    pub kind: PrincipalKind,
}

impl Principal {
    pub fn organization(id: impl Into<String>, name: impl Into<String>) -> Self {
        Self {
            id: PrincipalId::new(id),
            name: name.into(),
            kind: PrincipalKind::Organization,
        }
    }

    pub fn person(id: impl Into<String>, name: impl Into<String>) -> Self {
        Self {
            id: PrincipalId::new(id),
            name: name.into(),
            kind: PrincipalKind::NaturalPerson,
        }
    }
}

/// Current role bindings and registered principals, as seen by the token
/// operations. The runtime's roster implements this; tests use small fakes.
pub trait Membership {
    fn is_bound(&self, agent: &AgentId) -> bool;
    /// Whether `holder` applies to `agent` under the bindings in force now.
    fn covers(&self, holder: &Holder, agent: &AgentId) -> bool;
    /// Whether `holder` names a declared role or group, or a bound agent.
    fn resolves(&self, holder: &Holder) -> bool;
    fn principal_of(&self, agent: &AgentId) -> Option<&PrincipalId>;
    fn is_principal(&self, principal: &PrincipalId) -> bool;
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
pub enum DeonticError {
    #[error("unknown issuer {0}")]
    UnknownIssuer(String),
    #[error("holder `{0}` does not resolve")]
    UnresolvedHolder(String),
    #[error("agent `{agent}` does not hold token {token}")]
    NotHolder { token: TokenId, agent: AgentId },
    #[error("token {0} is not a burden")]
    NotABurden(TokenId),
    #[error("delegating token {token} to `{agent}` would create a cycle")]
    CycleDetected { token: TokenId, agent: AgentId },
    #[error("token {0} is in terminal state {1}")]
    TerminalState(TokenId, TokenState),
    #[error("evidence record {0} does not exist")]
    DanglingEvidence(u64),
    #[error("{by} did not issue token {token}")]
    NotIssuer { token: TokenId, by: String },
    #[error("token {0} is a burden and cannot be revoked")]
    NotRevocable(TokenId),
    #[error("malformed delegation chain: {0}")]
    MalformedChain(String),
    #[error("unknown agent `{0}`")]
    UnknownAgent(AgentId),
    #[error("illegal transition {from} -> {to}")]
    InvalidTransition { from: TokenState, to: TokenState },
}

#[cfg(test)]
pub(crate) mod testing {
    use std::collections::BTreeMap;

    use super::*;
    use crate::vocab::RoleKind;

    /// Flat membership table: agent -> (role, kind, principal).
    #[derive(Default)]
    pub struct Table {
        pub agents: BTreeMap<AgentId, (String, RoleKind, PrincipalId)>,
        pub roles: Vec<String>,
        pub groups: BTreeMap<String, Vec<String>>,
        pub principals: Vec<PrincipalId>,
    }

    impl Table {
        pub fn principal(mut self, p: &str) -> Self {
            self.principals.push(PrincipalId::new(p));
            self
        }

        pub fn bind(mut self, agent: &str, role: &str, kind: RoleKind, principal: &str) -> Self {
            if !self.roles.iter().any(|r| r == role) {
                self.roles.push(role.to_string());
            }
            self.agents.insert(
                AgentId::new(agent),
                (role.to_string(), kind, PrincipalId::new(principal)),
            );
            self
        }
    }

    impl Membership for Table {
        fn is_bound(&self, agent: &AgentId) -> bool {
            self.agents.contains_key(agent)
        }

        fn covers(&self, holder: &Holder, agent: &AgentId) -> bool {
            let Some((role, kind, _)) = self.agents.get(agent) else {
                return false;
            };
            match holder {
                Holder::Agent(a) => a == agent,
                Holder::Role(r) => r == role,
                Holder::Group(g) if g == crate::vocab::GROUP_ALL => true,
                Holder::Group(g) if g == crate::vocab::GROUP_ALL_AI_AGENTS => kind.is_ai(),
                Holder::Group(g) => self.groups.get(g).is_some_and(|m| m.contains(role)),
            }
        }

        fn resolves(&self, holder: &Holder) -> bool {
            match holder {
                Holder::Agent(a) => self.agents.contains_key(a),
                Holder::Role(r) => self.roles.contains(r),
                Holder::Group(g) => {
                    g == crate::vocab::GROUP_ALL
                        || g == crate::vocab::GROUP_ALL_AI_AGENTS
                        || self.groups.contains_key(g)
                }
            }
        }

        fn principal_of(&self, agent: &AgentId) -> Option<&PrincipalId> {
            self.agents.get(agent).map(|(_, _, p)| p)
        }

        fn is_principal(&self, principal: &PrincipalId) -> bool {
            self.principals.contains(principal)
        }
    }
}
