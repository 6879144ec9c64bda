use std::fmt;

use serde::{Deserialize, Serialize};

use super::chain::{ChainNode, DelegationChain};
use super::{DeonticError, Membership};
use crate::vocab::{AgentId, Modality, PrincipalId, Seq, TokenId};

/// Lifecycle state of a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TokenState {
    Created,
    Held,
    Delegated,
    Discharged,
    Revoked,
    Violated,
}

impl TokenState {
    pub fn is_terminal(self) -> bool {
        matches!(
            self,
            TokenState::Discharged | TokenState::Revoked | TokenState::Violated
        )
    }

    /// Edges of the lifecycle graph, including the modality restrictions.
    pub fn may_follow(self, next: TokenState, modality: Modality) -> bool {
        use TokenState::*;
        match (self, next) {
            (Created, Held) => true,
            (Held, Delegated) | (Held, Discharged) | (Held, Violated) => {
                modality == Modality::Burden
            }
            (Held, Revoked) => modality != Modality::Burden,
            (Delegated, Held) => modality == Modality::Burden,
            _ => false,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TokenState::Created => "CREATED",
            TokenState::Held => "HELD",
            TokenState::Delegated => "DELEGATED",
            TokenState::Discharged => "DISCHARGED",
            TokenState::Revoked => "REVOKED",
            TokenState::Violated => "VIOLATED",
        }
    }
}

impl fmt::Display for TokenState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Whoever a token applies to. Roles and groups are resolved against the
/// bindings in force when the token is consulted, not when it was issued.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", content = "id", rename_all = "snake_case")]
pub enum Holder {
    Agent(AgentId),
    Role(String),
    Group(String),
}

impl Holder {
    pub fn node(&self) -> ChainNode {
        match self {
            Holder::Agent(a) => ChainNode::Agent(a.clone()),
            Holder::Role(r) => ChainNode::Role(r.clone()),
            Holder::Group(g) => ChainNode::Group(g.clone()),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Holder::Agent(a) => a.as_str(),
            Holder::Role(r) | Holder::Group(r) => r,
        }
    }
}

impl fmt::Display for Holder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Someone who can issue or revoke tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", content = "id", rename_all = "snake_case")]
pub enum Party {
    Principal(PrincipalId),
    Agent(AgentId),
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Principal(p) => write!(f, "principal:{p}"),
            Party::Agent(a) => write!(f, "agent:{a}"),
        }
    }
}

/// A burden that must be discharged (for the same subject) before a permit
/// can justify anything.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Requirement {
    pub action: String,
    pub holder: Holder,
}

/// A permit that, while held, suspends an embargo.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Exception {
    pub action: String,
    pub holder: Holder,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Discharge {
    pub by: AgentId,
    /// Audit record cited as proof of fulfilment.
    pub evidence: Seq,
    pub at: Seq,
}

/// Reference to an existing audit record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AuditRef(pub Seq);

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StateEntry {
    pub state: TokenState,
    pub at: Seq,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeonticToken {
    pub id: TokenId,
    pub modality: Modality,
    pub action: String,
    pub holder: Holder,
    pub subject: Option<String>,
    pub state: TokenState,
    pub chain: DelegationChain,
    pub issuer: Party,
    pub issued_at: Seq,
    pub deadline: Option<Seq>,
    pub requires: Option<Requirement>,
    pub unless: Option<Exception>,
    pub discharge: Option<Discharge>,
    /// Every state the token has been in, oldest first.
    pub history: Vec<StateEntry>,
}

/// What to create; the store assigns the id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSpec {
    pub modality: Modality,
    pub action: String,
    pub holder: Holder,
    pub subject: Option<String>,
    pub deadline: Option<Seq>,
    pub requires: Option<Requirement>,
    pub unless: Option<Exception>,
}

impl TokenSpec {
    pub fn new(modality: Modality, action: impl Into<String>, holder: Holder) -> Self {
        Self {
            modality,
            action: action.into(),
            holder,
            subject: None,
            deadline: None,
            requires: None,
            unless: None,
        }
    }

    pub fn subject(mut self, subject: impl Into<String>) -> Self {
        self.subject = Some(subject.into());
        self
    }

    pub fn deadline(mut self, deadline: Seq) -> Self {
        self.deadline = Some(deadline);
        self
    }
}

impl DeonticToken {
    pub fn is_active(&self) -> bool {
        self.state == TokenState::Held
    }

    /// Scoped tokens only speak about their own subject.
    pub fn covers_subject(&self, subject: Option<&str>) -> bool {
        match &self.subject {
            None => true,
            Some(s) => subject == Some(s.as_str()),
        }
    }

    fn enter(&mut self, state: TokenState, at: Seq) -> Result<(), DeonticError> {
        if !self.state.may_follow(state, self.modality) {
            return Err(DeonticError::InvalidTransition {
                from: self.state,
                to: state,
            });
        }
        self.state = state;
        self.history.push(StateEntry { state, at });
        Ok(())
    }

    /// Entries appended since the token had `known` history entries.
    pub fn transitions_since(&self, known: usize) -> impl Iterator<Item = (TokenState, &StateEntry)> {
        let start = known.max(1);
        self.history[start..]
            .iter()
            .enumerate()
            .map(move |(i, e)| (self.history[start + i - 1].state, e))
    }
}

fn party_principal<'a>(party: &'a Party, ctx: &'a impl Membership) -> Option<&'a PrincipalId> {
    match party {
        Party::Principal(p) => Some(p),
        Party::Agent(a) => ctx.principal_of(a),
    }
}

/// Issues a new token, HELD by `spec.holder`, with a one-link chain from the
/// issuer's principal.
pub fn create_token(
    id: TokenId,
    spec: TokenSpec,
    issuer: Party,
    at: Seq,
    ctx: &impl Membership,
) -> Result<DeonticToken, DeonticError> {
    let principal = match &issuer {
        Party::Principal(p) if ctx.is_principal(p) => p.clone(),
        Party::Agent(a) if ctx.is_bound(a) => match ctx.principal_of(a) {
            Some(p) if ctx.is_principal(p) => p.clone(),
            _ => return Err(DeonticError::UnknownIssuer(issuer.to_string())),
        },
        _ => return Err(DeonticError::UnknownIssuer(issuer.to_string())),
    };
    if !ctx.resolves(&spec.holder) {
        return Err(DeonticError::UnresolvedHolder(spec.holder.to_string()));
    }
    Ok(DeonticToken {
        id,
        modality: spec.modality,
        action: spec.action,
        chain: DelegationChain::issued(principal, spec.holder.node(), at),
        holder: spec.holder,
        subject: spec.subject,
        state: TokenState::Held,
        issuer,
        issued_at: at,
        deadline: spec.deadline,
        requires: spec.requires,
        unless: spec.unless,
        discharge: None,
        history: vec![
            StateEntry {
                state: TokenState::Created,
                at,
            },
            StateEntry {
                state: TokenState::Held,
                at,
            },
        ],
    })
}

fn require_live_burden(token: &DeonticToken) -> Result<(), DeonticError> {
    if token.modality != Modality::Burden {
        return Err(DeonticError::NotABurden(token.id));
    }
    if token.state.is_terminal() {
        return Err(DeonticError::TerminalState(token.id, token.state));
    }
    Ok(())
}

/// Hands a burden from its current holder to another bound agent.
///
/// When the burden is held by a role or group, the acting filler first
/// appears in the chain as the recipient of that role's link.
pub fn delegate_burden(
    token: &DeonticToken,
    from: &AgentId,
    to: &AgentId,
    at: Seq,
    ctx: &impl Membership,
) -> Result<DeonticToken, DeonticError> {
    require_live_burden(token)?;
    if !ctx.covers(&token.holder, from) {
        return Err(DeonticError::NotHolder {
            token: token.id,
            agent: from.clone(),
        });
    }
    if !ctx.is_bound(to) {
        return Err(DeonticError::UnknownAgent(to.clone()));
    }
    let from_node = ChainNode::Agent(from.clone());
    let to_node = ChainNode::Agent(to.clone());
    if to == from || token.chain.contains_recipient(&to_node) {
        return Err(DeonticError::CycleDetected {
            token: token.id,
            agent: to.clone(),
        });
    }
    let mut next = token.clone();
    if !matches!(token.holder, Holder::Agent(_)) {
        if token.chain.contains_recipient(&from_node) {
            return Err(DeonticError::CycleDetected {
                token: token.id,
                agent: from.clone(),
            });
        }
        next.chain.push(token.holder.node(), from_node.clone(), at);
    }
    next.chain.push(from_node, to_node, at);
    next.enter(TokenState::Delegated, at)?;
    next.holder = Holder::Agent(to.clone());
    next.enter(TokenState::Held, at)?;
    Ok(next)
}

/// Marks a burden fulfilled. `evidence` must cite a record written before `at`.
pub fn discharge_burden(
    token: &DeonticToken,
    by: &AgentId,
    evidence: AuditRef,
    at: Seq,
    ctx: &impl Membership,
) -> Result<DeonticToken, DeonticError> {
    require_live_burden(token)?;
    if !ctx.covers(&token.holder, by) {
        return Err(DeonticError::NotHolder {
            token: token.id,
            agent: by.clone(),
        });
    }
    if evidence.0 >= at {
        return Err(DeonticError::DanglingEvidence(evidence.0));
    }
    let mut next = token.clone();
    next.enter(TokenState::Discharged, at)?;
    next.discharge = Some(Discharge {
        by: by.clone(),
        evidence: evidence.0,
        at,
    });
    Ok(next)
}

/// Withdraws a permit or embargo. Allowed for the issuer itself, for the
/// principal the token traces to, and for agents acting on behalf of an
/// issuing principal.
pub fn revoke_token(
    token: &DeonticToken,
    by: &Party,
    at: Seq,
    ctx: &impl Membership,
) -> Result<DeonticToken, DeonticError> {
    if token.modality == Modality::Burden {
        return Err(DeonticError::NotRevocable(token.id));
    }
    if token.state.is_terminal() {
        return Err(DeonticError::TerminalState(token.id, token.state));
    }
    let head = token.chain.principal().ok();
    let authorized = *by == token.issuer
        || matches!(by, Party::Principal(p) if Some(p) == head)
        || matches!(
            (&token.issuer, by),
            (Party::Principal(p), Party::Agent(_)) if party_principal(by, ctx) == Some(p)
        );
    if !authorized {
        return Err(DeonticError::NotIssuer {
            token: token.id,
            by: by.to_string(),
        });
    }
    let mut next = token.clone();
    next.enter(TokenState::Revoked, at)?;
    Ok(next)
}

/// Moves an overdue burden to VIOLATED. Returns `None` when nothing changes.
pub fn expire_burden(token: &DeonticToken, at: Seq) -> Option<DeonticToken> {
    match token.deadline {
        Some(d) if token.modality == Modality::Burden && token.is_active() && at > d => {
            let mut next = token.clone();
            next.enter(TokenState::Violated, at).ok()?;
            Some(next)
        }
        _ => None,
    }
}

/// The party ultimately responsible for `token`.
pub fn trace_to_principal(token: &DeonticToken) -> Result<PrincipalId, DeonticError> {
    token.chain.principal().cloned()
}
