//! Exhaustive small-scope checking against a reference model.
//!
//! The reference model is a second, deliberately plain implementation of
//! bindings, tokens and the admissibility rule. It works on events, not on
//! audit records, and predicts the sequence number of every record the
//! runtime would write so its verdicts can be compared with the monitors'.

use std::collections::{BTreeMap, BTreeSet};

use super::{Monitor, PropertyKind, PropertySpec};
use crate::deontic::Principal;
use crate::runtime::{instantiate_community, Event, InstanceConfig, SpeechBody, TokenRef};
use crate::spec_lang::{CommunityTemplate, Target};
use crate::vocab::{
    AgentId, DeploymentMode, Modality, PrincipalId, RoleKind, Seq, SpeechActKind, GROUP_ALL,
    GROUP_ALL_AI_AGENTS,
};

pub const MAX_ALPHABET: usize = 8;
pub const MAX_DEPTH: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("scope {alphabet}^{depth} is too large (at most {MAX_ALPHABET} events, depth {MAX_DEPTH})")]
    ScopeTooLarge { alphabet: usize, depth: usize },
    #[error("the reference model does not cover {0}")]
    Unsupported(String),
    #[error("setup failed: {0}")]
    Setup(String),
}

/// Fixed context for every enumerated trace.
#[derive(Debug, Clone)]
pub struct OracleSetup {
    pub owner: Principal,
    /// Events applied before each enumerated suffix.
    pub prefix: Vec<Event>,
    pub properties: Vec<PropertySpec>,
}

/// Violations found on one trace, as (property, seq) pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceVerdict {
    /// Indices into the alphabet.
    pub trace: Vec<usize>,
    pub violations: BTreeSet<(PropertyKind, Seq)>,
}

fn check_scope(alphabet: &[Event], depth: usize) -> Result<(), OracleError> {
    if alphabet.len() > MAX_ALPHABET || depth > MAX_DEPTH {
        return Err(OracleError::ScopeTooLarge {
            alphabet: alphabet.len(),
            depth,
        });
    }
    Ok(())
}

/// Every trace of length at most `depth` over `alphabet`, in depth-first
/// order, with the property violations the reference model predicts.
pub fn oracle_enumerate(
    t: &CommunityTemplate,
    setup: &OracleSetup,
    alphabet: &[Event],
    depth: usize,
) -> Result<Vec<TraceVerdict>, OracleError> {
    check_scope(alphabet, depth)?;
    for e in alphabet.iter().chain(&setup.prefix) {
        supported(e)?;
    }
    let mut root = Model::new(t, &setup.owner, &setup.properties);
    for e in &setup.prefix {
        root.step(e);
    }
    // violations inside the prefix are part of every trace
    let mut out = Vec::new();
    let mut trace = Vec::new();
    enumerate(&root, alphabet, depth, &mut trace, &mut out, &|m: &Model, e| {
        let mut next = m.clone();
        next.step(e);
        next
    }, &|m: &Model| m.found.clone());
    Ok(out)
}

/// The same enumeration through the real runtime with an online monitor.
pub fn runtime_enumerate(
    t: &CommunityTemplate,
    setup: &OracleSetup,
    alphabet: &[Event],
    depth: usize,
) -> Result<Vec<TraceVerdict>, OracleError> {
    check_scope(alphabet, depth)?;
    let config = InstanceConfig::new(setup.owner.clone()).mode(DeploymentMode::Autonomous);
    let mut inst =
        instantiate_community(t.clone(), config).map_err(|e| OracleError::Setup(e.to_string()))?;
    let mut root = Observed {
        monitor: Monitor::new(setup.properties.clone()),
        found: BTreeSet::new(),
        fed: 0,
    };
    root.feed(&inst);
    for e in &setup.prefix {
        let _ = inst.apply(e.clone());
        root.feed(&inst);
    }
    let mut out = Vec::new();
    let mut trace = Vec::new();
    enumerate(
        &(inst, root),
        alphabet,
        depth,
        &mut trace,
        &mut out,
        &|(inst, obs), e| {
            let mut inst = inst.clone();
            let mut obs = obs.clone();
            // unlogged refusals leave no record; logged ones are part of the trace
            let _ = inst.apply(e.clone());
            obs.feed(&inst);
            (inst, obs)
        },
        &|(_, obs)| obs.found.clone(),
    );
    Ok(out)
}

#[derive(Clone)]
struct Observed {
    monitor: Monitor,
    found: BTreeSet<(PropertyKind, Seq)>,
    fed: usize,
}

impl Observed {
    fn feed(&mut self, inst: &crate::runtime::CommunityInstance) {
        let records = inst.audit().records();
        for r in &records[self.fed..] {
            for v in self.monitor.observe(r).expect("identifiers checked by caller") {
                self.found.insert((v.kind(), v.at_seq));
            }
        }
        self.fed = records.len();
    }
}

fn enumerate<S>(
    state: &S,
    alphabet: &[Event],
    depth: usize,
    trace: &mut Vec<usize>,
    out: &mut Vec<TraceVerdict>,
    step: &dyn Fn(&S, &Event) -> S,
    verdict: &dyn Fn(&S) -> BTreeSet<(PropertyKind, Seq)>,
) {
    out.push(TraceVerdict {
        trace: trace.clone(),
        violations: verdict(state),
    });
    if trace.len() == depth {
        return;
    }
    for (i, e) in alphabet.iter().enumerate() {
        let next = step(state, e);
        trace.push(i);
        enumerate(&next, alphabet, depth, trace, out, step, verdict);
        trace.pop();
    }
}

fn supported(e: &Event) -> Result<(), OracleError> {
    let unsupported = |what: &str| Err(OracleError::Unsupported(what.to_string()));
    match e {
        Event::SetMode(_) => unsupported("mode changes"),
        Event::Speech(act) => match &act.body {
            SpeechBody::DeclareBurden { deadline: Some(_), .. } => unsupported("deadlines"),
            SpeechBody::DeclareBurden { .. }
            | SpeechBody::DeclarePermit { .. }
            | SpeechBody::DeclareEmbargo { .. } => Ok(()),
            SpeechBody::Discharge {
                token: TokenRef::Match { .. },
                evidence: None,
            }
            | SpeechBody::Revoke {
                token: TokenRef::Match { .. },
            } => Ok(()),
            other => unsupported(&format!("`{}` speech acts", other.kind())),
        },
        _ => Ok(()),
    }
}

// ---------------------------------------------------------------------------
// reference model

#[derive(Debug, Clone, PartialEq, Eq)]
enum Who {
    Agent(AgentId),
    Name(String),
}

#[derive(Debug, Clone)]
struct Tok {
    id: u64,
    modality: Modality,
    action: String,
    who: Who,
    subject: Option<String>,
    state: &'static str,
    requires: Option<String>,
    unless: Option<(String, Who)>,
    /// Principal at the head of the token's chain.
    head: PrincipalId,
    issuer_agent: Option<AgentId>,
    discharged_by: Option<AgentId>,
}

#[derive(Debug, Clone)]
struct Bound {
    role: String,
    agent: AgentId,
    kind: RoleKind,
    principal: PrincipalId,
}

#[derive(Debug, Clone)]
struct Model {
    template: CommunityTemplate,
    properties: Vec<PropertySpec>,
    principals: BTreeSet<PrincipalId>,
    bound: Vec<Bound>,
    tokens: Vec<Tok>,
    seq: Seq,
    gap: BTreeMap<usize, bool>,
    found: BTreeSet<(PropertyKind, Seq)>,
}

impl Model {
    fn new(t: &CommunityTemplate, owner: &Principal, properties: &[PropertySpec]) -> Self {
        let mut m = Model {
            template: t.clone(),
            properties: properties.to_vec(),
            principals: BTreeSet::from([owner.id.clone()]),
            bound: Vec::new(),
            tokens: Vec::new(),
            seq: 1, // genesis
            gap: BTreeMap::new(),
            found: BTreeSet::new(),
        };
        for p in &t.policies {
            let who = |target: &Target| Who::Name(target.as_str().to_string());
            m.tokens.push(Tok {
                id: m.tokens.len() as u64 + 1,
                modality: p.deontic.modality,
                action: p.deontic.action.clone(),
                who: who(&p.deontic.target),
                subject: None,
                state: "HELD",
                requires: p.requires.as_ref().map(|r| r.action.clone()),
                unless: p.unless.as_ref().map(|u| (u.action.clone(), who(&u.target))),
                head: owner.id.clone(),
                issuer_agent: None,
                discharged_by: None,
            });
            m.seq += 1;
        }
        m
    }

    fn is_bound(&self, a: &AgentId) -> bool {
        self.bound.iter().any(|b| b.agent == *a)
    }

    fn name_covers(&self, name: &str, b: &Bound) -> bool {
        if name == GROUP_ALL || name == b.role {
            return true;
        }
        if name == GROUP_ALL_AI_AGENTS {
            return b.kind != RoleKind::Human && b.kind != RoleKind::System;
        }
        self.template
            .groups
            .iter()
            .any(|g| g.name == name && g.members.contains(&b.role))
    }

    fn covers(&self, who: &Who, a: &AgentId) -> bool {
        match who {
            Who::Agent(x) => x == a && self.is_bound(a),
            Who::Name(n) => self
                .bound
                .iter()
                .any(|b| b.agent == *a && self.name_covers(n, b)),
        }
    }

    fn who_named(&self, name: &str) -> Option<Who> {
        let declared = name == GROUP_ALL
            || name == GROUP_ALL_AI_AGENTS
            || self.template.roles.iter().any(|r| r.name == name)
            || self.template.groups.iter().any(|g| g.name == name);
        if declared {
            Some(Who::Name(name.to_string()))
        } else {
            let a = AgentId::new(name);
            self.is_bound(&a).then_some(Who::Agent(a))
        }
    }

    fn scoped_ok(tok: &Tok, subject: Option<&str>) -> bool {
        tok.subject.is_none() || tok.subject.as_deref() == subject
    }

    /// Justifying permit id, or None when blocked.
    fn judge(&self, actor: &AgentId, action: &str, subject: Option<&str>) -> Option<u64> {
        for e in &self.tokens {
            if e.modality != Modality::Embargo
                || e.state != "HELD"
                || e.action != action
                || !Self::scoped_ok(e, subject)
                || !self.covers(&e.who, actor)
            {
                continue;
            }
            let mut lifted = false;
            if let Some((exc_action, exc_who)) = &e.unless {
                for p in &self.tokens {
                    if p.modality == Modality::Permit
                        && p.state == "HELD"
                        && p.action == *exc_action
                        && Self::scoped_ok(p, subject)
                    {
                        let holder_ok = p.who == *exc_who
                            || matches!(&p.who, Who::Agent(x) if self.covers(exc_who, x));
                        if holder_ok {
                            lifted = true;
                        }
                    }
                }
            }
            if !lifted {
                return None;
            }
        }
        for p in &self.tokens {
            if p.modality == Modality::Permit
                && p.state == "HELD"
                && p.action == action
                && Self::scoped_ok(p, subject)
                && self.covers(&p.who, actor)
            {
                let ok = match &p.requires {
                    None => true,
                    Some(req) => self.tokens.iter().any(|b| {
                        b.modality == Modality::Burden
                            && b.state == "DISCHARGED"
                            && b.action == *req
                            && b.subject.as_deref() == subject
                    }),
                };
                if ok {
                    return Some(p.id);
                }
            }
        }
        None
    }

    fn principal_of(&self, a: &AgentId) -> Option<&PrincipalId> {
        self.bound.iter().find(|b| b.agent == *a).map(|b| &b.principal)
    }

    fn step(&mut self, e: &Event) {
        match e {
            Event::RegisterPrincipal(p) => {
                if self.principals.insert(p.id.clone()) {
                    self.seq += 1;
                }
            }
            Event::RetirePrincipal(p) => {
                if self.principals.remove(p) {
                    self.seq += 1;
                }
            }
            Event::Bind {
                role,
                agent,
                kind,
                principal,
            } => {
                let Some(decl) = self.template.roles.iter().find(|r| r.name == *role) else {
                    return;
                };
                let count = self.bound.iter().filter(|b| b.role == *role).count() as u32;
                let consistent = self
                    .bound
                    .iter()
                    .filter(|b| b.agent == *agent)
                    .all(|b| b.principal == *principal && b.kind == *kind && b.role != *role);
                let within = decl.cardinality.max.is_none_or(|m| count < m);
                if decl.kind == *kind && self.principals.contains(principal) && consistent && within {
                    self.bound.push(Bound {
                        role: role.clone(),
                        agent: agent.clone(),
                        kind: *kind,
                        principal: principal.clone(),
                    });
                    self.seq += 1;
                }
            }
            Event::Unbind { role, agent } => {
                let before = self.bound.len();
                self.bound.retain(|b| !(b.role == *role && b.agent == *agent));
                if self.bound.len() != before {
                    self.seq += 1;
                }
            }
            Event::Action {
                actor,
                action,
                subject,
            } => {
                if !self.is_bound(actor) {
                    return;
                }
                let verdict = self.seq + 1;
                self.seq += 2;
                if let Some(permit) = self.judge(actor, action, subject.as_deref()) {
                    self.executed(actor, action, subject.as_deref(), permit, verdict);
                }
            }
            Event::Speech(act) => {
                if !self.is_bound(&act.sender) {
                    return;
                }
                self.seq += 1;
                let kind = act.kind();
                let authorized = self.bound.iter().any(|b| {
                    b.agent == act.sender && self.template.authorizes(&b.role, kind)
                });
                if authorized && self.speech(&act.sender, &act.body, kind) {
                    self.seq += 1;
                }
            }
            Event::SetMode(_) => unreachable!("rejected by `supported`"),
        }
        self.check_gaps();
    }

    /// Applies an authorized speech act; true when it was accepted (and so
    /// wrote one token transition).
    fn speech(&mut self, sender: &AgentId, body: &SpeechBody, kind: SpeechActKind) -> bool {
        let transition_seq = self.seq;
        match body {
            SpeechBody::DeclareBurden {
                action,
                holder,
                subject,
                ..
            }
            | SpeechBody::DeclarePermit {
                action,
                holder,
                subject,
                ..
            }
            | SpeechBody::DeclareEmbargo {
                action,
                holder,
                subject,
                ..
            } => {
                let Some(head) = self.principal_of(sender).cloned() else {
                    return false;
                };
                if !self.principals.contains(&head) {
                    return false;
                }
                let Some(who) = self.who_named(holder) else {
                    return false;
                };
                let (requires, unless) = match body {
                    SpeechBody::DeclarePermit { requires, .. } => match requires {
                        None => (None, None),
                        Some(c) => match self.who_named(&c.holder) {
                            Some(_) => (Some(c.action.clone()), None),
                            None => return false,
                        },
                    },
                    SpeechBody::DeclareEmbargo { unless, .. } => match unless {
                        None => (None, None),
                        Some(c) => match self.who_named(&c.holder) {
                            Some(w) => (None, Some((c.action.clone(), w))),
                            None => return false,
                        },
                    },
                    _ => (None, None),
                };
                let modality = match kind {
                    SpeechActKind::DeclareBurden => Modality::Burden,
                    SpeechActKind::DeclarePermit => Modality::Permit,
                    _ => Modality::Embargo,
                };
                self.tokens.push(Tok {
                    id: self.tokens.len() as u64 + 1,
                    modality,
                    action: action.clone(),
                    who,
                    subject: subject.clone(),
                    state: "HELD",
                    requires,
                    unless,
                    head,
                    issuer_agent: Some(sender.clone()),
                    discharged_by: None,
                });
                true
            }
            SpeechBody::Discharge {
                token: TokenRef::Match { action, subject },
                ..
            } => {
                let found = self.tokens.iter().position(|t| {
                    t.state == "HELD"
                        && t.action == *action
                        && t.subject == *subject
                        && self.covers(&t.who, sender)
                });
                let Some(i) = found else { return false };
                if self.tokens[i].modality != Modality::Burden {
                    return false;
                }
                self.tokens[i].state = "DISCHARGED";
                self.tokens[i].discharged_by = Some(sender.clone());
                self.discharged(i, transition_seq);
                true
            }
            SpeechBody::Revoke {
                token: TokenRef::Match { action, subject },
            } => {
                let found = self
                    .tokens
                    .iter()
                    .position(|t| t.state == "HELD" && t.action == *action && t.subject == *subject);
                let Some(i) = found else { return false };
                let tok = &self.tokens[i];
                if tok.modality == Modality::Burden {
                    return false;
                }
                let allowed = match &tok.issuer_agent {
                    Some(a) => a == sender,
                    None => self.principal_of(sender) == Some(&tok.head),
                };
                if !allowed {
                    return false;
                }
                self.tokens[i].state = "REVOKED";
                true
            }
            _ => unreachable!("rejected by `supported`"),
        }
    }

    fn executed(&mut self, actor: &AgentId, action: &str, subject: Option<&str>, permit: u64, at: Seq) {
        for spec in &self.properties.clone() {
            let hit = match spec {
                PropertySpec::ConsentGatedAccess {
                    guarded_action,
                    guard_burden,
                } => {
                    action == guarded_action
                        && !self.tokens.iter().any(|b| {
                            b.modality == Modality::Burden
                                && b.state == "DISCHARGED"
                                && b.action == *guard_burden
                                && b.subject.as_deref() == subject
                        })
                }
                PropertySpec::ExclusiveAuthority {
                    decision_action, ..
                } => action == decision_action,
                PropertySpec::EmbargoHolds { action: a, group } => {
                    action == a
                        && self
                            .bound
                            .iter()
                            .any(|b| b.agent == *actor && self.name_covers(group, b))
                        // runtime admitted it, so every covering embargo was lifted
                        && !self.tokens.iter().any(|e| {
                            e.modality == Modality::Embargo
                                && e.state == "HELD"
                                && e.action == action
                                && Self::scoped_ok(e, subject)
                                && self.covers(&e.who, actor)
                        })
                }
                PropertySpec::PrincipalTraceability => {
                    let actor_ok = self
                        .principal_of(actor)
                        .is_some_and(|p| self.principals.contains(p));
                    let head = &self.tokens[(permit - 1) as usize].head;
                    !actor_ok || !self.principals.contains(head)
                }
            };
            if hit {
                self.found.insert((spec.kind(), at));
            }
        }
    }

    fn discharged(&mut self, i: usize, at: Seq) {
        let tok = self.tokens[i].clone();
        for spec in &self.properties {
            if let PropertySpec::ExclusiveAuthority {
                decision_action,
                authorized_role,
            } = spec
            {
                let by = tok.discharged_by.as_ref().expect("just discharged");
                let ok = self
                    .bound
                    .iter()
                    .any(|b| b.agent == *by && b.role == *authorized_role);
                if tok.action == *decision_action && !ok {
                    self.found.insert((PropertyKind::Authority, at));
                }
            }
        }
    }

    fn check_gaps(&mut self) {
        let last = self.seq - 1;
        for (i, spec) in self.properties.iter().enumerate() {
            let PropertySpec::EmbargoHolds { action, group } = spec else {
                continue;
            };
            let open = self.bound.iter().any(|b| {
                self.name_covers(group, b)
                    && !self.tokens.iter().any(|e| {
                        e.modality == Modality::Embargo
                            && e.state == "HELD"
                            && e.action == *action
                            && e.subject.is_none()
                            && self.covers(&e.who, &b.agent)
                    })
            });
            let was = self.gap.insert(i, open).unwrap_or(false);
            if open && !was {
                self.found.insert((PropertyKind::Prohibition, last));
            }
        }
    }
}
