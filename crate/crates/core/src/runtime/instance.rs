use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::audit::{
    AuditLog, RecordDetail, RecordKind, SpeechStatus, VerdictOutcome, DIGEST_ALGORITHM,
};
use super::objects::{self, AppliedEffect, EffectRule, EffectTrigger, EnterpriseObject};
use super::roster::{RoleBinding, Roster};
use super::speech::{AcceptTarget, Clause, Negotiation, Negotiations, SpeechAct, SpeechBody, TokenRef};
use super::{RuntimeError, SpeechRejection};
use crate::deontic::{
    check_action_admissible, create_token, delegate_burden, discharge_burden, expire_burden,
    revoke_token, Admissibility, AuditRef, DeonticToken, Exception, Holder, Membership, Party,
    Principal, Requirement, TokenSpec, TokenStore,
};
use crate::spec_lang::{format_spec, has_errors, validate_template, CommunityTemplate, Deontic, Target};
use crate::verifier::{Monitor, PropertySpec, Violation};
use crate::vocab::{AgentId, DeploymentMode, Modality, PrincipalId, RoleKind, Seq, TokenId};

/// Condition recorded when a supervised AI action is blocked.
pub const POLICY_VIOLATION: &str = "policy_violation";
/// Action of the burden created for the human an escalation is routed to.
pub const REVIEW_ACTION: &str = "review";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceConfig {
    /// Principal that issues the template's static policies.
    pub owner: Principal,
    pub mode: DeploymentMode,
    pub effects: Vec<EffectRule>,
    /// Properties monitored online; violations are appended to the trail.
    pub monitors: Vec<PropertySpec>,
}

impl InstanceConfig {
    pub fn new(owner: Principal) -> Self {
        Self {
            owner,
            mode: DeploymentMode::default(),
            effects: Vec::new(),
            monitors: Vec::new(),
        }
    }

    pub fn mode(mut self, mode: DeploymentMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn effect(mut self, rule: EffectRule) -> Self {
        self.effects.push(rule);
        self
    }

    pub fn monitor(mut self, spec: PropertySpec) -> Self {
        self.monitors.push(spec);
        self
    }
}

/// One input to a community instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    RegisterPrincipal(Principal),
    RetirePrincipal(PrincipalId),
    Bind {
        role: String,
        agent: AgentId,
        kind: RoleKind,
        principal: PrincipalId,
    },
    Unbind {
        role: String,
        agent: AgentId,
    },
    SetMode(DeploymentMode),
    Action {
        actor: AgentId,
        action: String,
        subject: Option<String>,
    },
    Speech(SpeechAct),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Applied {
    /// First record written for the event, including deadline expiries.
    pub first: Seq,
    /// Last record of the event itself, before any monitor findings.
    pub last: Seq,
    /// Verdict record and outcome, for actions and approved recommendations.
    pub verdict: Option<(Seq, VerdictOutcome)>,
    pub rejected: Option<SpeechRejection>,
    pub violations: Vec<Violation>,
}

impl Applied {
    /// The record an expectation about this event refers to.
    pub fn anchor(&self) -> Seq {
        self.verdict.map_or(self.last, |(s, _)| s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Recommendation {
    request: Seq,
    actor: AgentId,
    action: String,
    subject: Option<String>,
}

/// A running community: bindings, tokens, objects and the audit trail.
///
/// Every mutation goes through one of the event methods, which write the
/// corresponding audit records before returning. Events rejected by a
/// precondition that does not depend on token state (unknown agent, bad
/// binding) return an error and leave no trace; everything else is logged,
/// including blocked actions and rejected speech acts.
#[derive(Debug, Clone)]
pub struct CommunityInstance {
    template: Arc<CommunityTemplate>,
    owner: PrincipalId,
    roster: Roster,
    tokens: TokenStore,
    objects: BTreeMap<String, EnterpriseObject>,
    effects: Vec<EffectRule>,
    audit: AuditLog,
    mode: DeploymentMode,
    negotiations: Negotiations,
    recommendations: BTreeMap<Seq, Recommendation>,
    monitor: Option<Monitor>,
}

fn holder_of_target(t: &CommunityTemplate, target: &Target) -> Holder {
    match target {
        Target::All | Target::AllAiAgents => Holder::Group(target.as_str().to_string()),
        Target::Named(n) if t.role(n).is_some() => Holder::Role(n.clone()),
        Target::Named(n) => Holder::Group(n.clone()),
    }
}

fn static_spec(t: &CommunityTemplate, d: &Deontic) -> TokenSpec {
    TokenSpec::new(d.modality, d.action.clone(), holder_of_target(t, &d.target))
}

pub fn instantiate_community(
    template: CommunityTemplate,
    config: InstanceConfig,
) -> Result<CommunityInstance, RuntimeError> {
    let findings = validate_template(&template);
    if has_errors(&findings) {
        let msgs: Vec<String> = findings
            .iter()
            .filter(|f| f.severity == crate::spec_lang::Severity::Error)
            .map(ToString::to_string)
            .collect();
        return Err(RuntimeError::InvalidTemplate(msgs.join("; ")));
    }
    for rule in &config.effects {
        let obj = template
            .object(&rule.object)
            .ok_or_else(|| RuntimeError::UnknownObject(rule.object.clone()))?;
        if !objects::permits(obj.discipline, rule.effect) {
            return Err(RuntimeError::EffectNotPermitted {
                object: rule.object.clone(),
                effect: rule.effect,
            });
        }
    }
    for spec in &config.monitors {
        spec.check_identifiers(&template)
            .map_err(|e| RuntimeError::UnknownIdentifier(e.to_string()))?;
    }

    let template = Arc::new(template);
    let mut roster = Roster::new(Arc::clone(&template));
    roster.register(config.owner.clone())?;
    let objects = template
        .objects
        .iter()
        .map(|o| (o.name.clone(), EnterpriseObject::new(&o.name, o.discipline)))
        .collect();
    let mut inst = CommunityInstance {
        owner: config.owner.id.clone(),
        roster,
        tokens: TokenStore::new(),
        objects,
        effects: config.effects.clone(),
        audit: AuditLog::new(),
        mode: config.mode,
        negotiations: Negotiations::default(),
        recommendations: BTreeMap::new(),
        monitor: (!config.monitors.is_empty()).then(|| Monitor::new(config.monitors.clone())),
        template,
    };
    inst.audit.append(
        None,
        RecordDetail::Genesis {
            community: inst.template.name.clone(),
            digest: DIGEST_ALGORITHM.to_string(),
            mode: config.mode,
            owner: config.owner.clone(),
            template: format_spec(&inst.template),
            effects: config.effects,
            monitors: config.monitors,
        },
    );
    let issuer = Party::Principal(inst.owner.clone());
    for policy in inst.template.policies.clone() {
        let mut spec = static_spec(&inst.template, &policy.deontic);
        spec.requires = policy.requires.as_ref().map(|r| Requirement {
            action: r.action.clone(),
            holder: holder_of_target(&inst.template, &r.target),
        });
        spec.unless = policy.unless.as_ref().map(|u| Exception {
            action: u.action.clone(),
            holder: holder_of_target(&inst.template, &u.target),
        });
        let at = inst.audit.next_seq();
        let token = create_token(inst.tokens.next_id(), spec, issuer.clone(), at, &inst.roster)?;
        inst.record_new(token, None);
    }
    inst.run_monitor(0);
    Ok(inst)
}

impl CommunityInstance {
    pub fn template(&self) -> &CommunityTemplate {
        &self.template
    }

    pub fn shared_template(&self) -> Arc<CommunityTemplate> {
        Arc::clone(&self.template)
    }

    pub fn name(&self) -> &str {
        &self.template.name
    }

    pub fn owner(&self) -> &PrincipalId {
        &self.owner
    }

    pub fn roster(&self) -> &Roster {
        &self.roster
    }

    pub fn bindings(&self) -> &[RoleBinding] {
        self.roster.bindings()
    }

    pub fn tokens(&self) -> &TokenStore {
        &self.tokens
    }

    pub fn objects(&self) -> &BTreeMap<String, EnterpriseObject> {
        &self.objects
    }

    pub fn audit(&self) -> &AuditLog {
        &self.audit
    }

    pub fn mode(&self) -> DeploymentMode {
        self.mode
    }

    pub fn negotiation(&self, thread: &str) -> Option<&Negotiation> {
        self.negotiations.get(thread)
    }

    pub fn next_seq(&self) -> Seq {
        self.audit.next_seq()
    }

    pub fn apply(&mut self, event: Event) -> Result<Applied, RuntimeError> {
        match event {
            Event::RegisterPrincipal(p) => self.register_principal(p),
            Event::RetirePrincipal(p) => self.retire_principal(&p),
            Event::Bind {
                role,
                agent,
                kind,
                principal,
            } => self.bind_agent(&role, agent, kind, principal),
            Event::Unbind { role, agent } => self.unbind_agent(&role, &agent),
            Event::SetMode(m) => self.set_mode(m),
            Event::Action {
                actor,
                action,
                subject,
            } => self.submit_action(&actor, &action, subject.as_deref()),
            Event::Speech(act) => self.apply_speech_act(act),
        }
    }

    pub fn register_principal(&mut self, principal: Principal) -> Result<Applied, RuntimeError> {
        self.roster.check_register(&principal)?;
        self.logged(|inst| {
            inst.roster.register(principal.clone())?;
            inst.audit
                .append(None, RecordDetail::RegisterPrincipal { principal });
            Ok(Outcome::default())
        })
    }

    pub fn retire_principal(&mut self, principal: &PrincipalId) -> Result<Applied, RuntimeError> {
        self.roster.check_retire(principal)?;
        self.logged(|inst| {
            inst.roster.retire(principal)?;
            inst.audit.append(
                None,
                RecordDetail::RetirePrincipal {
                    principal: principal.clone(),
                },
            );
            Ok(Outcome::default())
        })
    }

    pub fn bind_agent(
        &mut self,
        role: &str,
        agent: AgentId,
        kind: RoleKind,
        principal: PrincipalId,
    ) -> Result<Applied, RuntimeError> {
        self.roster.check_bind(role, &agent, kind, &principal)?;
        self.logged(|inst| {
            let bound_at = inst.audit.next_seq();
            inst.roster.bind(RoleBinding {
                role: role.to_string(),
                agent: agent.clone(),
                agent_kind: kind,
                principal: principal.clone(),
                bound_at,
            })?;
            inst.audit.append(
                Some(agent.clone()),
                RecordDetail::Bind {
                    role: role.to_string(),
                    agent,
                    agent_kind: kind,
                    principal,
                },
            );
            Ok(Outcome::default())
        })
    }

    pub fn unbind_agent(&mut self, role: &str, agent: &AgentId) -> Result<Applied, RuntimeError> {
        self.roster.check_unbind(role, agent)?;
        self.logged(|inst| {
            inst.roster.unbind(role, agent)?;
            inst.audit.append(
                Some(agent.clone()),
                RecordDetail::Unbind {
                    role: role.to_string(),
                    agent: agent.clone(),
                },
            );
            Ok(Outcome::default())
        })
    }

    pub fn set_mode(&mut self, mode: DeploymentMode) -> Result<Applied, RuntimeError> {
        self.logged(|inst| {
            let from = inst.mode;
            inst.mode = mode;
            inst.audit
                .append(None, RecordDetail::ModeChange { from, to: mode });
            Ok(Outcome::default())
        })
    }

    pub fn submit_action(
        &mut self,
        actor: &AgentId,
        action: &str,
        subject: Option<&str>,
    ) -> Result<Applied, RuntimeError> {
        if !self.roster.is_bound(actor) {
            return Err(RuntimeError::UnknownAgent(actor.clone()));
        }
        self.logged(|inst| {
            let request = inst.audit.append(
                Some(actor.clone()),
                RecordDetail::ActionRequest {
                    action: action.to_string(),
                    subject: subject.map(str::to_string),
                },
            );
            let judged = check_action_admissible(actor, action, subject, &inst.tokens, &inst.roster)?;
            let ai = inst.roster.kind_of(actor).is_some_and(RoleKind::is_ai);
            let (seq, outcome) = match judged {
                Admissibility::Admissible { permit, exceptions }
                    if ai && inst.mode == DeploymentMode::Advisory =>
                {
                    let seq = inst.audit.next_seq();
                    inst.recommendations.insert(
                        seq,
                        Recommendation {
                            request,
                            actor: actor.clone(),
                            action: action.to_string(),
                            subject: subject.map(str::to_string),
                        },
                    );
                    inst.write_verdict(
                        actor,
                        request,
                        action,
                        subject,
                        VerdictOutcome::Recommended,
                        Admissibility::Admissible { permit, exceptions },
                        None,
                    )
                }
                judged => {
                    let outcome = if judged.is_admissible() {
                        VerdictOutcome::Admissible
                    } else {
                        VerdictOutcome::Blocked
                    };
                    inst.write_verdict(actor, request, action, subject, outcome, judged, None)
                }
            };
            if outcome == VerdictOutcome::Blocked && ai && inst.mode == DeploymentMode::Supervised {
                inst.escalate(Some(actor.clone()), POLICY_VIOLATION, seq, subject);
            }
            Ok(Outcome {
                verdict: Some((seq, outcome)),
                rejected: None,
            })
        })
    }

    pub fn apply_speech_act(&mut self, act: SpeechAct) -> Result<Applied, RuntimeError> {
        if !self.roster.is_bound(&act.sender) {
            return Err(RuntimeError::UnknownAgent(act.sender.clone()));
        }
        self.logged(|inst| Ok(inst.speech(act)))
    }

    /// Runs one logged event: expires overdue burdens, applies `body`, then
    /// lets attached monitors look at what was written.
    fn logged(
        &mut self,
        body: impl FnOnce(&mut Self) -> Result<Outcome, RuntimeError>,
    ) -> Result<Applied, RuntimeError> {
        let first = self.audit.next_seq();
        self.expire_overdue();
        let outcome = body(self)?;
        let last = self.audit.next_seq() - 1;
        let violations = self.run_monitor(first);
        Ok(Applied {
            first,
            last,
            verdict: outcome.verdict,
            rejected: outcome.rejected,
            violations,
        })
    }

    fn run_monitor(&mut self, from: Seq) -> Vec<Violation> {
        let Some(monitor) = self.monitor.as_mut() else {
            return Vec::new();
        };
        let mut found = Vec::new();
        for r in &self.audit.records()[from as usize..] {
            if r.kind != RecordKind::PropertyViolation {
                found.extend(
                    monitor
                        .observe(r)
                        .expect("monitor identifiers are checked at instantiation"),
                );
            }
        }
        for v in &found {
            self.audit.append(
                None,
                RecordDetail::PropertyViolation {
                    violation: v.clone(),
                },
            );
        }
        found
    }

    fn expire_overdue(&mut self) {
        let overdue: Vec<TokenId> = self
            .tokens
            .active(Modality::Burden)
            .filter(|t| t.deadline.is_some_and(|d| self.audit.next_seq() > d))
            .map(|t| t.id)
            .collect();
        for id in overdue {
            let at = self.audit.next_seq();
            let prev = self.tokens.get(id).expect("listed above").clone();
            if let Some(next) = expire_burden(&prev, at) {
                self.record_update(&prev, next, None);
            }
        }
    }

    fn record_new(&mut self, token: DeonticToken, actor: Option<AgentId>) {
        self.tokens.insert(token.clone());
        self.write_transitions(&token, 1, actor);
    }

    fn record_update(&mut self, prev: &DeonticToken, next: DeonticToken, actor: Option<AgentId>) {
        self.tokens.update(next.clone());
        self.write_transitions(&next, prev.history.len(), actor);
    }

    fn write_transitions(&mut self, token: &DeonticToken, known: usize, actor: Option<AgentId>) {
        let steps: Vec<_> = token
            .transitions_since(known)
            .map(|(from, e)| (from, e.state))
            .collect();
        for (from, to) in steps {
            self.audit.append(
                actor.clone(),
                RecordDetail::TokenTransition {
                    token: token.clone(),
                    from,
                    to,
                },
            );
        }
    }

    fn apply_effects(
        &mut self,
        trigger: &EffectTrigger,
        actor: &AgentId,
        what: &str,
        subject: Option<&str>,
        seq: Seq,
    ) -> Vec<AppliedEffect> {
        let mut applied = Vec::new();
        for rule in self.effects.iter().filter(|r| r.trigger == *trigger) {
            let obj = self
                .objects
                .get_mut(&rule.object)
                .expect("effect objects are checked at instantiation");
            obj.apply(
                rule.effect,
                seq,
                subject.map(str::to_string),
                objects::entry_value(actor, what),
            );
            applied.push(AppliedEffect {
                object: rule.object.clone(),
                effect: rule.effect,
                key: subject.map(str::to_string),
            });
        }
        applied
    }

    #[allow(clippy::too_many_arguments)]
    fn write_verdict(
        &mut self,
        actor: &AgentId,
        request: Seq,
        action: &str,
        subject: Option<&str>,
        outcome: VerdictOutcome,
        judged: Admissibility,
        approved_by: Option<AgentId>,
    ) -> (Seq, VerdictOutcome) {
        let seq = self.audit.next_seq();
        let (permit, exceptions, blocked_by, reason) = match judged {
            Admissibility::Admissible { permit, exceptions } => (Some(permit), exceptions, vec![], None),
            Admissibility::Blocked(r) => (None, vec![], r.governing().to_vec(), Some(r.to_string())),
        };
        let effects = if outcome == VerdictOutcome::Admissible {
            self.apply_effects(
                &EffectTrigger::Action(action.to_string()),
                actor,
                action,
                subject,
                seq,
            )
        } else {
            Vec::new()
        };
        self.audit.append(
            Some(actor.clone()),
            RecordDetail::Verdict {
                request,
                action: action.to_string(),
                subject: subject.map(str::to_string),
                outcome,
                permit,
                exceptions,
                blocked_by,
                reason,
                approved_by,
                effects,
            },
        );
        (seq, outcome)
    }

    /// Writes an escalation record and, when the contract routes the
    /// condition to a role, a review burden for that role.
    fn escalate(
        &mut self,
        actor: Option<AgentId>,
        condition: &str,
        trigger: Seq,
        subject: Option<&str>,
    ) -> Option<TokenId> {
        let role = self.template.escalation_target(condition).map(str::to_string);
        let review = role.as_ref().and_then(|r| {
            let mut spec = TokenSpec::new(Modality::Burden, REVIEW_ACTION, Holder::Role(r.clone()));
            spec.subject = subject.map(str::to_string);
            create_token(
                self.tokens.next_id(),
                spec,
                Party::Principal(self.owner.clone()),
                self.audit.next_seq() + 1,
                &self.roster,
            )
            .ok()
        });
        self.audit.append(
            actor.clone(),
            RecordDetail::Escalation {
                condition: condition.to_string(),
                role,
                trigger,
                review: review.as_ref().map(|t| t.id),
            },
        );
        let id = review.as_ref().map(|t| t.id);
        if let Some(token) = review {
            self.record_new(token, actor);
        }
        id
    }

    fn speech(&mut self, act: SpeechAct) -> Outcome {
        let seq = self.audit.next_seq();
        let kind = act.kind();
        let sender = act.sender.clone();
        let authorized = self
            .roster
            .roles_of(&sender)
            .any(|b| self.template.authorizes(&b.role, kind));
        let plan = if authorized {
            self.plan(&act, seq)
        } else {
            Err(SpeechRejection::Unauthorized {
                kind,
                sender: sender.clone(),
            })
        };
        let plan = match plan {
            Ok(p) => p,
            Err(reason) => {
                self.audit.append(
                    Some(sender),
                    RecordDetail::SpeechAct {
                        act: act.body,
                        status: SpeechStatus::Rejected {
                            reason: reason.to_string(),
                        },
                        effects: vec![],
                    },
                );
                return Outcome {
                    verdict: None,
                    rejected: Some(reason),
                };
            }
        };

        let subject = plan.subject();
        let mut effects = self.apply_effects(
            &EffectTrigger::Speech(kind),
            &sender,
            kind.as_str(),
            subject.as_deref(),
            seq,
        );
        if let Plan::Update(_, next) = &plan {
            if next.modality == Modality::Burden && next.state == crate::deontic::TokenState::Discharged {
                effects.extend(self.apply_effects(
                    &EffectTrigger::Action(next.action.clone()),
                    &sender,
                    &next.action,
                    next.subject.as_deref(),
                    seq,
                ));
            }
        }
        self.audit.append(
            Some(sender.clone()),
            RecordDetail::SpeechAct {
                act: act.body,
                status: SpeechStatus::Accepted,
                effects,
            },
        );

        let mut verdict = None;
        match plan {
            Plan::Create(token) => self.record_new(token, Some(sender)),
            Plan::Update(prev, next) => self.record_update(&prev, next, Some(sender)),
            Plan::Negotiate(thread, state) => self.negotiations.commit(thread, state),
            Plan::Escalate { condition, subject } => {
                self.escalate(Some(sender), &condition, seq, subject.as_deref());
            }
            Plan::Approve(rec_seq) => {
                let rec = self
                    .recommendations
                    .remove(&rec_seq)
                    .expect("plan checked the recommendation");
                let judged = check_action_admissible(
                    &rec.actor,
                    &rec.action,
                    rec.subject.as_deref(),
                    &self.tokens,
                    &self.roster,
                )
                .expect("plan checked the actor is bound");
                let outcome = if judged.is_admissible() {
                    VerdictOutcome::Admissible
                } else {
                    VerdictOutcome::Blocked
                };
                verdict = Some(self.write_verdict(
                    &rec.actor,
                    rec.request,
                    &rec.action,
                    rec.subject.as_deref(),
                    outcome,
                    judged,
                    Some(sender),
                ));
            }
        }
        Outcome {
            verdict,
            rejected: None,
        }
    }

    fn resolve_holder(&self, name: &str) -> Result<Holder, SpeechRejection> {
        self.roster
            .holder_named(name)
            .ok_or_else(|| SpeechRejection::Invalid(format!("holder `{name}` does not resolve")))
    }

    fn resolve_token(
        &self,
        r: &TokenRef,
        sender: &AgentId,
        must_hold: bool,
    ) -> Result<DeonticToken, SpeechRejection> {
        match r {
            TokenRef::Id(id) => self
                .tokens
                .get(*id)
                .cloned()
                .ok_or_else(|| SpeechRejection::Invalid(format!("unknown token {id}"))),
            TokenRef::Match { action, subject } => self
                .tokens
                .iter()
                .find(|t| {
                    t.is_active()
                        && t.action == *action
                        && t.subject == *subject
                        && (!must_hold || self.roster.covers(&t.holder, sender))
                })
                .cloned()
                .ok_or_else(|| {
                    SpeechRejection::Invalid(format!(
                        "no held token for `{action}`{}",
                        subject.as_ref().map(|s| format!(" on `{s}`")).unwrap_or_default()
                    ))
                }),
        }
    }

    fn declared(
        &self,
        sender: &AgentId,
        spec: TokenSpec,
        at: Seq,
    ) -> Result<Plan, SpeechRejection> {
        let token = create_token(
            self.tokens.next_id(),
            spec,
            Party::Agent(sender.clone()),
            at,
            &self.roster,
        )?;
        Ok(Plan::Create(token))
    }

    fn clause(&self, c: &Option<Clause>) -> Result<Option<(String, Holder)>, SpeechRejection> {
        c.as_ref()
            .map(|c| Ok((c.action.clone(), self.resolve_holder(&c.holder)?)))
            .transpose()
    }

    /// Works out what an authorized speech act will do, without doing it.
    fn plan(&self, act: &SpeechAct, seq: Seq) -> Result<Plan, SpeechRejection> {
        let sender = &act.sender;
        let at = seq + 1;
        match &act.body {
            SpeechBody::DeclareBurden {
                action,
                holder,
                subject,
                deadline,
            } => {
                let mut spec = TokenSpec::new(Modality::Burden, action, self.resolve_holder(holder)?);
                spec.subject = subject.clone();
                spec.deadline = *deadline;
                self.declared(sender, spec, at)
            }
            SpeechBody::DeclarePermit {
                action,
                holder,
                subject,
                requires,
            } => {
                let mut spec = TokenSpec::new(Modality::Permit, action, self.resolve_holder(holder)?);
                spec.subject = subject.clone();
                spec.requires = self
                    .clause(requires)?
                    .map(|(action, holder)| Requirement { action, holder });
                self.declared(sender, spec, at)
            }
            SpeechBody::DeclareEmbargo {
                action,
                holder,
                subject,
                unless,
            } => {
                let mut spec = TokenSpec::new(Modality::Embargo, action, self.resolve_holder(holder)?);
                spec.subject = subject.clone();
                spec.unless = self
                    .clause(unless)?
                    .map(|(action, holder)| Exception { action, holder });
                self.declared(sender, spec, at)
            }
            SpeechBody::Grant {
                action,
                holder,
                subject,
            } => {
                let names_exception = self.tokens.active(Modality::Embargo).any(|e| {
                    e.unless.as_ref().is_some_and(|u| u.action == *action)
                });
                if !names_exception {
                    return Err(SpeechRejection::Invalid(format!(
                        "no held embargo names `{action}` as its exception"
                    )));
                }
                let mut spec = TokenSpec::new(Modality::Permit, action, self.resolve_holder(holder)?);
                spec.subject = subject.clone();
                self.declared(sender, spec, at)
            }
            SpeechBody::Transfer { token, to } => {
                let prev = self.resolve_token(token, sender, true)?;
                let next = delegate_burden(&prev, sender, to, at, &self.roster)?;
                Ok(Plan::Update(prev, next))
            }
            SpeechBody::Discharge { token, evidence } => {
                let prev = self.resolve_token(token, sender, true)?;
                let evidence = AuditRef(evidence.unwrap_or(seq));
                let next = discharge_burden(&prev, sender, evidence, at, &self.roster)?;
                Ok(Plan::Update(prev, next))
            }
            SpeechBody::Revoke { token } => {
                let prev = self.resolve_token(token, sender, false)?;
                let next = revoke_token(&prev, &Party::Agent(sender.clone()), at, &self.roster)?;
                Ok(Plan::Update(prev, next))
            }
            SpeechBody::Accept {
                target: AcceptTarget::Recommendation(v),
            } => {
                let rec = self.recommendations.get(v).ok_or_else(|| {
                    SpeechRejection::ProtocolViolation(format!("no pending recommendation at seq {v}"))
                })?;
                if self.roster.kind_of(sender) != Some(RoleKind::Human) {
                    return Err(SpeechRejection::ProtocolViolation(
                        "recommendations are approved by human agents only".into(),
                    ));
                }
                if !self.roster.is_bound(&rec.actor) {
                    return Err(SpeechRejection::Invalid(format!(
                        "recommending agent `{}` is no longer bound",
                        rec.actor
                    )));
                }
                Ok(Plan::Approve(*v))
            }
            body @ (SpeechBody::Propose { .. }
            | SpeechBody::Accept { .. }
            | SpeechBody::Reject { .. }
            | SpeechBody::CounterPropose { .. }) => {
                let (thread, state) = self
                    .negotiations
                    .step(sender, body)
                    .map_err(SpeechRejection::ProtocolViolation)?;
                Ok(Plan::Negotiate(thread, state))
            }
            SpeechBody::Escalate { condition, subject } => {
                if self.template.escalation_target(condition).is_none() {
                    return Err(SpeechRejection::Invalid(format!(
                        "no escalation rule for `{condition}`"
                    )));
                }
                Ok(Plan::Escalate {
                    condition: condition.clone(),
                    subject: subject.clone(),
                })
            }
        }
    }
}

#[derive(Debug, Default)]
struct Outcome {
    verdict: Option<(Seq, VerdictOutcome)>,
    rejected: Option<SpeechRejection>,
}

enum Plan {
    Create(DeonticToken),
    Update(DeonticToken, DeonticToken),
    Negotiate(String, Negotiation),
    Escalate {
        condition: String,
        subject: Option<String>,
    },
    Approve(Seq),
}

impl Plan {
    /// Key under which speech-triggered effects are stored.
    fn subject(&self) -> Option<String> {
        match self {
            Plan::Create(t) | Plan::Update(_, t) => t.subject.clone(),
            Plan::Negotiate(thread, _) => Some(thread.clone()),
            Plan::Escalate { subject, .. } => subject.clone(),
            Plan::Approve(_) => None,
        }
    }
}
