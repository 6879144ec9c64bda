use std::collections::BTreeSet;

use super::trace::TraceState;
use super::{PropertySpec, Violation, VerifyError};
use crate::deontic::{DeonticToken, Holder, TokenState};
use crate::runtime::{AuditRecord, RecordDetail, RecordKind, VerdictOutcome};
use crate::vocab::{AgentId, Modality, Seq, TokenId};

/// Incremental checker for a fixed set of properties.
///
/// Feed it records in trail order; each call returns the violations that
/// became observable at that record. Records of kind `property_violation`
/// are ignored so a monitor can read a trail it has written into.
#[derive(Debug, Clone)]
pub struct Monitor {
    specs: Vec<PropertySpec>,
    state: TraceState,
    /// Per spec: whether an embargo gap is currently open.
    gap_open: Vec<bool>,
    reported: BTreeSet<(usize, Seq)>,
    seen_genesis: bool,
}

struct Executed<'a> {
    seq: Seq,
    request: Seq,
    actor: &'a AgentId,
    action: &'a str,
    subject: Option<&'a str>,
    permit: Option<TokenId>,
}

impl Monitor {
    pub fn new(specs: Vec<PropertySpec>) -> Self {
        let n = specs.len();
        Self {
            specs,
            state: TraceState::default(),
            gap_open: vec![false; n],
            reported: BTreeSet::new(),
            seen_genesis: false,
        }
    }

    pub fn specs(&self) -> &[PropertySpec] {
        &self.specs
    }

    pub fn observe(&mut self, r: &AuditRecord) -> Result<Vec<Violation>, VerifyError> {
        if r.kind == RecordKind::PropertyViolation {
            return Ok(Vec::new());
        }
        self.state.apply(r)?;
        if r.kind == RecordKind::Genesis {
            let t = self.state.template.as_ref().expect("set by genesis");
            for spec in &self.specs {
                spec.check_identifiers(t)?;
            }
            self.seen_genesis = true;
        }
        if !self.seen_genesis {
            return Err(VerifyError::MissingGenesis);
        }

        let mut out = Vec::new();
        for i in 0..self.specs.len() {
            if let Some(v) = self.check(i, r) {
                if self.reported.insert((i, v.at_seq)) {
                    out.push(v);
                }
            }
        }
        Ok(out)
    }

    fn check(&mut self, i: usize, r: &AuditRecord) -> Option<Violation> {
        let spec = self.specs[i].clone();
        let executed = match &r.detail {
            RecordDetail::Verdict {
                request,
                action,
                subject,
                outcome: VerdictOutcome::Admissible,
                permit,
                ..
            } => r.actor.as_ref().map(|actor| Executed {
                seq: r.seq,
                request: *request,
                actor,
                action,
                subject: subject.as_deref(),
                permit: *permit,
            }),
            _ => None,
        };
        let violation = |note: String, records: Vec<Seq>, tokens: Vec<TokenId>| Violation {
            property: spec.clone(),
            at_seq: r.seq,
            witness_records: records,
            witness_tokens: tokens,
            note,
        };
        match &spec {
            PropertySpec::ConsentGatedAccess {
                guarded_action,
                guard_burden,
            } => {
                let e = executed.filter(|e| e.action == guarded_action)?;
                let guarded = self.state.tokens.values().any(|t| {
                    t.modality == Modality::Burden
                        && t.action == *guard_burden
                        && t.state == TokenState::Discharged
                        && t.subject.as_deref() == e.subject
                        && t.discharge.as_ref().is_some_and(|d| d.at < e.seq)
                });
                (!guarded).then(|| {
                    violation(
                        format!(
                            "`{}` executed {} by `{}` without discharged `{guard_burden}`",
                            e.action,
                            e.subject.map(|s| format!("on `{s}`")).unwrap_or_default(),
                            e.actor
                        ),
                        vec![e.request, e.seq],
                        e.permit.into_iter().collect(),
                    )
                })
            }
            PropertySpec::ExclusiveAuthority {
                decision_action,
                authorized_role,
            } => {
                if let Some(e) = executed.filter(|e| e.action == decision_action) {
                    return Some(violation(
                        format!("`{}` executed as a plain action by `{}`", e.action, e.actor),
                        vec![e.request, e.seq],
                        e.permit.into_iter().collect(),
                    ));
                }
                let RecordDetail::TokenTransition {
                    token,
                    to: TokenState::Discharged,
                    ..
                } = &r.detail
                else {
                    return None;
                };
                if token.modality != Modality::Burden || token.action != *decision_action {
                    return None;
                }
                let by = &token.discharge.as_ref()?.by;
                let authorized = self
                    .state
                    .covers(&Holder::Role(authorized_role.clone()), by);
                (!authorized).then(|| {
                    violation(
                        format!("`{decision_action}` discharged by `{by}`, not a `{authorized_role}`"),
                        vec![r.seq],
                        vec![token.id],
                    )
                })
            }
            PropertySpec::EmbargoHolds { action, group } => {
                let open = self.uncovered_member(action, group);
                let rising = open.is_some() && !self.gap_open[i];
                self.gap_open[i] = open.is_some();
                if rising {
                    let b = open.expect("rising edge implies a member");
                    let lapsed: Vec<TokenId> = self
                        .state
                        .tokens
                        .values()
                        .filter(|t| t.modality == Modality::Embargo && t.action == *action && !t.is_active())
                        .map(|t| t.id)
                        .collect();
                    let mut records = vec![b.1];
                    if b.1 != r.seq {
                        records.push(r.seq);
                    }
                    return Some(violation(
                        format!("`{}` in `{group}` is bound while no embargo on `{action}` covers it", b.0),
                        records,
                        lapsed,
                    ));
                }
                let e = executed.filter(|e| e.action == action)?;
                if !self.state.in_group(group, e.actor) {
                    return None;
                }
                let embargoes: Vec<&DeonticToken> = self
                    .state
                    .held(Modality::Embargo)
                    .filter(|t| {
                        t.action == *action
                            && t.covers_subject(e.subject)
                            && self.state.covers(&t.holder, e.actor)
                    })
                    .collect();
                let lifted = !embargoes.is_empty()
                    && embargoes.iter().all(|t| self.lifted(t, e.subject));
                (!lifted).then(|| {
                    violation(
                        format!("`{}` in `{group}` executed embargoed `{action}`", e.actor),
                        vec![e.request, e.seq],
                        e.permit.into_iter().collect(),
                    )
                })
            }
            PropertySpec::PrincipalTraceability => {
                if let RecordDetail::TokenTransition { token, .. } = &r.detail {
                    if let Err(err) = token.chain.check() {
                        return Some(violation(
                            format!("token {} has a malformed chain: {err}", token.id),
                            vec![r.seq],
                            vec![token.id],
                        ));
                    }
                    return None;
                }
                let e = executed?;
                let b = self.state.binding_of(e.actor)?;
                if !self.state.principals.contains(&b.principal) {
                    return Some(violation(
                        format!(
                            "`{}` acts for `{}`, which is not a registered principal",
                            e.actor, b.principal
                        ),
                        vec![b.seq, e.seq],
                        e.permit.into_iter().collect(),
                    ));
                }
                let permit = self.state.tokens.get(&e.permit?)?;
                let traced = permit
                    .chain
                    .check()
                    .ok()
                    .and_then(|_| permit.chain.principal().ok())
                    .is_some_and(|p| self.state.principals.contains(p));
                (!traced).then(|| {
                    violation(
                        format!("permit {} does not trace to a registered principal", permit.id),
                        vec![e.request, e.seq],
                        vec![permit.id],
                    )
                })
            }
        }
    }

    /// A bound group member not covered by any held, unscoped embargo on
    /// `action`, with the seq of its binding record.
    fn uncovered_member(&self, action: &str, group: &str) -> Option<(AgentId, Seq)> {
        self.state
            .bindings
            .iter()
            .filter(|b| self.state.member_of(group, b))
            .find(|b| {
                !self.state.held(Modality::Embargo).any(|t| {
                    t.action == action && t.subject.is_none() && self.state.covers(&t.holder, &b.agent)
                })
            })
            .map(|b| (b.agent.clone(), b.seq))
    }

    fn lifted(&self, embargo: &DeonticToken, subject: Option<&str>) -> bool {
        let Some(exc) = &embargo.unless else {
            return false;
        };
        self.state.held(Modality::Permit).any(|p| {
            p.action == exc.action
                && p.covers_subject(subject)
                && (p.holder == exc.holder
                    || matches!(&p.holder, Holder::Agent(a) if self.state.covers(&exc.holder, a)))
        })
    }
}
