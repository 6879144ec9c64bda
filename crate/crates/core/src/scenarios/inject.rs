use std::collections::BTreeMap;

use super::script::{Expectation, Step, StepEvent};
use super::{run_scenario, Scenario, ScenarioError};
use crate::runtime::{Event, SpeechAct, SpeechBody, TokenRef, VerdictOutcome};
use crate::spec_lang::{ContractClause, ContractDecl, Pos};
use crate::verifier::{PropertyKind, PropertySpec};
use crate::vocab::{AgentId, Modality, PrincipalId, RoleKind, SpeechActKind};

/// Label given to the step an injected violation is expected at.
pub const INJECTED: &str = "injected";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InjectError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("scenario `{0}` does not run clean: {1}")]
    NotClean(String, String),
    #[error("cannot inject a {kind} violation: {reason}")]
    CannotInject { kind: PropertyKind, reason: String },
}

/// Rewrites a clean scenario so that it violates exactly one property
/// kind.
///
/// The result expects a violation of `kind` at the injected step and
/// tolerates further violations of the same kind; any other kind is a
/// mismatch. Verdict expectations of the original are dropped, since the
/// mutation changes what the later steps see.
///
/// - safety: the guard requirement is removed from the template and an
///   access is inserted before the guard burden is discharged.
/// - authority: the decision burden is handed to an AI agent, which then
///   discharges it.
/// - prohibition: an agent of the owning principal revokes the static
///   embargo right after the last binding.
/// - accountability: the principal behind the last admissible action is
///   retired just before it.
pub fn inject_violation(s: &Scenario, kind: PropertyKind) -> Result<Scenario, InjectError> {
    let clean = run_scenario(s)?;
    if !clean.passed() {
        return Err(InjectError::NotClean(s.name.clone(), clean.mismatches.join("; ")));
    }
    if let Some(v) = clean.violations().next() {
        return Err(InjectError::NotClean(s.name.clone(), v.to_string()));
    }
    let cannot = |reason: String| InjectError::CannotInject { kind, reason };

    let block = s
        .script
        .blocks
        .iter()
        .position(|b| b.checks.iter().any(|c| c.kind() == kind))
        .ok_or_else(|| cannot(format!("no block checks {kind}")))?;
    let spec = s.script.blocks[block]
        .checks
        .iter()
        .find(|c| c.kind() == kind)
        .cloned()
        .expect("found above");
    let community = s.script.blocks[block].community.clone();

    let mut m = s.clone();
    m.name = format!("{}+{kind}", s.name);
    m.script.expectations.clear();
    m.script.exact_violations = false;
    let steps = &s.script.steps;
    let in_block = |i: &usize| steps[*i].block == block;
    let bindings = bindings_before(steps, block, steps.len());

    let anchor = match &spec {
        PropertySpec::ConsentGatedAccess {
            guarded_action,
            guard_burden,
        } => {
            let (at, subject) = (0..steps.len())
                .filter(in_block)
                .find_map(|i| match discharged(&steps[i]) {
                    Some((TokenRef::Match { action, subject }, _)) if action == guard_burden => {
                        Some((i, subject.clone()))
                    }
                    _ => None,
                })
                .ok_or_else(|| cannot(format!("`{guard_burden}` is never discharged")))?;
            let actor = (0..steps.len())
                .filter(in_block)
                .find_map(|i| match &steps[i].event {
                    StepEvent::Event(Event::Action { actor, action, .. }) if action == guarded_action => {
                        Some(actor.clone())
                    }
                    _ => None,
                })
                .ok_or_else(|| cannot(format!("nobody performs `{guarded_action}`")))?;
            let t = m
                .templates
                .iter_mut()
                .find(|t| t.name == community)
                .expect("checked by run");
            for p in &mut t.policies {
                if p.deontic.modality == Modality::Permit && p.deontic.action == *guarded_action {
                    p.requires = None;
                }
            }
            let step = Step {
                block,
                label: None,
                event: StepEvent::Event(Event::Action {
                    actor,
                    action: guarded_action.clone(),
                    subject,
                }),
                line: steps[at].line,
            };
            m.script.steps.insert(at, step);
            at
        }
        PropertySpec::ExclusiveAuthority { decision_action, .. } => {
            let (at, token, holder) = (0..steps.len())
                .filter(in_block)
                .filter_map(|i| match discharged(&steps[i]) {
                    Some((t @ TokenRef::Match { action, .. }, sender)) if action == decision_action => {
                        Some((i, t.clone(), sender.clone()))
                    }
                    _ => None,
                })
                .next_back()
                .ok_or_else(|| cannot(format!("`{decision_action}` is never discharged")))?;
            let t = s.template(&community).expect("checked by run");
            let can = |agent: &AgentId, k: SpeechActKind| {
                bindings
                    .get(agent)
                    .is_some_and(|(roles, _, _)| roles.iter().any(|r| t.authorizes(r, k)))
            };
            if !can(&holder, SpeechActKind::Transfer) {
                return Err(cannot(format!("`{holder}` may not transfer")));
            }
            let ai = bindings_before(steps, block, at)
                .into_iter()
                .find(|(a, (_, k, _))| k.is_ai() && can(a, SpeechActKind::Discharge))
                .map(|(a, _)| a)
                .ok_or_else(|| cannot("no AI agent may discharge".into()))?;
            let line = steps[at].line;
            let transfer = Step {
                block,
                label: None,
                event: StepEvent::Event(Event::Speech(SpeechAct::new(
                    holder,
                    SpeechBody::Transfer {
                        token: token.clone(),
                        to: ai.clone(),
                    },
                ))),
                line,
            };
            if let StepEvent::Event(Event::Speech(act)) = &mut m.script.steps[at].event {
                act.sender = ai;
            }
            m.script.steps.insert(at, transfer);
            at + 1
        }
        PropertySpec::EmbargoHolds { action, .. } => {
            let t = m
                .templates
                .iter_mut()
                .find(|t| t.name == community)
                .expect("checked by run");
            if !t.policies.iter().any(|p| {
                p.deontic.modality == Modality::Embargo && p.deontic.action == *action
            }) {
                return Err(cannot(format!("no static embargo on `{action}`")));
            }
            let owner = s.script.blocks[block].owner.as_ref().expect("checked").id.clone();
            let last_bind = (0..steps.len())
                .filter(in_block).rfind(|i| matches!(steps[*i].event, StepEvent::Event(Event::Bind { .. })))
                .ok_or_else(|| cannot("no bindings".into()))?;
            let (agent, role) = (0..=last_bind)
                .filter(in_block)
                .find_map(|i| match &steps[i].event {
                    StepEvent::Event(Event::Bind {
                        role,
                        agent,
                        kind: RoleKind::Human,
                        principal,
                    }) if *principal == owner => Some((agent.clone(), role.clone())),
                    _ => None,
                })
                .ok_or_else(|| cannot(format!("no human acts for `{owner}`")))?;
            if !t.authorizes(&role, SpeechActKind::Revoke) {
                let allow = ContractClause::Allow {
                    role: role.clone(),
                    kinds: vec![SpeechActKind::Revoke],
                    pos: Pos::default(),
                };
                match t.contracts.iter_mut().find(|c| c.participants().contains(&role.as_str())) {
                    Some(c) => c.clauses.push(allow),
                    None => t.contracts.push(ContractDecl {
                        name: "InjectedRevocation".into(),
                        clauses: vec![allow],
                        pos: Pos::default(),
                    }),
                }
            }
            let step = Step {
                block,
                label: None,
                event: StepEvent::Event(Event::Speech(SpeechAct::new(
                    agent,
                    SpeechBody::Revoke {
                        token: TokenRef::Match {
                            action: action.clone(),
                            subject: None,
                        },
                    },
                ))),
                line: steps[last_bind].line,
            };
            m.script.steps.insert(last_bind + 1, step);
            last_bind + 1
        }
        PropertySpec::PrincipalTraceability => {
            let owner = s.script.blocks[block].owner.as_ref().expect("checked").id.clone();
            let (at, principal) = (0..steps.len())
                .filter(in_block)
                .filter_map(|i| {
                    let admissible = matches!(
                        &clean.steps[i],
                        Some(Ok(a)) if matches!(a.verdict, Some((_, VerdictOutcome::Admissible)))
                    );
                    let StepEvent::Event(Event::Action { actor, .. }) = &steps[i].event else {
                        return None;
                    };
                    let (_, _, p) = bindings_before(steps, block, i).remove(actor)?;
                    (admissible && p != owner).then_some((i, p))
                })
                .next_back()
                .ok_or_else(|| cannot("no admissible action by a non-owning principal".into()))?;
            let rebinds = steps[at..].iter().any(|st| {
                st.block == block
                    && matches!(&st.event, StepEvent::Event(Event::Bind { principal: p, .. }) if *p == principal)
            });
            if rebinds {
                return Err(cannot(format!("`{principal}` is bound again later")));
            }
            let step = Step {
                block,
                label: None,
                event: StepEvent::Event(Event::RetirePrincipal(principal)),
                line: steps[at].line,
            };
            m.script.steps.insert(at, step);
            at + 1
        }
    };

    let anchored = &mut m.script.steps[anchor];
    let label = anchored.label.get_or_insert_with(|| INJECTED.to_string()).clone();
    m.script.expectations.push(Expectation::Violation {
        kind,
        label,
        line: anchored.line,
    });
    m.check().map_err(|e| cannot(e.to_string()))?;
    Ok(m)
}

fn discharged(step: &Step) -> Option<(&TokenRef, &AgentId)> {
    match &step.event {
        StepEvent::Event(Event::Speech(SpeechAct {
            sender,
            body: SpeechBody::Discharge { token, .. },
        })) => Some((token, sender)),
        _ => None,
    }
}

/// Agents bound in `block` by the steps before `end`: roles, kind and
/// principal.
fn bindings_before(
    steps: &[Step],
    block: usize,
    end: usize,
) -> BTreeMap<AgentId, (Vec<String>, RoleKind, PrincipalId)> {
    let mut out: BTreeMap<AgentId, (Vec<String>, RoleKind, PrincipalId)> = BTreeMap::new();
    for st in steps[..end].iter().filter(|st| st.block == block) {
        match &st.event {
            StepEvent::Event(Event::Bind {
                role,
                agent,
                kind,
                principal,
            }) => {
                out.entry(agent.clone())
                    .or_insert_with(|| (Vec::new(), *kind, principal.clone()))
                    .0
                    .push(role.clone());
            }
            StepEvent::Event(Event::Unbind { role, agent }) => {
                if let Some(e) = out.get_mut(agent) {
                    e.0.retain(|r| r != role);
                    if e.0.is_empty() {
                        out.remove(agent);
                    }
                }
            }
            _ => {}
        }
    }
    out
}
