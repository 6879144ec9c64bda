//! Rebuilding an instance from its exported trail.
//!
//! Only input records are re-executed (bindings, mode changes, action
//! requests, speech acts); everything else they caused is regenerated and
//! must come out byte-identical, hash for hash.

use super::audit::{verify_chain, AuditTrail, IntegrityError, RecordDetail};
use super::instance::{instantiate_community, CommunityInstance, Event, InstanceConfig};
use super::speech::SpeechAct;
use super::RuntimeError;
use crate::spec_lang::{parse_spec, ParseError};
use crate::vocab::Seq;

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error(transparent)]
    Integrity(#[from] IntegrityError),
    #[error("trail has no genesis record")]
    MissingGenesis,
    #[error("template in genesis does not parse: {0}")]
    Template(#[from] ParseError),
    #[error("re-executing seq {seq} failed: {source}")]
    Execution { seq: Seq, source: RuntimeError },
    #[error("replay diverges at seq {0}")]
    Diverged(Seq),
}

pub fn replay_trail(trail: &AuditTrail) -> Result<CommunityInstance, ReplayError> {
    verify_chain(&trail.community, &trail.records)?;
    let Some(RecordDetail::Genesis {
        template,
        mode,
        owner,
        effects,
        monitors,
        ..
    }) = trail.genesis().map(|r| &r.detail)
    else {
        return Err(ReplayError::MissingGenesis);
    };
    let config = InstanceConfig {
        owner: owner.clone(),
        mode: *mode,
        effects: effects.clone(),
        monitors: monitors.clone(),
    };
    let mut inst = instantiate_community(parse_spec(template)?, config)
        .map_err(|source| ReplayError::Execution { seq: 0, source })?;

    let mut checked = 0usize;
    let check_upto = |inst: &CommunityInstance, checked: &mut usize| -> Result<(), ReplayError> {
        let ours = inst.audit().records();
        let upto = ours.len().min(trail.records.len());
        for i in *checked..upto {
            if ours[i] != trail.records[i] {
                return Err(ReplayError::Diverged(i as Seq));
            }
        }
        *checked = upto;
        if ours.len() > trail.records.len() {
            return Err(ReplayError::Diverged(trail.records.len() as Seq));
        }
        Ok(())
    };
    check_upto(&inst, &mut checked)?;

    for r in &trail.records {
        if (r.seq as usize) < checked {
            continue;
        }
        let event = match (&r.detail, &r.actor) {
            (RecordDetail::RegisterPrincipal { principal }, _) => {
                Event::RegisterPrincipal(principal.clone())
            }
            (RecordDetail::RetirePrincipal { principal }, _) => {
                Event::RetirePrincipal(principal.clone())
            }
            (
                RecordDetail::Bind {
                    role,
                    agent,
                    agent_kind,
                    principal,
                },
                _,
            ) => Event::Bind {
                role: role.clone(),
                agent: agent.clone(),
                kind: *agent_kind,
                principal: principal.clone(),
            },
            (RecordDetail::Unbind { role, agent }, _) => Event::Unbind {
                role: role.clone(),
                agent: agent.clone(),
            },
            (RecordDetail::ModeChange { to, .. }, _) => Event::SetMode(*to),
            (RecordDetail::ActionRequest { action, subject }, Some(actor)) => Event::Action {
                actor: actor.clone(),
                action: action.clone(),
                subject: subject.clone(),
            },
            (RecordDetail::SpeechAct { act, .. }, Some(sender)) => Event::Speech(SpeechAct {
                sender: sender.clone(),
                body: act.clone(),
            }),
            (RecordDetail::ActionRequest { .. } | RecordDetail::SpeechAct { .. }, None) => {
                return Err(ReplayError::Diverged(r.seq))
            }
            // derived records (expiries ahead of an input) come back with it
            _ => continue,
        };
        inst.apply(event)
            .map_err(|source| ReplayError::Execution { seq: r.seq, source })?;
        check_upto(&inst, &mut checked)?;
    }
    if checked != trail.records.len() {
        return Err(ReplayError::Diverged(checked as Seq));
    }
    Ok(inst)
}
