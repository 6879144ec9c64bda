//! Whether an agent may perform an action right now.
//!
//! Default deny: an action needs a held permit that applies to the actor and
//! subject, with its requirement (if any) discharged. Any applicable held
//! embargo blocks the action unless its exception permit is held for the
//! same subject.

use serde::{Deserialize, Serialize};

use super::store::TokenStore;
use super::token::Holder;
use super::{DeonticError, Membership};
use crate::vocab::{AgentId, Modality, TokenId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Admissibility {
    Admissible {
        /// Lowest-id permit that justifies the action.
        permit: TokenId,
        /// Exception permits that lifted applicable embargoes.
        exceptions: Vec<TokenId>,
    },
    Blocked(BlockReason),
}

impl Admissibility {
    pub fn is_admissible(&self) -> bool {
        matches!(self, Admissibility::Admissible { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum BlockReason {
    Embargoed { embargoes: Vec<TokenId> },
    /// Matching permits exist but their required burden is not discharged.
    RequirementUnmet { permits: Vec<TokenId> },
    NoPermit,
}

impl BlockReason {
    /// Token ids that governed the decision.
    pub fn governing(&self) -> &[TokenId] {
        match self {
            BlockReason::Embargoed { embargoes } => embargoes,
            BlockReason::RequirementUnmet { permits } => permits,
            BlockReason::NoPermit => &[],
        }
    }
}

impl std::fmt::Display for BlockReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let ids = |ids: &[TokenId]| {
            ids.iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(", ")
        };
        match self {
            BlockReason::Embargoed { embargoes } => write!(f, "embargoed by {}", ids(embargoes)),
            BlockReason::RequirementUnmet { permits } => {
                write!(f, "requirement of {} not discharged", ids(permits))
            }
            BlockReason::NoPermit => f.write_str("no permit"),
        }
    }
}

/// Whether a permit held by `held` satisfies an exception naming `wanted`.
fn holder_satisfies(ctx: &impl Membership, wanted: &Holder, held: &Holder) -> bool {
    wanted == held || matches!(held, Holder::Agent(a) if ctx.covers(wanted, a))
}

pub fn check_action_admissible(
    actor: &AgentId,
    action: &str,
    subject: Option<&str>,
    tokens: &TokenStore,
    ctx: &impl Membership,
) -> Result<Admissibility, DeonticError> {
    if !ctx.is_bound(actor) {
        return Err(DeonticError::UnknownAgent(actor.clone()));
    }

    let mut blocking = Vec::new();
    let mut exceptions = Vec::new();
    for e in tokens.active(Modality::Embargo).filter(|e| {
        e.action == action && e.covers_subject(subject) && ctx.covers(&e.holder, actor)
    }) {
        let lifted_by = e.unless.as_ref().and_then(|exc| {
            tokens
                .active(Modality::Permit)
                .find(|p| {
                    p.action == exc.action
                        && p.covers_subject(subject)
                        && holder_satisfies(ctx, &exc.holder, &p.holder)
                })
                .map(|p| p.id)
        });
        match lifted_by {
            Some(p) => {
                if !exceptions.contains(&p) {
                    exceptions.push(p);
                }
            }
            None => blocking.push(e.id),
        }
    }
    if !blocking.is_empty() {
        return Ok(Admissibility::Blocked(BlockReason::Embargoed {
            embargoes: blocking,
        }));
    }

    let mut unmet = Vec::new();
    for p in tokens.active(Modality::Permit).filter(|p| {
        p.action == action && p.covers_subject(subject) && ctx.covers(&p.holder, actor)
    }) {
        let satisfied = p
            .requires
            .as_ref()
            .is_none_or(|req| tokens.discharged(&req.action, subject));
        if satisfied {
            return Ok(Admissibility::Admissible {
                permit: p.id,
                exceptions,
            });
        }
        unmet.push(p.id);
    }
    if unmet.is_empty() {
        Ok(Admissibility::Blocked(BlockReason::NoPermit))
    } else {
        Ok(Admissibility::Blocked(BlockReason::RequirementUnmet {
            permits: unmet,
        }))
    }
}
