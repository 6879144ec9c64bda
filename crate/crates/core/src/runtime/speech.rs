//! Speech-act payloads and the negotiation protocol automaton.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::vocab::{AgentId, Seq, SpeechActKind, TokenId};

/// Names an existing token, either directly or by what it is about.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenRef {
    Id(TokenId),
    /// Lowest-id HELD token for `action` with exactly this subject whose
    /// holder covers the sender.
    Match {
        action: String,
        subject: Option<String>,
    },
}

/// A `requires` or `unless` clause attached to a declared token.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Clause {
    pub action: String,
    pub holder: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcceptTarget {
    Thread(String),
    /// The verdict record of an advisory-mode recommendation.
    Recommendation(Seq),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpeechBody {
    DeclareBurden {
        action: String,
        holder: String,
        subject: Option<String>,
        deadline: Option<Seq>,
    },
    DeclarePermit {
        action: String,
        holder: String,
        subject: Option<String>,
        requires: Option<Clause>,
    },
    DeclareEmbargo {
        action: String,
        holder: String,
        subject: Option<String>,
        unless: Option<Clause>,
    },
    Transfer {
        token: TokenRef,
        to: AgentId,
    },
    Discharge {
        token: TokenRef,
        /// Record cited as proof; defaults to the discharge's own speech act.
        evidence: Option<Seq>,
    },
    /// Issues the exception permit named by some embargo's `unless`.
    Grant {
        action: String,
        holder: String,
        subject: Option<String>,
    },
    Revoke {
        token: TokenRef,
    },
    Propose {
        thread: String,
        body: String,
    },
    Accept {
        target: AcceptTarget,
    },
    Reject {
        thread: String,
        reason: Option<String>,
    },
    CounterPropose {
        thread: String,
        body: String,
    },
    Escalate {
        condition: String,
        subject: Option<String>,
    },
}

impl SpeechBody {
    pub fn kind(&self) -> SpeechActKind {
        match self {
            SpeechBody::DeclareBurden { .. } => SpeechActKind::DeclareBurden,
            SpeechBody::DeclarePermit { .. } => SpeechActKind::DeclarePermit,
            SpeechBody::DeclareEmbargo { .. } => SpeechActKind::DeclareEmbargo,
            SpeechBody::Transfer { .. } => SpeechActKind::Transfer,
            SpeechBody::Discharge { .. } => SpeechActKind::Discharge,
            SpeechBody::Grant { .. } => SpeechActKind::Grant,
            SpeechBody::Revoke { .. } => SpeechActKind::Revoke,
            SpeechBody::Propose { .. } => SpeechActKind::Propose,
            SpeechBody::Accept { .. } => SpeechActKind::Accept,
            SpeechBody::Reject { .. } => SpeechActKind::Reject,
            SpeechBody::CounterPropose { .. } => SpeechActKind::CounterPropose,
            SpeechBody::Escalate { .. } => SpeechActKind::Escalate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpeechAct {
    pub sender: AgentId,
    pub body: SpeechBody,
}

impl SpeechAct {
    pub fn new(sender: impl Into<AgentId>, body: SpeechBody) -> Self {
        Self {
            sender: sender.into(),
            body,
        }
    }

    pub fn kind(&self) -> SpeechActKind {
        self.body.kind()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum Negotiation {
    Pending { proposer: AgentId, body: String },
    Accepted { body: String, by: AgentId },
    Rejected { by: AgentId },
}

/// Open and concluded negotiation threads.
///
/// `propose` opens a thread; `accept`, `reject` and `counter_propose` answer
/// the pending proposal and must come from someone other than its proposer.
/// A counter-proposal becomes the new pending proposal. Concluded threads
/// accept no further moves.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Negotiations {
    threads: BTreeMap<String, Negotiation>,
}

impl Negotiations {
    pub fn get(&self, thread: &str) -> Option<&Negotiation> {
        self.threads.get(thread)
    }

    /// The state `thread` moves to, or why the move is not allowed.
    pub fn step(&self, sender: &AgentId, body: &SpeechBody) -> Result<(String, Negotiation), String> {
        let answer = |thread: &str| -> Result<&String, String> {
            match self.threads.get(thread) {
                Some(Negotiation::Pending { proposer, body }) => {
                    if proposer == sender {
                        Err(format!("`{sender}` cannot answer its own proposal in `{thread}`"))
                    } else {
                        Ok(body)
                    }
                }
                Some(_) => Err(format!("thread `{thread}` is already concluded")),
                None => Err(format!("no pending proposal in `{thread}`")),
            }
        };
        match body {
            SpeechBody::Propose { thread, body } => {
                if self.threads.contains_key(thread) {
                    return Err(format!("thread `{thread}` already exists"));
                }
                Ok((
                    thread.clone(),
                    Negotiation::Pending {
                        proposer: sender.clone(),
                        body: body.clone(),
                    },
                ))
            }
            SpeechBody::CounterPropose { thread, body } => {
                answer(thread)?;
                Ok((
                    thread.clone(),
                    Negotiation::Pending {
                        proposer: sender.clone(),
                        body: body.clone(),
                    },
                ))
            }
            SpeechBody::Accept {
                target: AcceptTarget::Thread(thread),
            } => {
                let body = answer(thread)?;
                Ok((
                    thread.clone(),
                    Negotiation::Accepted {
                        body: body.clone(),
                        by: sender.clone(),
                    },
                ))
            }
            SpeechBody::Reject { thread, .. } => {
                answer(thread)?;
                Ok((
                    thread.clone(),
                    Negotiation::Rejected { by: sender.clone() },
                ))
            }
            other => Err(format!("`{}` is not a negotiation move", other.kind())),
        }
    }

    pub fn commit(&mut self, thread: String, state: Negotiation) {
        self.threads.insert(thread, state);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn propose(t: &str) -> SpeechBody {
        SpeechBody::Propose {
            thread: t.into(),
            body: "terms".into(),
        }
    }

    fn accept(t: &str) -> SpeechBody {
        SpeechBody::Accept {
            target: AcceptTarget::Thread(t.into()),
        }
    }

    fn run(n: &mut Negotiations, who: &str, body: SpeechBody) -> Result<(), String> {
        let (t, s) = n.step(&AgentId::new(who), &body)?;
        n.commit(t, s);
        Ok(())
    }

    #[test]
    fn accept_without_proposal_is_refused() {
        let n = Negotiations::default();
        assert!(n.step(&AgentId::new("b"), &accept("t")).is_err());
    }

    #[test]
    fn counter_reenters_pending() {
        let mut n = Negotiations::default();
        run(&mut n, "a", propose("t")).unwrap();
        run(
            &mut n,
            "b",
            SpeechBody::CounterPropose {
                thread: "t".into(),
                body: "other".into(),
            },
        )
        .unwrap();
        // the original proposer now answers the counter
        assert!(run(&mut n, "b", accept("t")).is_err());
        run(&mut n, "a", accept("t")).unwrap();
        assert!(matches!(n.get("t"), Some(Negotiation::Accepted { body, .. }) if body == "other"));
        assert!(run(&mut n, "b", accept("t")).is_err());
    }

    #[test]
    fn duplicate_proposal_refused() {
        let mut n = Negotiations::default();
        run(&mut n, "a", propose("t")).unwrap();
        assert!(run(&mut n, "b", propose("t")).is_err());
    }
}
