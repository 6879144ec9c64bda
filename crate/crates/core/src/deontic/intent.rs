use serde::Serialize;

use crate::vocab::AgentId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CommitmentReadiness {
    Ready,
    NotReady,
}

/// An agent's goal, plan and commitment readiness.
///
/// The owner is fixed at construction and there is no way to rebind it:
/// intents stay with the agent that formed them even when its obligations
/// are delegated. Contents are readable only by presenting the owner's id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntentRecord {
    owner: AgentId,
    goal: String,
    plan: String,
    readiness: CommitmentReadiness,
}

/// Borrowed view handed out to the owner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntentView<'a> {
    pub goal: &'a str,
    pub plan: &'a str,
    pub readiness: CommitmentReadiness,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("intent of `{owner}` is not readable by `{requester}`")]
pub struct NotOwner {
    pub owner: AgentId,
    pub requester: AgentId,
}

impl IntentRecord {
    pub fn new(
        owner: AgentId,
        goal: impl Into<String>,
        plan: impl Into<String>,
        readiness: CommitmentReadiness,
    ) -> Self {
        Self {
            owner,
            goal: goal.into(),
            plan: plan.into(),
            readiness,
        }
    }

    pub fn owner(&self) -> &AgentId {
        &self.owner
    }

    pub fn read(&self, requester: &AgentId) -> Result<IntentView<'_>, NotOwner> {
        self.check(requester)?;
        Ok(IntentView {
            goal: &self.goal,
            plan: &self.plan,
            readiness: self.readiness,
        })
    }

    pub fn revise_plan(&mut self, requester: &AgentId, plan: impl Into<String>) -> Result<(), NotOwner> {
        self.check(requester)?;
        self.plan = plan.into();
        Ok(())
    }

    pub fn revise_goal(&mut self, requester: &AgentId, goal: impl Into<String>) -> Result<(), NotOwner> {
        self.check(requester)?;
        self.goal = goal.into();
        Ok(())
    }

    // Readiness is stored for the owner's benefit; nothing in the engine
    // evaluates it.
    pub fn set_readiness(
        &mut self,
        requester: &AgentId,
        readiness: CommitmentReadiness,
    ) -> Result<(), NotOwner> {
        self.check(requester)?;
        self.readiness = readiness;
        Ok(())
    }

    fn check(&self, requester: &AgentId) -> Result<(), NotOwner> {
        if *requester == self.owner {
            Ok(())
        } else {
            Err(NotOwner {
                owner: self.owner.clone(),
                requester: requester.clone(),
            })
        }
    }
}
