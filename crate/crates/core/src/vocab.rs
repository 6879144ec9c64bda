//! Shared vocabulary: modalities, role kinds, speech-act kinds and the
//! identifier newtypes used across the engine.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Audit sequence number. Also serves as the engine's logical clock.
pub type Seq = u64;

/// The three deontic modalities a token can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Burden,
    Permit,
    Embargo,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::Burden, Modality::Permit, Modality::Embargo];

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Burden => "burden",
            Modality::Permit => "permit",
            Modality::Embargo => "embargo",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Modality {
    type Err = UnknownKeyword;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "burden" => Ok(Modality::Burden),
            "permit" => Ok(Modality::Permit),
            "embargo" => Ok(Modality::Embargo),
            other => Err(UnknownKeyword(other.to_string())),
        }
    }
}

/// What kind of participant may fill a role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleKind {
    Human,
    AgenticAi,
    LlmAgent,
    System,
}

impl RoleKind {
    pub const ALL: [RoleKind; 4] = [
        RoleKind::Human,
        RoleKind::AgenticAi,
        RoleKind::LlmAgent,
        RoleKind::System,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RoleKind::Human => "human",
            RoleKind::AgenticAi => "agentic_ai",
            RoleKind::LlmAgent => "llm_agent",
            RoleKind::System => "system",
        }
    }

    /// Members of the built-in `ALL_AI_AGENTS` group.
    pub fn is_ai(self) -> bool {
        matches!(self, RoleKind::AgenticAi | RoleKind::LlmAgent)
    }
}

impl fmt::Display for RoleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RoleKind {
    type Err = UnknownKeyword;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RoleKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| UnknownKeyword(s.to_string()))
    }
}

/// Every speech act the runtime understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeechActKind {
    DeclareBurden,
    DeclarePermit,
    DeclareEmbargo,
    Transfer,
    Discharge,
    Grant,
    Revoke,
    Propose,
    Accept,
    Reject,
    CounterPropose,
    Escalate,
}

impl SpeechActKind {
    pub const ALL: [SpeechActKind; 12] = [
        SpeechActKind::DeclareBurden,
        SpeechActKind::DeclarePermit,
        SpeechActKind::DeclareEmbargo,
        SpeechActKind::Transfer,
        SpeechActKind::Discharge,
        SpeechActKind::Grant,
        SpeechActKind::Revoke,
        SpeechActKind::Propose,
        SpeechActKind::Accept,
        SpeechActKind::Reject,
        SpeechActKind::CounterPropose,
        SpeechActKind::Escalate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SpeechActKind::DeclareBurden => "declare_burden",
            SpeechActKind::DeclarePermit => "declare_permit",
            SpeechActKind::DeclareEmbargo => "declare_embargo",
            SpeechActKind::Transfer => "transfer",
            SpeechActKind::Discharge => "discharge",
            SpeechActKind::Grant => "grant",
            SpeechActKind::Revoke => "revoke",
            SpeechActKind::Propose => "propose",
            SpeechActKind::Accept => "accept",
            SpeechActKind::Reject => "reject",
            SpeechActKind::CounterPropose => "counter_propose",
            SpeechActKind::Escalate => "escalate",
        }
    }

    pub fn is_negotiation(self) -> bool {
        matches!(
            self,
            SpeechActKind::Propose
                | SpeechActKind::Accept
                | SpeechActKind::Reject
                | SpeechActKind::CounterPropose
        )
    }
}

impl fmt::Display for SpeechActKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SpeechActKind {
    type Err = UnknownKeyword;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SpeechActKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| UnknownKeyword(s.to_string()))
    }
}

/// How much autonomy AI-initiated actions get.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeploymentMode {
    /// Agent recommends, human approves.
    Advisory,
    /// Agent acts within bounds, human monitors; blocked attempts escalate.
    Supervised,
    /// Agent acts, human reviews offline.
    #[default]
    Autonomous,
}

impl DeploymentMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DeploymentMode::Advisory => "advisory",
            DeploymentMode::Supervised => "supervised",
            DeploymentMode::Autonomous => "autonomous",
        }
    }
}

impl fmt::Display for DeploymentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DeploymentMode {
    type Err = UnknownKeyword;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "advisory" => Ok(DeploymentMode::Advisory),
            "supervised" => Ok(DeploymentMode::Supervised),
            "autonomous" => Ok(DeploymentMode::Autonomous),
            other => Err(UnknownKeyword(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown keyword `{0}`")]
pub struct UnknownKeyword(pub String);

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_string())
            }
        }
    };
}

string_id!(
    /// A participant that fills roles (human, AI agent, or external system).
    AgentId
);
string_id!(
    /// A legally responsible party: organization or natural person.
    PrincipalId
);

/// Token identifier, monotonically increasing per community instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub u64);

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Built-in group naming every role.
pub const GROUP_ALL: &str = "ALL";
/// Built-in group naming every role of kind `agentic_ai` or `llm_agent`.
pub const GROUP_ALL_AI_AGENTS: &str = "ALL_AI_AGENTS";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyword_round_trips() {
        for k in SpeechActKind::ALL {
            assert_eq!(k.as_str().parse::<SpeechActKind>().unwrap(), k);
        }
        for k in RoleKind::ALL {
            assert_eq!(k.as_str().parse::<RoleKind>().unwrap(), k);
        }
        for m in Modality::ALL {
            assert_eq!(m.as_str().parse::<Modality>().unwrap(), m);
        }
        assert!("robot".parse::<RoleKind>().is_err());
    }

    #[test]
    fn ai_kinds() {
        assert!(RoleKind::AgenticAi.is_ai());
        assert!(RoleKind::LlmAgent.is_ai());
        assert!(!RoleKind::Human.is_ai());
        assert!(!RoleKind::System.is_ai());
    }
}
