use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::VerifyError;
use crate::spec_lang::{CommunityTemplate, Target};
use crate::vocab::{Seq, TokenId, UnknownKeyword};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropertyKind {
    Safety,
    Authority,
    Prohibition,
    Accountability,
}

impl PropertyKind {
    pub const ALL: [PropertyKind; 4] = [
        PropertyKind::Safety,
        PropertyKind::Authority,
        PropertyKind::Prohibition,
        PropertyKind::Accountability,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PropertyKind::Safety => "safety",
            PropertyKind::Authority => "authority",
            PropertyKind::Prohibition => "prohibition",
            PropertyKind::Accountability => "accountability",
        }
    }
}

impl fmt::Display for PropertyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PropertyKind {
    type Err = UnknownKeyword;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PropertyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| UnknownKeyword(s.to_string()))
    }
}

/// One of the four property templates with its parameters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "template", rename_all = "snake_case")]
pub enum PropertySpec {
    /// No executed `guarded_action` on a subject without an earlier
    /// discharge of `guard_burden` for that same subject.
    ConsentGatedAccess {
        guarded_action: String,
        guard_burden: String,
    },
    /// `decision_action` happens only as the discharge of its burden by an
    /// agent filling `authorized_role`.
    ExclusiveAuthority {
        decision_action: String,
        authorized_role: String,
    },
    /// While any member of `group` is bound, an embargo on `action` covering
    /// it stays held, and no member executes `action`.
    EmbargoHolds { action: String, group: String },
    /// Every executed action traces to a registered principal.
    PrincipalTraceability,
}

impl PropertySpec {
    pub fn safety(guarded_action: &str, guard_burden: &str) -> Self {
        PropertySpec::ConsentGatedAccess {
            guarded_action: guarded_action.into(),
            guard_burden: guard_burden.into(),
        }
    }

    pub fn authority(decision_action: &str, authorized_role: &str) -> Self {
        PropertySpec::ExclusiveAuthority {
            decision_action: decision_action.into(),
            authorized_role: authorized_role.into(),
        }
    }

    pub fn prohibition(action: &str, group: &str) -> Self {
        PropertySpec::EmbargoHolds {
            action: action.into(),
            group: group.into(),
        }
    }

    pub fn kind(&self) -> PropertyKind {
        match self {
            PropertySpec::ConsentGatedAccess { .. } => PropertyKind::Safety,
            PropertySpec::ExclusiveAuthority { .. } => PropertyKind::Authority,
            PropertySpec::EmbargoHolds { .. } => PropertyKind::Prohibition,
            PropertySpec::PrincipalTraceability => PropertyKind::Accountability,
        }
    }

    /// Parameters must name actions mentioned by some policy and roles or
    /// groups declared by the community.
    pub fn check_identifiers(&self, t: &CommunityTemplate) -> Result<(), VerifyError> {
        let action = |a: &str| {
            if t.mentioned_actions().any(|m| m == a) {
                Ok(())
            } else {
                Err(VerifyError::UnknownIdentifier {
                    what: "action",
                    name: a.to_string(),
                    community: t.name.clone(),
                })
            }
        };
        match self {
            PropertySpec::ConsentGatedAccess {
                guarded_action,
                guard_burden,
            } => {
                action(guarded_action)?;
                action(guard_burden)
            }
            PropertySpec::ExclusiveAuthority {
                decision_action,
                authorized_role,
            } => {
                action(decision_action)?;
                if t.role(authorized_role).is_none() {
                    return Err(VerifyError::UnknownIdentifier {
                        what: "role",
                        name: authorized_role.clone(),
                        community: t.name.clone(),
                    });
                }
                Ok(())
            }
            PropertySpec::EmbargoHolds { action: a, group } => {
                action(a)?;
                if !t.resolves_target(&Target::from_ident(group)) {
                    return Err(VerifyError::UnknownIdentifier {
                        what: "group",
                        name: group.clone(),
                        community: t.name.clone(),
                    });
                }
                Ok(())
            }
            PropertySpec::PrincipalTraceability => Ok(()),
        }
    }
}

impl fmt::Display for PropertySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropertySpec::ConsentGatedAccess {
                guarded_action,
                guard_burden,
            } => write!(f, "safety({guarded_action}, {guard_burden})"),
            PropertySpec::ExclusiveAuthority {
                decision_action,
                authorized_role,
            } => write!(f, "authority({decision_action}, {authorized_role})"),
            PropertySpec::EmbargoHolds { action, group } => {
                write!(f, "prohibition({action}, {group})")
            }
            PropertySpec::PrincipalTraceability => f.write_str("accountability"),
        }
    }
}

/// A counterexample found in a trail.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Violation {
    pub property: PropertySpec,
    /// Record at which the violation became observable.
    pub at_seq: Seq,
    /// Records making up the counterexample, all at or before `at_seq`.
    pub witness_records: Vec<Seq>,
    pub witness_tokens: Vec<TokenId>,
    pub note: String,
}

impl Violation {
    pub fn kind(&self) -> PropertyKind {
        self.property.kind()
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at seq {}: {}", self.property, self.at_seq, self.note)
    }
}
