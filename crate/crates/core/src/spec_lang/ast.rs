//! Parsed form of a community specification.
//!
//! Every declaration keeps the position of its leading keyword for
//! diagnostics. Positions never take part in equality: two templates are
//! equal when their declarations are, wherever they came from.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::vocab::{Modality, RoleKind, SpeechActKind, GROUP_ALL, GROUP_ALL_AI_AGENTS};

/// 1-based line and column of a token in the source text.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

impl Pos {
    pub fn new(line: u32, column: u32) -> Self {
        Self { line, column }
    }
}

impl PartialEq for Pos {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}

impl Eq for Pos {}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunityTemplate {
    pub name: String,
    pub roles: Vec<RoleDecl>,
    pub groups: Vec<GroupDecl>,
    pub policies: Vec<PolicyDecl>,
    pub contracts: Vec<ContractDecl>,
    pub objects: Vec<ObjectDecl>,
    pub pos: Pos,
}

impl CommunityTemplate {
    pub fn empty(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            roles: Vec::new(),
            groups: Vec::new(),
            policies: Vec::new(),
            contracts: Vec::new(),
            objects: Vec::new(),
            pos: Pos::default(),
        }
    }

    pub fn role(&self, name: &str) -> Option<&RoleDecl> {
        self.roles.iter().find(|r| r.name == name)
    }

    pub fn group(&self, name: &str) -> Option<&GroupDecl> {
        self.groups.iter().find(|g| g.name == name)
    }

    pub fn object(&self, name: &str) -> Option<&ObjectDecl> {
        self.objects.iter().find(|o| o.name == name)
    }

    pub fn contract(&self, name: &str) -> Option<&ContractDecl> {
        self.contracts.iter().find(|c| c.name == name)
    }

    /// Whether `name` is a role, a declared group, or a built-in group.
    pub fn resolves_target(&self, target: &Target) -> bool {
        match target {
            Target::All | Target::AllAiAgents => true,
            Target::Named(n) => self.role(n).is_some() || self.group(n).is_some(),
        }
    }

    /// Roles covered by `target`, in declaration order.
    pub fn roles_of_target(&self, target: &Target) -> Vec<&RoleDecl> {
        match target {
            Target::All => self.roles.iter().collect(),
            Target::AllAiAgents => self.roles.iter().filter(|r| r.kind.is_ai()).collect(),
            Target::Named(n) => {
                if let Some(r) = self.role(n) {
                    vec![r]
                } else if let Some(g) = self.group(n) {
                    self.roles
                        .iter()
                        .filter(|r| g.members.contains(&r.name))
                        .collect()
                } else {
                    Vec::new()
                }
            }
        }
    }

    /// Every action name mentioned by a policy, including requires/unless clauses.
    pub fn mentioned_actions(&self) -> impl Iterator<Item = &str> {
        self.policies.iter().flat_map(|p| {
            std::iter::once(p.deontic.action.as_str())
                .chain(p.requires.iter().map(|d| d.action.as_str()))
                .chain(p.unless.iter().map(|d| d.action.as_str()))
        })
    }

    /// Speech-act kinds that some contract authorizes for `role`.
    pub fn authorizes(&self, role: &str, kind: SpeechActKind) -> bool {
        self.contracts.iter().any(|c| {
            c.clauses.iter().any(|cl| match cl {
                ContractClause::Allow { role: r, kinds, .. } => r == role && kinds.contains(&kind),
                ContractClause::Escalate { .. } => false,
            })
        })
    }

    /// The human role an escalation `condition` is routed to, first match wins.
    pub fn escalation_target(&self, condition: &str) -> Option<&str> {
        self.contracts.iter().flat_map(|c| c.clauses.iter()).find_map(|cl| match cl {
            ContractClause::Escalate { condition: c, role, .. } if c == condition => {
                Some(role.as_str())
            }
            _ => None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cardinality {
    pub min: u32,
    /// `None` is unbounded (`*`).
    pub max: Option<u32>,
}

impl Cardinality {
    pub const ONE: Cardinality = Cardinality { min: 1, max: Some(1) };

    pub fn admits(&self, count: u32) -> bool {
        self.max.is_none_or(|m| count <= m)
    }
}

impl Default for Cardinality {
    fn default() -> Self {
        Self::ONE
    }
}

impl fmt::Display for Cardinality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.max {
            Some(m) => write!(f, "[{}..{}]", self.min, m),
            None => write!(f, "[{}..*]", self.min),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleDecl {
    pub name: String,
    pub kind: RoleKind,
    pub cardinality: Cardinality,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupDecl {
    pub name: String,
    pub members: Vec<String>,
    pub pos: Pos,
}

/// Who a policy applies to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Target {
    All,
    AllAiAgents,
    /// A role or a declared group.
    Named(String),
}

impl Target {
    pub fn from_ident(ident: &str) -> Self {
        match ident {
            GROUP_ALL => Target::All,
            GROUP_ALL_AI_AGENTS => Target::AllAiAgents,
            other => Target::Named(other.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            Target::All => GROUP_ALL,
            Target::AllAiAgents => GROUP_ALL_AI_AGENTS,
            Target::Named(n) => n,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `modality(action, target)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Deontic {
    pub modality: Modality,
    pub action: String,
    pub target: Target,
}

impl Deontic {
    pub fn new(modality: Modality, action: impl Into<String>, target: Target) -> Self {
        Self {
            modality,
            action: action.into(),
            target,
        }
    }
}

impl fmt::Display for Deontic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}, {})", self.modality, self.action, self.target)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyDecl {
    pub deontic: Deontic,
    /// A burden that must be discharged before the policy takes effect.
    pub requires: Option<Deontic>,
    /// A permit that, while active, suspends this embargo.
    pub unless: Option<Deontic>,
    pub pos: Pos,
}

impl PolicyDecl {
    pub fn plain(deontic: Deontic) -> Self {
        Self {
            deontic,
            requires: None,
            unless: None,
            pos: Pos::default(),
        }
    }
}

impl fmt::Display for PolicyDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.deontic)?;
        if let Some(r) = &self.requires {
            write!(f, " requires discharged {r}")?;
        }
        if let Some(u) = &self.unless {
            write!(f, " unless {u}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContractClause {
    Allow {
        role: String,
        kinds: Vec<SpeechActKind>,
        pos: Pos,
    },
    Escalate {
        condition: String,
        role: String,
        pos: Pos,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractDecl {
    pub name: String,
    pub clauses: Vec<ContractClause>,
    pub pos: Pos,
}

impl ContractDecl {
    /// Roles named anywhere in the contract, first mention first.
    pub fn participants(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for cl in &self.clauses {
            let r = match cl {
                ContractClause::Allow { role, .. } | ContractClause::Escalate { role, .. } => role,
            };
            if !out.contains(&r.as_str()) {
                out.push(r);
            }
        }
        out
    }

    pub fn escalations(&self) -> impl Iterator<Item = (&str, &str)> {
        self.clauses.iter().filter_map(|cl| match cl {
            ContractClause::Escalate {
                condition, role, ..
            } => Some((condition.as_str(), role.as_str())),
            _ => None,
        })
    }
}

/// Access discipline of an enterprise object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Discipline {
    AppendOnly,
    #[default]
    ReadWrite,
}

impl Discipline {
    pub fn as_str(self) -> &'static str {
        match self {
            Discipline::AppendOnly => "append_only",
            Discipline::ReadWrite => "read_write",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectDecl {
    pub name: String,
    pub discipline: Discipline,
    pub pos: Pos,
}
