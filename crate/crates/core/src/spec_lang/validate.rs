use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::*;
use crate::vocab::{Modality, RoleKind, GROUP_ALL, GROUP_ALL_AI_AGENTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Warning,
    Error,
}

/// Machine-readable category of a finding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingCode {
    DuplicateName,
    ReservedName,
    BadCardinality,
    UnresolvedGroupMember,
    UnresolvedTarget,
    RequiresNotBurden,
    RequiresOnNonPermit,
    UnlessNotPermit,
    UnlessOnNonEmbargo,
    UnresolvedContractRole,
    EscalationToNonHuman,
    UnconditionalConflict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationFinding {
    pub severity: Severity,
    pub code: FindingCode,
    pub message: String,
    pub pos: Pos,
}

impl fmt::Display for ValidationFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{}: {sev}: {}", self.pos, self.message)
    }
}

pub fn has_errors(findings: &[ValidationFinding]) -> bool {
    findings.iter().any(|f| f.severity == Severity::Error)
}

struct Findings(Vec<ValidationFinding>);

impl Findings {
    fn error(&mut self, code: FindingCode, pos: Pos, message: String) {
        self.0.push(ValidationFinding {
            severity: Severity::Error,
            code,
            message,
            pos,
        });
    }

    fn warning(&mut self, code: FindingCode, pos: Pos, message: String) {
        self.0.push(ValidationFinding {
            severity: Severity::Warning,
            code,
            message,
            pos,
        });
    }
}

/// Checks every template invariant. Returns findings in source order of the
/// offending declaration kinds (roles, groups, policies, contracts, objects).
pub fn validate_template(t: &CommunityTemplate) -> Vec<ValidationFinding> {
    let mut f = Findings(Vec::new());

    // Roles and groups share the target namespace.
    let mut targets: HashSet<&str> = HashSet::new();
    for r in &t.roles {
        if r.name == GROUP_ALL || r.name == GROUP_ALL_AI_AGENTS {
            f.error(
                FindingCode::ReservedName,
                r.pos,
                format!("role name `{}` is reserved", r.name),
            );
        } else if !targets.insert(&r.name) {
            f.error(
                FindingCode::DuplicateName,
                r.pos,
                format!("duplicate role `{}`", r.name),
            );
        }
        if let Some(max) = r.cardinality.max {
            if r.cardinality.min > max {
                f.error(
                    FindingCode::BadCardinality,
                    r.pos,
                    format!("role `{}` has min above max in {}", r.name, r.cardinality),
                );
            }
            if max == 0 {
                f.warning(
                    FindingCode::BadCardinality,
                    r.pos,
                    format!("role `{}` can never be filled", r.name),
                );
            }
        }
    }
    for g in &t.groups {
        if g.name == GROUP_ALL || g.name == GROUP_ALL_AI_AGENTS {
            f.error(
                FindingCode::ReservedName,
                g.pos,
                format!("group name `{}` is reserved", g.name),
            );
        } else if !targets.insert(&g.name) {
            f.error(
                FindingCode::DuplicateName,
                g.pos,
                format!("duplicate role or group `{}`", g.name),
            );
        }
        for m in &g.members {
            if t.role(m).is_none() {
                f.error(
                    FindingCode::UnresolvedGroupMember,
                    g.pos,
                    format!("group `{}` names undeclared role `{m}`", g.name),
                );
            }
        }
    }

    for p in &t.policies {
        check_target(t, &p.deontic, p.pos, &mut f);
        if let Some(req) = &p.requires {
            check_target(t, req, p.pos, &mut f);
            if req.modality != Modality::Burden {
                f.error(
                    FindingCode::RequiresNotBurden,
                    p.pos,
                    format!("requires clause `{req}` must name a burden"),
                );
            }
            if p.deontic.modality != Modality::Permit {
                f.error(
                    FindingCode::RequiresOnNonPermit,
                    p.pos,
                    format!("requires clause is only legal on permits, found `{}`", p.deontic),
                );
            }
        }
        if let Some(exc) = &p.unless {
            check_target(t, exc, p.pos, &mut f);
            if exc.modality != Modality::Permit {
                f.error(
                    FindingCode::UnlessNotPermit,
                    p.pos,
                    format!("unless clause `{exc}` must name a permit"),
                );
            }
            if p.deontic.modality != Modality::Embargo {
                f.error(
                    FindingCode::UnlessOnNonEmbargo,
                    p.pos,
                    format!("unless clause is only legal on embargoes, found `{}`", p.deontic),
                );
            }
        }
    }

    for (permit, embargo) in unconditional_conflicts(t) {
        f.warning(
            FindingCode::UnconditionalConflict,
            embargo.pos,
            format!(
                "unconditional conflict; embargo wins: `{}` vs `{}`",
                permit.deontic, embargo.deontic
            ),
        );
    }

    let mut contract_names = HashSet::new();
    for c in &t.contracts {
        if !contract_names.insert(&c.name) {
            f.error(
                FindingCode::DuplicateName,
                c.pos,
                format!("duplicate contract `{}`", c.name),
            );
        }
        for cl in &c.clauses {
            match cl {
                ContractClause::Allow { role, pos, .. } => {
                    if t.role(role).is_none() {
                        f.error(
                            FindingCode::UnresolvedContractRole,
                            *pos,
                            format!("contract `{}` authorizes undeclared role `{role}`", c.name),
                        );
                    }
                }
                ContractClause::Escalate { role, pos, .. } => match t.role(role) {
                    None => f.error(
                        FindingCode::UnresolvedContractRole,
                        *pos,
                        format!("contract `{}` escalates to undeclared role `{role}`", c.name),
                    ),
                    Some(r) if r.kind != RoleKind::Human => f.warning(
                        FindingCode::EscalationToNonHuman,
                        *pos,
                        format!("contract `{}` escalates to non-human role `{role}`", c.name),
                    ),
                    Some(_) => {}
                },
            }
        }
    }

    let mut object_names = HashSet::new();
    for o in &t.objects {
        if !object_names.insert(&o.name) {
            f.error(
                FindingCode::DuplicateName,
                o.pos,
                format!("duplicate object `{}`", o.name),
            );
        }
    }

    f.0
}

fn check_target(t: &CommunityTemplate, d: &Deontic, pos: Pos, f: &mut Findings) {
    if !t.resolves_target(&d.target) {
        f.error(
            FindingCode::UnresolvedTarget,
            pos,
            format!("unresolved target `{}` in `{d}`", d.target),
        );
    }
}

/// Pairs (permit, embargo) on the identical (action, target) where the
/// embargo carries no unless-clause naming that very permit.
pub fn unconditional_conflicts(t: &CommunityTemplate) -> Vec<(&PolicyDecl, &PolicyDecl)> {
    let mut out = Vec::new();
    for p in t
        .policies
        .iter()
        .filter(|p| p.deontic.modality == Modality::Permit)
    {
        for e in t
            .policies
            .iter()
            .filter(|e| e.deontic.modality == Modality::Embargo)
        {
            let same_pair =
                p.deontic.action == e.deontic.action && p.deontic.target == e.deontic.target;
            if !same_pair {
                continue;
            }
            let linked = e.unless.as_ref().is_some_and(|u| {
                u.action == p.deontic.action && u.target == p.deontic.target
            });
            if !linked {
                out.push((p, e));
            }
        }
    }
    out
}
