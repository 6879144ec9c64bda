use std::fmt::Write;

use super::ast::*;

/// Canonical text for a template: roles, groups, policies, contracts, then
/// objects, each in declaration order, two-space indentation.
pub fn format_spec(t: &CommunityTemplate) -> String {
    let mut out = String::new();
    writeln!(out, "community {} {{", t.name).unwrap();
    for r in &t.roles {
        write!(out, "  role {} : {}", r.name, r.kind).unwrap();
        if r.cardinality != Cardinality::ONE {
            write!(out, " {}", r.cardinality).unwrap();
        }
        out.push_str(";\n");
    }
    for g in &t.groups {
        writeln!(out, "  group {} = {{ {} }};", g.name, g.members.join(", ")).unwrap();
    }
    for p in &t.policies {
        writeln!(out, "  policy {p};").unwrap();
    }
    for c in &t.contracts {
        writeln!(out, "  contract {} {{", c.name).unwrap();
        for cl in &c.clauses {
            match cl {
                ContractClause::Allow { role, kinds, .. } => {
                    let kinds: Vec<&str> = kinds.iter().map(|k| k.as_str()).collect();
                    writeln!(out, "    allow {role} : {};", kinds.join(", ")).unwrap();
                }
                ContractClause::Escalate {
                    condition, role, ..
                } => {
                    writeln!(out, "    escalate when {condition} to {role};").unwrap();
                }
            }
        }
        out.push_str("  }\n");
    }
    for o in &t.objects {
        match o.discipline {
            Discipline::ReadWrite => writeln!(out, "  object {};", o.name).unwrap(),
            d => writeln!(out, "  object {} : {};", o.name, d.as_str()).unwrap(),
        }
    }
    out.push_str("}\n");
    out
}

/// Several templates separated by a blank line.
pub fn format_specs(ts: &[CommunityTemplate]) -> String {
    ts.iter().map(format_spec).collect::<Vec<_>>().join("\n")
}
