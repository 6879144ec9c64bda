//! Generator of valid community templates, shared by the property tests.
#![allow(dead_code)]

use odp_governance::spec_lang::{
    has_errors, validate_template, Cardinality, CommunityTemplate, ContractClause, ContractDecl,
    Deontic, Discipline, GroupDecl, ObjectDecl, PolicyDecl, Pos, RoleDecl, Target,
};
use odp_governance::vocab::{Modality, RoleKind, SpeechActKind};
use proptest::prelude::*;

const ACTIONS: &[&str] = &["read_record", "sign_off", "share_data", "triage", "notify", "audit_x"];
const CONDITIONS: &[&str] = &["low_confidence", "policy_violation", "timeout"];

type RawRole = (u8, u8, Option<u8>);
type RawPolicy = (u8, u8, u8, Option<(u8, u8)>);
type RawClause = (bool, u8, Vec<u8>);

fn target(i: u8, roles: &[RoleDecl], groups: &[GroupDecl]) -> Target {
    let n = 2 + roles.len() + groups.len();
    match (i as usize) % n {
        0 => Target::All,
        1 => Target::AllAiAgents,
        k if k - 2 < roles.len() => Target::Named(roles[k - 2].name.clone()),
        k => Target::Named(groups[k - 2 - roles.len()].name.clone()),
    }
}

fn build(
    name: u16,
    raw_roles: Vec<RawRole>,
    raw_groups: Vec<Vec<u8>>,
    raw_policies: Vec<RawPolicy>,
    raw_contracts: Vec<Vec<RawClause>>,
    raw_objects: Vec<bool>,
) -> CommunityTemplate {
    let mut t = CommunityTemplate::empty(format!("Community{name}"));
    for (i, (kind, min, extra)) in raw_roles.into_iter().enumerate() {
        let min = (min % 3) as u32;
        t.roles.push(RoleDecl {
            name: format!("Role{i}"),
            kind: RoleKind::ALL[kind as usize % RoleKind::ALL.len()],
            cardinality: Cardinality {
                min,
                max: extra.map(|e| min.max(1) + (e % 3) as u32),
            },
            pos: Pos::default(),
        });
    }
    for (i, members) in raw_groups.into_iter().enumerate() {
        let mut ms: Vec<String> = members
            .iter()
            .map(|m| t.roles[*m as usize % t.roles.len()].name.clone())
            .collect();
        ms.dedup();
        t.groups.push(GroupDecl {
            name: format!("Group{i}"),
            members: ms,
            pos: Pos::default(),
        });
    }
    for (m, a, tg, extra) in raw_policies {
        let modality = Modality::ALL[m as usize % 3];
        let d = Deontic::new(modality, ACTIONS[a as usize % ACTIONS.len()], target(tg, &t.roles, &t.groups));
        let mut p = PolicyDecl::plain(d);
        if let Some((a2, t2)) = extra {
            let other = |m| Deontic::new(m, ACTIONS[a2 as usize % ACTIONS.len()], target(t2, &t.roles, &t.groups));
            match modality {
                Modality::Permit => p.requires = Some(other(Modality::Burden)),
                Modality::Embargo => p.unless = Some(other(Modality::Permit)),
                Modality::Burden => {}
            }
        }
        t.policies.push(p);
    }
    let humans: Vec<String> = t
        .roles
        .iter()
        .filter(|r| r.kind == RoleKind::Human)
        .map(|r| r.name.clone())
        .collect();
    for (i, clauses) in raw_contracts.into_iter().enumerate() {
        let mut c = ContractDecl {
            name: format!("Contract{i}"),
            clauses: Vec::new(),
            pos: Pos::default(),
        };
        for (escalate, r, kinds) in clauses {
            if escalate && !humans.is_empty() {
                c.clauses.push(ContractClause::Escalate {
                    condition: CONDITIONS[r as usize % CONDITIONS.len()].to_string(),
                    role: humans[r as usize % humans.len()].clone(),
                    pos: Pos::default(),
                });
            } else {
                let mut ks: Vec<SpeechActKind> = kinds
                    .iter()
                    .map(|k| SpeechActKind::ALL[*k as usize % SpeechActKind::ALL.len()])
                    .collect();
                ks.dedup();
                c.clauses.push(ContractClause::Allow {
                    role: t.roles[r as usize % t.roles.len()].name.clone(),
                    kinds: ks,
                    pos: Pos::default(),
                });
            }
        }
        t.contracts.push(c);
    }
    for (i, append_only) in raw_objects.into_iter().enumerate() {
        t.objects.push(ObjectDecl {
            name: format!("Object{i}"),
            discipline: if append_only {
                Discipline::AppendOnly
            } else {
                Discipline::ReadWrite
            },
            pos: Pos::default(),
        });
    }
    t
}

/// Templates that pass validation without errors.
pub fn arb_template() -> impl Strategy<Value = CommunityTemplate> {
    (
        any::<u16>(),
        prop::collection::vec((any::<u8>(), any::<u8>(), prop::option::of(any::<u8>())), 1..6),
        prop::collection::vec(prop::collection::vec(any::<u8>(), 1..4), 0..3),
        prop::collection::vec(
            (any::<u8>(), any::<u8>(), any::<u8>(), prop::option::of((any::<u8>(), any::<u8>()))),
            0..7,
        ),
        prop::collection::vec(
            prop::collection::vec(
                (any::<bool>(), any::<u8>(), prop::collection::vec(any::<u8>(), 1..5)),
                1..4,
            ),
            0..3,
        ),
        prop::collection::vec(any::<bool>(), 0..4),
    )
        .prop_map(|(n, r, g, p, c, o)| build(n, r, g, p, c, o))
        .prop_filter("template must validate", |t| !has_errors(&validate_template(t)))
}
