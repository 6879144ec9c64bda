mod common;

use odp_governance::deontic::Principal;
use odp_governance::runtime::{
    export_records, import_export, instantiate_community, replay_trail, verify_chain,
    CommunityInstance, Event, InstanceConfig, SpeechAct, SpeechBody, TokenRef, VerdictOutcome,
};
use odp_governance::scenarios::build_clinical_layers;
use odp_governance::spec_lang::{format_spec, parse_spec, CommunityTemplate};
use odp_governance::vocab::{DeploymentMode, RoleKind};
use proptest::prelude::*;

fn owner() -> Principal {
    Principal::organization("HospitalParty", "HospitalParty")
}

fn data_access_events() -> Vec<Event> {
    let speech = |sender: &str, body| Event::Speech(SpeechAct::new(sender, body));
    let consent = |subject: &str| TokenRef::Match {
        action: "verify_consent".into(),
        subject: Some(subject.into()),
    };
    let mut out = vec![
        Event::RegisterPrincipal(Principal::organization("VendorCo", "VendorCo")),
        Event::RetirePrincipal("VendorCo".into()),
        Event::Bind {
            role: "DataExtractionAgent".into(),
            agent: "dx".into(),
            kind: RoleKind::LlmAgent,
            principal: "VendorCo".into(),
        },
        Event::Unbind {
            role: "DataExtractionAgent".into(),
            agent: "dx".into(),
        },
        Event::Bind {
            role: "ConsentManager".into(),
            agent: "cm".into(),
            kind: RoleKind::LlmAgent,
            principal: "HospitalParty".into(),
        },
        Event::Bind {
            role: "DataGovernanceOfficer".into(),
            agent: "dgo".into(),
            kind: RoleKind::Human,
            principal: "HospitalParty".into(),
        },
        speech(
            "dgo",
            SpeechBody::Revoke {
                token: TokenRef::Match {
                    action: "access_without_consent".into(),
                    subject: None,
                },
            },
        ),
    ];
    for subject in ["p1", "p2"] {
        out.push(speech(
            "cm",
            SpeechBody::DeclareBurden {
                action: "verify_consent".into(),
                holder: "ConsentManager".into(),
                subject: Some(subject.into()),
                deadline: None,
            },
        ));
        out.push(speech(
            "cm",
            SpeechBody::Discharge {
                token: consent(subject),
                evidence: None,
            },
        ));
        out.push(Event::Action {
            actor: "dx".into(),
            action: "read_demographics".into(),
            subject: Some(subject.into()),
        });
    }
    out
}

fn drive(template: &CommunityTemplate, events: &[Event], mode: DeploymentMode) -> CommunityInstance {
    let mut inst =
        instantiate_community(template.clone(), InstanceConfig::new(owner()).mode(mode)).unwrap();
    for e in events {
        let _ = inst.apply(e.clone());
    }
    inst
}

fn pick(alphabet: Vec<Event>, max_len: usize) -> impl Strategy<Value = Vec<Event>> {
    let n = alphabet.len();
    prop::collection::vec(0..n, 0..max_len)
        .prop_map(move |ix| ix.into_iter().map(|i| alphabet[i].clone()).collect())
}

/// Binds one agent per role of the template, named after the role.
fn cast(t: &CommunityTemplate) -> Vec<Event> {
    t.roles
        .iter()
        .map(|r| Event::Bind {
            role: r.name.clone(),
            agent: format!("a_{}", r.name).as_str().into(),
            kind: r.kind,
            principal: "HospitalParty".into(),
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn trail_verifies_and_replays_identically(events in pick(data_access_events(), 14)) {
        let (l1, _, _) = build_clinical_layers();
        let inst = drive(&l1, &events, DeploymentMode::Autonomous);
        let trail = inst.audit().records();
        prop_assert!(verify_chain(inst.name(), trail).is_ok());

        let again = drive(&l1, &events, DeploymentMode::Autonomous);
        prop_assert_eq!(again.audit().records(), trail);

        let imported = import_export(&export_records(inst.name(), trail)).unwrap();
        let replayed = replay_trail(&imported[0]).unwrap();
        prop_assert_eq!(replayed.audit().records(), trail);
        prop_assert_eq!(replayed.tokens().states(), inst.tokens().states());
    }

    #[test]
    fn any_flipped_byte_is_localized(
        events in pick(data_access_events(), 10),
        line_pick in any::<prop::sample::Index>(),
        byte_pick in any::<prop::sample::Index>(),
    ) {
        let (l1, _, _) = build_clinical_layers();
        let inst = drive(&l1, &events, DeploymentMode::Autonomous);
        let text = export_records(inst.name(), inst.audit().records());
        let lines: Vec<&str> = text.lines().skip(1).collect();
        let seq = line_pick.index(lines.len());
        let offset: usize = text.lines().take(seq + 1).map(|l| l.len() + 1).sum();
        let at = offset + byte_pick.index(lines[seq].len());
        let mut bytes = text.into_bytes();
        bytes[at] ^= 0x01;
        let err = import_export(&String::from_utf8(bytes).unwrap()).unwrap_err();
        prop_assert_eq!(err.seq, seq as u64);
    }

    #[test]
    fn bindings_never_exceed_cardinality(ops in prop::collection::vec((any::<bool>(), 0usize..16, 0usize..4), 0..40)) {
        let (_, l2, _) = build_clinical_layers();
        let mut inst = instantiate_community(l2.clone(), InstanceConfig::new(owner())).unwrap();
        for (bind, role, agent) in ops {
            let r = &l2.roles[role % l2.roles.len()];
            let agent = format!("agent{agent}");
            let _ = if bind {
                inst.bind_agent(&r.name, agent.as_str().into(), r.kind, "HospitalParty".into())
            } else {
                inst.apply(Event::Unbind { role: r.name.clone(), agent: agent.as_str().into() })
            };
            for decl in &l2.roles {
                if let Some(max) = decl.cardinality.max {
                    prop_assert!(inst.roster().binding_count(&decl.name) <= max as usize);
                }
            }
        }
    }

    #[test]
    fn advisory_holds_exactly_what_autonomous_admits(
        acts in prop::collection::vec((0usize..16, 0usize..32, prop::option::of(0usize..2)), 1..20),
    ) {
        let (_, l2, _) = build_clinical_layers();
        let actions: Vec<String> = l2.mentioned_actions().map(str::to_string).collect();
        let mut events = cast(&l2);
        events.extend(acts.into_iter().map(|(r, a, s)| Event::Action {
            actor: format!("a_{}", l2.roles[r % l2.roles.len()].name).as_str().into(),
            action: actions[a % actions.len()].clone(),
            subject: s.map(|s| format!("p{s}")),
        }));
        let mut auto = instantiate_community(l2.clone(), InstanceConfig::new(owner())).unwrap();
        let mut advisory = instantiate_community(
            l2.clone(),
            InstanceConfig::new(owner()).mode(DeploymentMode::Advisory),
        ).unwrap();
        for e in events {
            let a = auto.apply(e.clone()).ok().and_then(|x| x.verdict).map(|v| v.1);
            let b = advisory.apply(e).ok().and_then(|x| x.verdict).map(|v| v.1);
            let held = matches!(b, Some(VerdictOutcome::Admissible | VerdictOutcome::Recommended));
            prop_assert_eq!(a == Some(VerdictOutcome::Admissible), held);
            prop_assert!(b != Some(VerdictOutcome::Admissible) || a == b);
        }
    }

    #[test]
    fn generated_templates_round_trip(t in common::arb_template()) {
        let text = format_spec(&t);
        prop_assert_eq!(parse_spec(&text).unwrap(), t);
        prop_assert_eq!(format_spec(&parse_spec(&text).unwrap()), text);
    }
}
