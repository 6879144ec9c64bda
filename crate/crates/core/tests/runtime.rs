use std::thread;

use odp_governance::deontic::{DeonticError, Party, Principal};
use odp_governance::runtime::{
    export_records, import_export, instantiate_community, replay_trail, verify_chain, AcceptTarget,
    CommunityInstance, Event, InstanceConfig, InstanceHandle, RecordDetail, RecordKind,
    ReplayError, RuntimeError, SpeechAct, SpeechBody, SpeechRejection, TokenRef, VerdictOutcome,
    REVIEW_ACTION,
};
use odp_governance::scenarios::build_clinical_layers;
use odp_governance::vocab::{
    AgentId, DeploymentMode, Modality, PrincipalId, RoleKind, TokenId,
};
use odp_governance::deontic::TokenState;

fn hospital() -> Principal {
    Principal::organization("Hospital", "General Hospital")
}

fn matching(mode: DeploymentMode) -> CommunityInstance {
    let (_, l2, _) = build_clinical_layers();
    let mut inst = instantiate_community(l2, InstanceConfig::new(hospital()).mode(mode)).unwrap();
    inst.register_principal(Principal::organization("Vendor", "Vendor Inc"))
        .unwrap();
    inst.bind_agent("CriteriaMatcher", "matcher".into(), RoleKind::AgenticAi, "Vendor".into())
        .unwrap();
    inst.bind_agent("Physician", "dr_a".into(), RoleKind::Human, "Hospital".into())
        .unwrap();
    inst.bind_agent("WorkflowOrchestrator", "orch".into(), RoleKind::AgenticAi, "Hospital".into())
        .unwrap();
    inst
}

fn act(sender: &str, body: SpeechBody) -> SpeechAct {
    SpeechAct::new(sender, body)
}

fn matched(action: &str, subject: Option<&str>) -> TokenRef {
    TokenRef::Match {
        action: action.into(),
        subject: subject.map(Into::into),
    }
}

#[test]
fn genesis_then_one_held_token_per_policy() {
    let (l1, _, _) = build_clinical_layers();
    let n = l1.policies.len();
    let inst = instantiate_community(l1, InstanceConfig::new(hospital())).unwrap();
    let recs = inst.audit().records();
    assert_eq!(recs[0].kind, RecordKind::Genesis);
    assert_eq!(recs.len(), 1 + n);
    assert!(recs[1..].iter().all(|r| r.kind == RecordKind::TokenTransition));
    assert_eq!(inst.tokens().len(), n);
    for t in inst.tokens().iter() {
        assert_eq!(t.state, TokenState::Held);
        assert_eq!(t.issuer, Party::Principal(PrincipalId::new("Hospital")));
    }
    verify_chain("DataAccessCommunity", recs).unwrap();
}

#[test]
fn refused_bindings_leave_no_trace() {
    let mut inst = matching(DeploymentMode::Autonomous);
    let before = inst.audit().records().len();
    let cases: Vec<(Event, fn(&RuntimeError) -> bool)> = vec![
        (
            Event::Bind {
                role: "Nurse".into(),
                agent: "n".into(),
                kind: RoleKind::Human,
                principal: "Hospital".into(),
            },
            |e| matches!(e, RuntimeError::UnknownRole(_)),
        ),
        (
            Event::Bind {
                role: "Physician".into(),
                agent: "bot".into(),
                kind: RoleKind::LlmAgent,
                principal: "Hospital".into(),
            },
            |e| matches!(e, RuntimeError::KindMismatch { .. }),
        ),
        (
            Event::Bind {
                role: "Physician".into(),
                agent: "dr_x".into(),
                kind: RoleKind::Human,
                principal: "Nobody".into(),
            },
            |e| matches!(e, RuntimeError::UnknownPrincipal(_)),
        ),
        (
            Event::Bind {
                role: "WorkflowOrchestrator".into(),
                agent: "orch2".into(),
                kind: RoleKind::AgenticAi,
                principal: "Hospital".into(),
            },
            |e| matches!(e, RuntimeError::CardinalityExceeded { .. }),
        ),
        (
            Event::Bind {
                role: "Physician".into(),
                agent: "dr_a".into(),
                kind: RoleKind::Human,
                principal: "Hospital".into(),
            },
            |e| matches!(e, RuntimeError::AlreadyBound { .. }),
        ),
        (
            Event::Bind {
                role: "PatientEmbedder".into(),
                agent: "matcher".into(),
                kind: RoleKind::AgenticAi,
                principal: "Hospital".into(),
            },
            |e| matches!(e, RuntimeError::InconsistentAgent(_)),
        ),
        (
            Event::Unbind {
                role: "Physician".into(),
                agent: "matcher".into(),
            },
            |e| matches!(e, RuntimeError::NotBound { .. }),
        ),
        (
            Event::Action {
                actor: "ghost".into(),
                action: "evaluate_eligibility".into(),
                subject: None,
            },
            |e| matches!(e, RuntimeError::UnknownAgent(_)),
        ),
        (
            Event::RetirePrincipal("Nobody".into()),
            |e| matches!(e, RuntimeError::UnknownPrincipal(_)),
        ),
        (
            Event::RegisterPrincipal(hospital()),
            |e| matches!(e, RuntimeError::DuplicatePrincipal(_)),
        ),
    ];
    for (event, expected) in cases {
        let err = inst.apply(event.clone()).unwrap_err();
        assert!(expected(&err), "{event:?}: {err}");
    }
    assert_eq!(inst.audit().records().len(), before);
}

#[test]
fn an_agent_may_fill_several_roles_for_one_principal() {
    let mut inst = matching(DeploymentMode::Autonomous);
    inst.bind_agent("PatientEmbedder", "matcher".into(), RoleKind::AgenticAi, "Vendor".into())
        .unwrap();
    assert_eq!(inst.roster().roles_of(&AgentId::new("matcher")).count(), 2);
}

#[test]
fn speech_acts_outside_the_contracts_are_logged_and_refused() {
    let mut inst = matching(DeploymentMode::Autonomous);
    let a = inst
        .apply_speech_act(act(
            "matcher",
            SpeechBody::Revoke {
                token: TokenRef::Id(TokenId(2)),
            },
        ))
        .unwrap();
    assert!(matches!(a.rejected, Some(SpeechRejection::Unauthorized { .. })));
    let r = inst.audit().get(a.last).unwrap();
    assert!(matches!(
        &r.detail,
        RecordDetail::SpeechAct { status: odp_governance::runtime::SpeechStatus::Rejected { .. }, .. }
    ));
    assert_eq!(inst.tokens().get(TokenId(2)).unwrap().state, TokenState::Held);
}

#[test]
fn embargo_beats_everything_for_ai_agents() {
    let mut inst = matching(DeploymentMode::Autonomous);
    let a = inst.submit_action(&"matcher".into(), "final_decision", Some("p1")).unwrap();
    assert_eq!(a.verdict.unwrap().1, VerdictOutcome::Blocked);
    let a = inst.submit_action(&"matcher".into(), "evaluate_eligibility", Some("p1")).unwrap();
    assert_eq!(a.verdict.unwrap().1, VerdictOutcome::Admissible);
    // humans hold no permit for it either: default deny
    let a = inst.submit_action(&"dr_a".into(), "final_decision", Some("p1")).unwrap();
    assert_eq!(a.verdict.unwrap().1, VerdictOutcome::Blocked);
}

#[test]
fn physician_discharges_the_decision_burden() {
    let mut inst = matching(DeploymentMode::Autonomous);
    let a = inst
        .apply_speech_act(act(
            "dr_a",
            SpeechBody::Discharge {
                token: matched("make_enrollment_decision", None),
                evidence: None,
            },
        ))
        .unwrap();
    assert!(a.rejected.is_none());
    let t = inst
        .tokens()
        .iter()
        .find(|t| t.action == "make_enrollment_decision")
        .unwrap();
    assert_eq!(t.state, TokenState::Discharged);
    assert_eq!(t.discharge.as_ref().unwrap().by, AgentId::new("dr_a"));
}

#[test]
fn the_ai_cannot_discharge_a_physician_burden() {
    let mut inst = matching(DeploymentMode::Autonomous);
    let a = inst
        .apply_speech_act(act(
            "matcher",
            SpeechBody::Discharge {
                token: TokenRef::Id(TokenId(3)),
                evidence: None,
            },
        ))
        .unwrap();
    assert!(matches!(
        a.rejected,
        Some(SpeechRejection::Deontic(DeonticError::NotHolder { .. }))
    ));
}

#[test]
fn advisory_mode_holds_ai_actions_for_a_human() {
    let mut inst = matching(DeploymentMode::Advisory);
    let a = inst.submit_action(&"matcher".into(), "evaluate_eligibility", Some("p1")).unwrap();
    let (rec, outcome) = a.verdict.unwrap();
    assert_eq!(outcome, VerdictOutcome::Recommended);
    let accept = |who: &str| {
        act(
            who,
            SpeechBody::Accept {
                target: AcceptTarget::Recommendation(rec),
            },
        )
    };
    let by_ai = inst.apply_speech_act(accept("orch")).unwrap();
    assert!(by_ai.rejected.is_some());
    let ok = inst.apply_speech_act(accept("dr_a")).unwrap();
    let (seq, outcome) = ok.verdict.unwrap();
    assert_eq!(outcome, VerdictOutcome::Admissible);
    let r = inst.audit().get(seq).unwrap();
    assert_eq!(r.actor, Some(AgentId::new("matcher")));
    let RecordDetail::Verdict { approved_by, .. } = &r.detail else {
        panic!()
    };
    assert_eq!(approved_by.as_ref(), Some(&AgentId::new("dr_a")));
    let twice = inst.apply_speech_act(accept("dr_a")).unwrap();
    assert!(twice.rejected.is_some());
}

#[test]
fn advisory_mode_does_not_hold_human_actions() {
    let mut inst = matching(DeploymentMode::Advisory);
    inst.apply_speech_act(act(
        "orch",
        SpeechBody::DeclarePermit {
            action: "order_labs".into(),
            holder: "Physician".into(),
            subject: None,
            requires: None,
        },
    ))
    .unwrap();
    let a = inst.submit_action(&"dr_a".into(), "order_labs", None).unwrap();
    assert_eq!(a.verdict.unwrap().1, VerdictOutcome::Admissible);
}

#[test]
fn supervised_mode_escalates_blocked_ai_actions() {
    let mut inst = matching(DeploymentMode::Supervised);
    let a = inst.submit_action(&"matcher".into(), "final_decision", Some("p1")).unwrap();
    let (verdict, outcome) = a.verdict.unwrap();
    assert_eq!(outcome, VerdictOutcome::Blocked);
    let esc = inst.audit().get(verdict + 1).unwrap();
    let RecordDetail::Escalation {
        role,
        trigger,
        review,
        ..
    } = &esc.detail
    else {
        panic!("{esc:?}")
    };
    assert_eq!(role.as_deref(), Some("Physician"));
    assert_eq!(*trigger, verdict);
    let review = inst.tokens().get(review.unwrap()).unwrap();
    assert_eq!(review.action, REVIEW_ACTION);
    assert_eq!(review.modality, Modality::Burden);
    assert_eq!(review.subject.as_deref(), Some("p1"));
    // blocked human actions are not escalated
    let before = inst.audit().records().len();
    inst.submit_action(&"dr_a".into(), "final_decision", None).unwrap();
    assert_eq!(inst.audit().records().len(), before + 2);
}

#[test]
fn mode_changes_are_recorded() {
    let mut inst = matching(DeploymentMode::Autonomous);
    let a = inst.set_mode(DeploymentMode::Supervised).unwrap();
    let r = inst.audit().get(a.last).unwrap();
    assert_eq!(
        r.detail,
        RecordDetail::ModeChange {
            from: DeploymentMode::Autonomous,
            to: DeploymentMode::Supervised
        }
    );
    assert_eq!(inst.mode(), DeploymentMode::Supervised);
}

#[test]
fn overdue_burdens_are_violated_before_the_next_event() {
    let mut inst = matching(DeploymentMode::Autonomous);
    let now = inst.next_seq();
    inst.apply_speech_act(act(
        "orch",
        SpeechBody::DeclareBurden {
            action: "summarize".into(),
            holder: "CriteriaMatcher".into(),
            subject: None,
            deadline: Some(now + 2),
        },
    ))
    .unwrap();
    let id = inst.tokens().iter().find(|t| t.action == "summarize").unwrap().id;
    inst.submit_action(&"matcher".into(), "evaluate_eligibility", None).unwrap();
    inst.submit_action(&"matcher".into(), "evaluate_eligibility", None).unwrap();
    assert_eq!(inst.tokens().get(id).unwrap().state, TokenState::Violated);
    let late = inst
        .apply_speech_act(act(
            "matcher",
            SpeechBody::Discharge {
                token: TokenRef::Id(id),
                evidence: None,
            },
        ))
        .unwrap();
    assert!(late.rejected.is_some());
}

#[test]
fn negotiation_protocol_is_enforced() {
    let mut inst = matching(DeploymentMode::Autonomous);
    let propose = act(
        "matcher",
        SpeechBody::Propose {
            thread: "t".into(),
            body: "enroll".into(),
        },
    );
    assert!(inst.apply_speech_act(propose.clone()).unwrap().rejected.is_none());
    assert!(inst.apply_speech_act(propose).unwrap().rejected.is_some());
    let self_accept = act(
        "matcher",
        SpeechBody::Accept {
            target: AcceptTarget::Thread("t".into()),
        },
    );
    // the matcher is not authorized to accept at all
    assert!(matches!(
        inst.apply_speech_act(self_accept).unwrap().rejected,
        Some(SpeechRejection::Unauthorized { .. })
    ));
    let counter = act(
        "dr_a",
        SpeechBody::CounterPropose {
            thread: "t".into(),
            body: "enroll after labs".into(),
        },
    );
    assert!(inst.apply_speech_act(counter).unwrap().rejected.is_none());
    let own_accept = act(
        "dr_a",
        SpeechBody::Accept {
            target: AcceptTarget::Thread("t".into()),
        },
    );
    assert!(matches!(
        inst.apply_speech_act(own_accept).unwrap().rejected,
        Some(SpeechRejection::ProtocolViolation(_))
    ));
    let unknown = act(
        "dr_a",
        SpeechBody::Reject {
            thread: "nope".into(),
            reason: None,
        },
    );
    assert!(inst.apply_speech_act(unknown).unwrap().rejected.is_some());
}

#[test]
fn delegation_chain_grows_with_each_transfer() {
    let mut inst = matching(DeploymentMode::Autonomous);
    for p in ["dr_b", "dr_c", "dr_d"] {
        inst.bind_agent("Physician", p.into(), RoleKind::Human, "Hospital".into())
            .unwrap();
    }
    for (from, to) in [("dr_a", "dr_b"), ("dr_b", "dr_c"), ("dr_c", "dr_d")] {
        let a = inst
            .apply_speech_act(act(
                from,
                SpeechBody::Transfer {
                    token: matched("make_enrollment_decision", None),
                    to: to.into(),
                },
            ))
            .unwrap();
        assert!(a.rejected.is_none(), "{from}->{to}: {:?}", a.rejected);
    }
    let t = inst
        .tokens()
        .iter()
        .find(|t| t.action == "make_enrollment_decision")
        .unwrap();
    assert_eq!(t.chain.len(), 5);
    t.chain.check().unwrap();
    assert_eq!(
        odp_governance::deontic::trace_to_principal(t).unwrap(),
        PrincipalId::new("Hospital")
    );
    let back = inst
        .apply_speech_act(act(
            "dr_d",
            SpeechBody::Transfer {
                token: matched("make_enrollment_decision", None),
                to: "dr_b".into(),
            },
        ))
        .unwrap();
    assert!(matches!(
        back.rejected,
        Some(SpeechRejection::Deontic(DeonticError::CycleDetected { .. }))
    ));
}

#[test]
fn replay_reproduces_the_trail() {
    let mut inst = matching(DeploymentMode::Supervised);
    inst.submit_action(&"matcher".into(), "final_decision", Some("p1")).unwrap();
    inst.submit_action(&"matcher".into(), "evaluate_eligibility", Some("p1")).unwrap();
    inst.apply_speech_act(act(
        "dr_a",
        SpeechBody::Discharge {
            token: matched(REVIEW_ACTION, Some("p1")),
            evidence: None,
        },
    ))
    .unwrap();
    let text = export_records(inst.name(), inst.audit().records());
    let trails = import_export(&text).unwrap();
    let again = replay_trail(&trails[0]).unwrap();
    assert_eq!(again.audit().records(), inst.audit().records());
    assert_eq!(again.tokens().states(), inst.tokens().states());
}

#[test]
fn replay_rejects_a_rehashed_forgery() {
    let mut inst = matching(DeploymentMode::Autonomous);
    let a = inst.submit_action(&"matcher".into(), "final_decision", Some("p1")).unwrap();
    let mut records = inst.audit().records().to_vec();
    let seq = a.verdict.unwrap().0 as usize;
    if let RecordDetail::Verdict { outcome, .. } = &mut records[seq].detail {
        *outcome = VerdictOutcome::Admissible;
    }
    // recompute every hash after the edit so the chain itself is intact
    for i in seq..records.len() {
        if i > 0 {
            records[i].prev_hash = records[i - 1].hash;
        }
        records[i].hash = records[i].compute_hash();
    }
    verify_chain("MatchingWorkflowCommunity", &records).unwrap();
    let trail = odp_governance::runtime::AuditTrail {
        community: "MatchingWorkflowCommunity".into(),
        records,
    };
    assert!(matches!(replay_trail(&trail), Err(ReplayError::Diverged(s)) if s as usize == seq));
}

#[test]
fn snapshots_do_not_move() {
    let mut inst = matching(DeploymentMode::Autonomous);
    let snap = inst.snapshot();
    let head = snap.head;
    inst.submit_action(&"matcher".into(), "evaluate_eligibility", None).unwrap();
    assert_eq!(snap.head, head);
    assert_eq!(snap.records().len() as u64, head.seq + 1);
    assert!(inst.snapshot().head.seq > head.seq);
}

#[test]
fn queued_submissions_from_many_threads_stay_chained() {
    let handle = InstanceHandle::spawn(matching(DeploymentMode::Autonomous));
    let start = handle.snapshot().head.seq;
    thread::scope(|s| {
        for t in 0..4 {
            let h = &handle;
            s.spawn(move || {
                for i in 0..10 {
                    let rx = h.submit(Event::Action {
                        actor: "matcher".into(),
                        action: "evaluate_eligibility".into(),
                        subject: Some(format!("p{t}_{i}")),
                    });
                    let a = rx.recv().unwrap().unwrap();
                    assert_eq!(a.verdict.unwrap().1, VerdictOutcome::Admissible);
                }
            });
        }
    });
    let snap = handle.snapshot();
    assert_eq!(snap.head.seq, start + 80);
    let inst = handle.shutdown();
    verify_chain(inst.name(), inst.audit().records()).unwrap();
    assert_eq!(inst.audit().records().len() as u64, start + 81);
}

#[test]
fn effects_land_in_enterprise_objects() {
    let (l1, _, _) = build_clinical_layers();
    let rule = |on: &str, obj: &str, eff: &str| odp_governance::runtime::EffectRule {
        trigger: odp_governance::runtime::EffectTrigger::Action(on.into()),
        object: obj.into(),
        effect: eff.parse().unwrap(),
    };
    let config = InstanceConfig::new(hospital())
        .effect(rule("read_demographics", "AuditLog", "append"))
        .effect(rule("read_demographics", "PatientDataCache", "read"));
    let mut inst = instantiate_community(l1.clone(), config).unwrap();
    inst.bind_agent("ConsentManager", "cm".into(), RoleKind::LlmAgent, "Hospital".into())
        .unwrap();
    inst.bind_agent("DataExtractionAgent", "dx".into(), RoleKind::LlmAgent, "Hospital".into())
        .unwrap();
    let cache = inst.objects()["PatientDataCache"].digest();
    inst.apply_speech_act(act(
        "cm",
        SpeechBody::Discharge {
            token: matched("verify_consent", None),
            evidence: None,
        },
    ))
    .unwrap();
    let a = inst.submit_action(&"dx".into(), "read_demographics", None).unwrap();
    assert_eq!(a.verdict.unwrap().1, VerdictOutcome::Admissible);
    assert_eq!(inst.objects()["AuditLog"].entries().len(), 1);
    assert_eq!(inst.objects()["PatientDataCache"].reads(), 1);
    assert_eq!(inst.objects()["PatientDataCache"].digest(), cache);

    let bad = InstanceConfig::new(hospital()).effect(rule("read_demographics", "AuditLog", "write"));
    assert!(matches!(
        instantiate_community(l1, bad),
        Err(RuntimeError::EffectNotPermitted { .. })
    ));
}
