use std::collections::{BTreeMap, BTreeSet};

use super::script::{Expectation, StepEvent};
use super::{Scenario, ScenarioError};
use crate::runtime::{
    export_trails, instantiate_community, AcceptTarget, Applied, CommunityInstance, Event,
    InstanceConfig, RecordDetail, RuntimeError, SpeechAct, SpeechBody,
};
use crate::verifier::{check_properties, PropertyKind, PropertySpec, Violation};
use crate::vocab::Seq;

/// What happened to one labelled step.
#[derive(Debug, Clone)]
pub struct LabelOutcome {
    pub block: usize,
    pub line: usize,
    pub result: Result<Applied, RuntimeError>,
}

#[derive(Debug, Clone)]
pub struct CommunityRun {
    pub instance: CommunityInstance,
    pub checks: Vec<PropertySpec>,
    /// Offline check of the finished trail.
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub scenario: String,
    pub communities: Vec<CommunityRun>,
    pub outcomes: BTreeMap<String, LabelOutcome>,
    /// Result of every step in script order; `None` when the step could
    /// not be formed, such as accepting a recommendation that never came.
    pub steps: Vec<Option<Result<Applied, RuntimeError>>>,
    pub matches: Vec<String>,
    pub mismatches: Vec<String>,
}

impl ScenarioReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }

    pub fn community(&self, name: &str) -> Option<&CommunityRun> {
        self.communities.iter().find(|c| c.instance.name() == name)
    }

    pub fn violations(&self) -> impl Iterator<Item = &Violation> {
        self.communities.iter().flat_map(|c| &c.violations)
    }

    pub fn outcome(&self, label: &str) -> Option<&Applied> {
        self.outcomes.get(label).and_then(|o| o.result.as_ref().ok())
    }

    /// All trails in the line format read back by `import_export`.
    pub fn export(&self) -> String {
        export_trails(
            self.communities
                .iter()
                .map(|c| (c.instance.name(), c.instance.audit().records())),
        )
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "scenario {}: {}\n",
            self.scenario,
            if self.passed() { "passed" } else { "FAILED" }
        );
        for c in &self.communities {
            out += &format!(
                "  {}: {} records, {} violations\n",
                c.instance.name(),
                c.instance.audit().records().len(),
                c.violations.len()
            );
            for v in &c.violations {
                out += &format!("    {v}\n");
            }
        }
        for m in &self.mismatches {
            out += &format!("  mismatch: {m}\n");
        }
        out
    }
}

/// Executes a scenario's steps in script order and compares the result
/// with its expectations.
///
/// Static problems with the script are errors; anything that goes wrong at
/// run time is a mismatch in the report.
pub fn run_scenario(s: &Scenario) -> Result<ScenarioReport, ScenarioError> {
    s.check()?;
    let script = &s.script;
    let mut instances = Vec::new();
    for b in &script.blocks {
        let t = s.template(&b.community).expect("checked").clone();
        let mut config = InstanceConfig::new(b.owner.clone().expect("checked")).mode(b.mode);
        config.effects = b.effects.clone();
        config.monitors = b.checks.clone();
        let inst = instantiate_community(t, config).map_err(|source| ScenarioError::Instantiate {
            community: b.community.clone(),
            source,
        })?;
        instances.push(inst);
    }

    let mut outcomes: BTreeMap<String, LabelOutcome> = BTreeMap::new();
    let mut mismatches = Vec::new();
    let mut steps = Vec::new();
    let expected_errors: BTreeSet<&str> = script
        .expectations
        .iter()
        .filter_map(|e| match e {
            Expectation::Error { label, .. } => Some(label.as_str()),
            _ => None,
        })
        .collect();

    for step in &script.steps {
        let event = match &step.event {
            StepEvent::Event(e) => Ok(e.clone()),
            StepEvent::Approve { sender, label } => match outcomes.get(label).map(|o| &o.result) {
                Some(Ok(Applied {
                    verdict: Some((seq, _)),
                    ..
                })) => Ok(Event::Speech(SpeechAct::new(
                    sender.clone(),
                    SpeechBody::Accept {
                        target: AcceptTarget::Recommendation(*seq),
                    },
                ))),
                _ => Err(format!("@{label} produced no verdict to accept")),
            },
        };
        let result = match event {
            Ok(e) => instances[step.block].apply(e),
            Err(m) => {
                mismatches.push(format!("line {}: {m}", step.line));
                steps.push(None);
                continue;
            }
        };
        if let Err(e) = &result {
            let expected = step
                .label
                .as_deref()
                .is_some_and(|l| expected_errors.contains(l));
            if !expected {
                mismatches.push(format!("line {}: unexpected error: {e}", step.line));
            }
        }
        steps.push(Some(result.clone()));
        if let Some(l) = &step.label {
            outcomes.insert(
                l.clone(),
                LabelOutcome {
                    block: step.block,
                    line: step.line,
                    result,
                },
            );
        }
    }

    let mut communities = Vec::new();
    for (b, inst) in script.blocks.iter().zip(instances) {
        let violations = check_properties(inst.audit().records(), &b.checks)?;
        let online: Vec<&Violation> = inst
            .audit()
            .records()
            .iter()
            .filter_map(|r| match &r.detail {
                RecordDetail::PropertyViolation { violation } => Some(violation),
                _ => None,
            })
            .collect();
        if online.len() != violations.len() || online.iter().zip(&violations).any(|(a, b)| *a != b) {
            mismatches.push(format!(
                "{}: online monitor and offline check disagree",
                b.community
            ));
        }
        communities.push(CommunityRun {
            instance: inst,
            checks: b.checks.clone(),
            violations,
        });
    }

    let mut matches = Vec::new();
    let mut expected_violations: BTreeSet<(usize, PropertyKind, Seq)> = BTreeSet::new();
    for e in &script.expectations {
        let Some(o) = outcomes.get(e.label()) else {
            mismatches.push(format!("line {}: @{} never ran", e.line(), e.label()));
            continue;
        };
        let what = match e {
            Expectation::Verdict { label, outcome, .. } => {
                let got = o.result.as_ref().ok().and_then(|a| a.verdict).map(|(_, v)| v);
                (got == Some(*outcome)).then_some(()).ok_or_else(|| {
                    format!("@{label}: expected verdict {outcome:?}, got {got:?}")
                })
            }
            Expectation::Rejected { label, .. } => {
                let got = o.result.as_ref().ok().and_then(|a| a.rejected.as_ref());
                got.is_some()
                    .then_some(())
                    .ok_or_else(|| format!("@{label}: expected the speech act to be rejected"))
            }
            Expectation::Error { label, .. } => o
                .result
                .is_err()
                .then_some(())
                .ok_or_else(|| format!("@{label}: expected a runtime error")),
            Expectation::Violation { kind, label, .. } => match &o.result {
                Ok(a) => {
                    expected_violations.insert((o.block, *kind, a.anchor()));
                    let seen = communities[o.block]
                        .violations
                        .iter()
                        .any(|v| v.kind() == *kind && v.at_seq == a.anchor());
                    seen.then_some(()).ok_or_else(|| {
                        format!("@{label}: expected a {kind} violation at seq {}", a.anchor())
                    })
                }
                Err(_) => Err(format!("@{label}: step failed, no {kind} violation to anchor")),
            },
        };
        match what {
            Ok(()) => matches.push(format!("line {}: ok", e.line())),
            Err(m) => mismatches.push(format!("line {}: {m}", e.line())),
        }
    }
    let expected_kinds: BTreeSet<PropertyKind> =
        expected_violations.iter().map(|(_, k, _)| *k).collect();
    for (block, c) in communities.iter().enumerate() {
        for v in &c.violations {
            let listed = expected_violations.contains(&(block, v.kind(), v.at_seq));
            let tolerated = !script.exact_violations && expected_kinds.contains(&v.kind());
            if !listed && !tolerated {
                mismatches.push(format!("{}: unexpected {v}", c.instance.name()));
            }
        }
    }

    Ok(ScenarioReport {
        scenario: s.name.clone(),
        communities,
        outcomes,
        steps,
        matches,
        mismatches,
    })
}
