//! Scripted multi-community scenarios: the clinical layers, a small script
//! language driving them, expectations, and violation injection.

mod builtin;
mod coverage;
mod inject;
mod run;
mod script;

pub use builtin::{
    build_clinical_layers, builtin_scenario, builtin_scenarios, consent_bypass_template,
    BUILTIN_NAMES,
};
pub use coverage::{coverage, Coverage};
pub use inject::{inject_violation, InjectError, INJECTED};
pub use run::{run_scenario, CommunityRun, LabelOutcome, ScenarioReport};
pub use script::{parse_script, Block, Expectation, Script, ScriptError, Step, StepEvent};

use std::collections::BTreeSet;

use crate::runtime::{Event, SpeechBody, REVIEW_ACTION};
use crate::spec_lang::{parse_specs, CommunityTemplate, ParseError};
use crate::vocab::{AgentId, PrincipalId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScenarioError {
    #[error("script: {0}")]
    Script(#[from] ScriptError),
    #[error("spec: {0}")]
    Parse(#[from] ParseError),
    #[error("cannot instantiate `{community}`: {source}")]
    Instantiate {
        community: String,
        source: crate::runtime::RuntimeError,
    },
    #[error(transparent)]
    Verify(#[from] crate::verifier::VerifyError),
}

/// A script together with the templates its blocks instantiate.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub templates: Vec<CommunityTemplate>,
    pub script: Script,
}

impl Scenario {
    pub fn new(name: impl Into<String>, templates: Vec<CommunityTemplate>, script: Script) -> Self {
        Self {
            name: name.into(),
            templates,
            script,
        }
    }

    pub fn from_sources(name: &str, specs: &str, script: &str) -> Result<Self, ScenarioError> {
        Ok(Self::new(name, parse_specs(specs)?, parse_script(script)?))
    }

    pub fn template(&self, community: &str) -> Option<&CommunityTemplate> {
        self.templates.iter().find(|t| t.name == community)
    }

    /// Static checks run before anything executes: every name the script
    /// uses must be declared, cast or defined earlier in its block.
    pub fn check(&self) -> Result<(), ScriptError> {
        let s = &self.script;
        let fail = |line: usize, message: String| Err(ScriptError { line, message });
        let mut templates = Vec::new();
        for b in &s.blocks {
            let Some(t) = self.template(&b.community) else {
                return fail(b.line, format!("unknown community `{}`", b.community));
            };
            if b.owner.is_none() {
                return fail(b.line, format!("block `{}` has no `owner` line", b.community));
            }
            for spec in &b.checks {
                if let Err(e) = spec.check_identifiers(t) {
                    return fail(b.line, e.to_string());
                }
            }
            for e in &b.effects {
                if t.object(&e.object).is_none() {
                    return fail(b.line, format!("unknown enterprise object `{}`", e.object));
                }
            }
            templates.push(t);
        }

        struct Cast {
            agents: BTreeSet<AgentId>,
            principals: BTreeSet<PrincipalId>,
            actions: BTreeSet<String>,
        }
        let mut cast: Vec<Cast> = s
            .blocks
            .iter()
            .zip(&templates)
            .map(|(b, t)| Cast {
                agents: BTreeSet::new(),
                principals: b.owner.iter().map(|p| p.id.clone()).collect(),
                actions: t
                    .mentioned_actions()
                    .map(str::to_string)
                    .chain([REVIEW_ACTION.to_string()])
                    .collect(),
            })
            .collect();
        let mut seen_labels = BTreeSet::new();

        for step in &s.steps {
            let c = &mut cast[step.block];
            let t = templates[step.block];
            let need_agent = |c: &Cast, a: &AgentId| {
                if c.agents.contains(a) {
                    Ok(())
                } else {
                    fail(step.line, format!("agent `{a}` is used before any `bind` casts it"))
                }
            };
            match &step.event {
                StepEvent::Event(Event::RegisterPrincipal(p)) => {
                    c.principals.insert(p.id.clone());
                }
                StepEvent::Event(Event::RetirePrincipal(p)) => {
                    if !c.principals.contains(p) {
                        return fail(step.line, format!("principal `{p}` is never declared"));
                    }
                }
                StepEvent::Event(Event::Bind {
                    role,
                    agent,
                    principal,
                    ..
                }) => {
                    if t.role(role).is_none() {
                        return fail(step.line, format!("unknown role `{role}` in `{}`", t.name));
                    }
                    if !c.principals.contains(principal) {
                        return fail(step.line, format!("principal `{principal}` is never declared"));
                    }
                    c.agents.insert(agent.clone());
                }
                StepEvent::Event(Event::Unbind { role, agent }) => {
                    if t.role(role).is_none() {
                        return fail(step.line, format!("unknown role `{role}` in `{}`", t.name));
                    }
                    need_agent(c, agent)?;
                }
                StepEvent::Event(Event::SetMode(_)) => {}
                StepEvent::Event(Event::Action { actor, action, .. }) => {
                    need_agent(c, actor)?;
                    if !c.actions.contains(action) {
                        return fail(
                            step.line,
                            format!("action `{action}` is neither in `{}` nor declared earlier", t.name),
                        );
                    }
                }
                StepEvent::Event(Event::Speech(act)) => {
                    need_agent(c, &act.sender)?;
                    match &act.body {
                        SpeechBody::DeclareBurden { action, .. }
                        | SpeechBody::DeclarePermit { action, .. }
                        | SpeechBody::DeclareEmbargo { action, .. }
                        | SpeechBody::Grant { action, .. } => {
                            c.actions.insert(action.clone());
                        }
                        SpeechBody::Transfer { to, .. } => need_agent(c, to)?,
                        _ => {}
                    }
                }
                StepEvent::Approve { sender, label } => {
                    need_agent(c, sender)?;
                    let earlier = s
                        .steps
                        .iter()
                        .take_while(|o| !std::ptr::eq(*o, step))
                        .any(|o| o.block == step.block && o.label.as_deref() == Some(label.as_str()));
                    if !earlier {
                        return fail(
                            step.line,
                            format!("@{label} is not an earlier step of this community"),
                        );
                    }
                }
            }
            if let Some(l) = &step.label {
                seen_labels.insert(l.as_str());
            }
        }
        for e in &s.expectations {
            if !seen_labels.contains(e.label()) {
                return fail(e.line(), format!("undefined label @{}", e.label()));
            }
        }
        Ok(())
    }
}
