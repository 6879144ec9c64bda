//! Scenario scripts: one directive or event per line.
//!
//! ```text
//! community <Name>                      open or switch to a community block
//! owner <principal> <kind>              principal issuing the static policies
//! mode <advisory|supervised|autonomous> initial mode, or a mode change once events ran
//! effect action <name> <Object> <read|append|write>
//! effect speech <kind> <Object> <read|append|write>
//! check safety <guarded_action> <guard_burden>
//! check authority <decision_action> <role>
//! check prohibition <action> <group>
//! check accountability
//!
//! [@label] principal <id> <organization|natural_person>
//! [@label] retire <principal>
//! [@label] bind <role> <agent> <kind> <principal>
//! [@label] unbind <role> <agent>
//! [@label] action <actor> <action> [subject]
//! [@label] act <sender> <speech_kind> key=value ...
//!
//! expect verdict @label <admissible|blocked|recommended>
//! expect violation <safety|authority|prohibition|accountability> @label
//! expect rejected @label
//! expect error @label
//! ```
//!
//! Values containing spaces are written in double quotes. A word starting
//! with `#` outside quotes starts a comment. Token references (`token=`) are either `#<id>`
//! or an action name, matched together with `subject=`.

use std::collections::BTreeMap;
use std::fmt;

use crate::deontic::{Principal, PrincipalKind};
use crate::runtime::{
    AcceptTarget, Clause, Effect, EffectRule, EffectTrigger, Event, SpeechAct, SpeechBody,
    TokenRef, VerdictOutcome,
};
use crate::verifier::{PropertyKind, PropertySpec};
use crate::vocab::{AgentId, DeploymentMode, PrincipalId, RoleKind, Seq, SpeechActKind, TokenId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ScriptError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ScriptError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Configuration of one community instance in a script.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub community: String,
    pub owner: Option<Principal>,
    pub mode: DeploymentMode,
    pub effects: Vec<EffectRule>,
    pub checks: Vec<PropertySpec>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepEvent {
    Event(Event),
    /// A human accepting the recommendation produced by a labelled action.
    Approve { sender: AgentId, label: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub block: usize,
    pub label: Option<String>,
    pub event: StepEvent,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expectation {
    Verdict {
        label: String,
        outcome: VerdictOutcome,
        line: usize,
    },
    Violation {
        kind: PropertyKind,
        label: String,
        line: usize,
    },
    Rejected {
        label: String,
        line: usize,
    },
    Error {
        label: String,
        line: usize,
    },
}

impl Expectation {
    pub fn label(&self) -> &str {
        match self {
            Expectation::Verdict { label, .. }
            | Expectation::Violation { label, .. }
            | Expectation::Rejected { label, .. }
            | Expectation::Error { label, .. } => label,
        }
    }

    pub fn line(&self) -> usize {
        match self {
            Expectation::Verdict { line, .. }
            | Expectation::Violation { line, .. }
            | Expectation::Rejected { line, .. }
            | Expectation::Error { line, .. } => *line,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Script {
    pub blocks: Vec<Block>,
    pub steps: Vec<Step>,
    pub expectations: Vec<Expectation>,
    /// When set, the listed violations are the only ones allowed. Otherwise
    /// further violations of an expected property are tolerated.
    pub exact_violations: bool,
}

impl Script {
    pub fn step_by_label(&self, label: &str) -> Option<(usize, &Step)> {
        self.steps
            .iter()
            .enumerate()
            .find(|(_, s)| s.label.as_deref() == Some(label))
    }
}

fn tokenize(line: &str, n: usize) -> Result<Vec<String>, ScriptError> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut in_word = false;
    let mut quoted = false;
    for c in line.chars() {
        match c {
            '"' => {
                quoted = !quoted;
                in_word = true;
            }
            '#' if !quoted && !in_word => break,
            c if c.is_whitespace() && !quoted => {
                if in_word {
                    out.push(std::mem::take(&mut cur));
                    in_word = false;
                }
            }
            c => {
                cur.push(c);
                in_word = true;
            }
        }
    }
    if quoted {
        return Err(ScriptError {
            line: n,
            message: "unterminated quote".into(),
        });
    }
    if in_word {
        out.push(cur);
    }
    Ok(out)
}

struct Parser {
    script: Script,
    current: Option<usize>,
    /// Whether each block has seen an event yet.
    started: Vec<bool>,
}

pub fn parse_script(text: &str) -> Result<Script, ScriptError> {
    let mut p = Parser {
        script: Script {
            blocks: Vec::new(),
            steps: Vec::new(),
            expectations: Vec::new(),
            exact_violations: true,
        },
        current: None,
        started: Vec::new(),
    };
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let words = tokenize(raw, n)?;
        if words.is_empty() {
            continue;
        }
        p.line(n, &words)?;
    }
    Ok(p.script)
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, ScriptError> {
    Err(ScriptError {
        line,
        message: message.into(),
    })
}

fn keyword<T: std::str::FromStr>(n: usize, what: &str, s: &str) -> Result<T, ScriptError> {
    s.parse()
        .or_else(|_| err(n, format!("unknown {what} `{s}`")))
}

fn arity(n: usize, words: &[String], min: usize, max: usize, usage: &str) -> Result<(), ScriptError> {
    if words.len() < min || words.len() > max {
        return err(n, format!("usage: {usage}"));
    }
    Ok(())
}

fn label_ref(n: usize, s: &str) -> Result<String, ScriptError> {
    match s.strip_prefix('@') {
        Some(l) if !l.is_empty() => Ok(l.to_string()),
        _ => err(n, format!("expected a @label, found `{s}`")),
    }
}

impl Parser {
    fn block(&mut self, n: usize) -> Result<usize, ScriptError> {
        self.current
            .map_or_else(|| err(n, "no `community` line before this one"), Ok)
    }

    fn config(&mut self, n: usize, what: &str) -> Result<usize, ScriptError> {
        let b = self.block(n)?;
        if self.started[b] {
            return err(n, format!("`{what}` must come before the block's first event"));
        }
        Ok(b)
    }

    fn line(&mut self, n: usize, words: &[String]) -> Result<(), ScriptError> {
        let (label, words) = match words[0].strip_prefix('@') {
            Some(l) if !l.is_empty() => (Some(l.to_string()), &words[1..]),
            Some(_) => return err(n, "empty label"),
            None => (None, words),
        };
        if words.is_empty() {
            return err(n, "label without an event");
        }
        let head = words[0].as_str();
        if label.is_some() && matches!(head, "community" | "owner" | "effect" | "check" | "expect") {
            return err(n, format!("`{head}` lines cannot carry a label"));
        }
        match head {
            "community" => {
                arity(n, words, 2, 2, "community <Name>")?;
                let name = &words[1];
                let idx = match self.script.blocks.iter().position(|b| b.community == *name) {
                    Some(i) => i,
                    None => {
                        self.script.blocks.push(Block {
                            community: name.clone(),
                            owner: None,
                            mode: DeploymentMode::default(),
                            effects: Vec::new(),
                            checks: Vec::new(),
                            line: n,
                        });
                        self.started.push(false);
                        self.script.blocks.len() - 1
                    }
                };
                self.current = Some(idx);
            }
            "owner" => {
                arity(n, words, 3, 3, "owner <principal> <organization|natural_person>")?;
                let b = self.config(n, "owner")?;
                self.script.blocks[b].owner = Some(principal(n, &words[1], &words[2])?);
            }
            "mode" => {
                arity(n, words, 2, 2, "mode <advisory|supervised|autonomous>")?;
                let mode: DeploymentMode = keyword(n, "mode", &words[1])?;
                let b = self.block(n)?;
                if self.started[b] {
                    self.push(n, label, StepEvent::Event(Event::SetMode(mode)))?;
                } else if label.is_some() {
                    return err(n, "an initial `mode` cannot carry a label");
                } else {
                    self.script.blocks[b].mode = mode;
                }
            }
            "effect" => {
                arity(n, words, 5, 5, "effect <action|speech> <name> <Object> <read|append|write>")?;
                let b = self.config(n, "effect")?;
                let trigger = match words[1].as_str() {
                    "action" => EffectTrigger::Action(words[2].clone()),
                    "speech" => EffectTrigger::Speech(keyword(n, "speech act", &words[2])?),
                    other => return err(n, format!("unknown effect trigger `{other}`")),
                };
                let effect: Effect = keyword(n, "effect", &words[4])?;
                self.script.blocks[b].effects.push(EffectRule {
                    trigger,
                    object: words[3].clone(),
                    effect,
                });
            }
            "check" => {
                let b = self.config(n, "check")?;
                let spec = match words.get(1).map(String::as_str) {
                    Some("safety") => {
                        arity(n, words, 4, 4, "check safety <guarded_action> <guard_burden>")?;
                        PropertySpec::safety(&words[2], &words[3])
                    }
                    Some("authority") => {
                        arity(n, words, 4, 4, "check authority <decision_action> <role>")?;
                        PropertySpec::authority(&words[2], &words[3])
                    }
                    Some("prohibition") => {
                        arity(n, words, 4, 4, "check prohibition <action> <group>")?;
                        PropertySpec::prohibition(&words[2], &words[3])
                    }
                    Some("accountability") => {
                        arity(n, words, 2, 2, "check accountability")?;
                        PropertySpec::PrincipalTraceability
                    }
                    _ => return err(n, "usage: check <safety|authority|prohibition|accountability> ..."),
                };
                self.script.blocks[b].checks.push(spec);
            }
            "expect" => self.expect(n, words)?,
            "principal" => {
                arity(n, words, 3, 3, "principal <id> <organization|natural_person>")?;
                let p = principal(n, &words[1], &words[2])?;
                self.push(n, label, StepEvent::Event(Event::RegisterPrincipal(p)))?;
            }
            "retire" => {
                arity(n, words, 2, 2, "retire <principal>")?;
                let p = PrincipalId::new(&words[1]);
                self.push(n, label, StepEvent::Event(Event::RetirePrincipal(p)))?;
            }
            "bind" => {
                arity(n, words, 5, 5, "bind <role> <agent> <kind> <principal>")?;
                let kind: RoleKind = keyword(n, "agent kind", &words[3])?;
                let e = Event::Bind {
                    role: words[1].clone(),
                    agent: AgentId::new(&words[2]),
                    kind,
                    principal: PrincipalId::new(&words[4]),
                };
                self.push(n, label, StepEvent::Event(e))?;
            }
            "unbind" => {
                arity(n, words, 3, 3, "unbind <role> <agent>")?;
                let e = Event::Unbind {
                    role: words[1].clone(),
                    agent: AgentId::new(&words[2]),
                };
                self.push(n, label, StepEvent::Event(e))?;
            }
            "action" => {
                arity(n, words, 3, 4, "action <actor> <action> [subject]")?;
                let e = Event::Action {
                    actor: AgentId::new(&words[1]),
                    action: words[2].clone(),
                    subject: words.get(3).cloned(),
                };
                self.push(n, label, StepEvent::Event(e))?;
            }
            "act" => {
                if words.len() < 3 {
                    return err(n, "usage: act <sender> <speech_kind> key=value ...");
                }
                let kind: SpeechActKind = keyword(n, "speech act", &words[2])?;
                let event = speech(n, AgentId::new(&words[1]), kind, &words[3..])?;
                self.push(n, label, event)?;
            }
            other => return err(n, format!("unknown directive `{other}`")),
        }
        Ok(())
    }

    fn push(&mut self, n: usize, label: Option<String>, event: StepEvent) -> Result<(), ScriptError> {
        let b = self.block(n)?;
        if let Some(l) = &label {
            if self.script.step_by_label(l).is_some() {
                return err(n, format!("label @{l} is used twice"));
            }
        }
        self.started[b] = true;
        self.script.steps.push(Step {
            block: b,
            label,
            event,
            line: n,
        });
        Ok(())
    }

    fn expect(&mut self, n: usize, words: &[String]) -> Result<(), ScriptError> {
        let e = match words.get(1).map(String::as_str) {
            Some("verdict") => {
                arity(n, words, 4, 4, "expect verdict @label <admissible|blocked|recommended>")?;
                let outcome = match words[3].as_str() {
                    "admissible" => VerdictOutcome::Admissible,
                    "blocked" => VerdictOutcome::Blocked,
                    "recommended" => VerdictOutcome::Recommended,
                    other => return err(n, format!("unknown verdict `{other}`")),
                };
                Expectation::Verdict {
                    label: label_ref(n, &words[2])?,
                    outcome,
                    line: n,
                }
            }
            Some("violation") => {
                arity(n, words, 4, 4, "expect violation <property> @label")?;
                Expectation::Violation {
                    kind: keyword(n, "property", &words[2])?,
                    label: label_ref(n, &words[3])?,
                    line: n,
                }
            }
            Some("rejected") => {
                arity(n, words, 3, 3, "expect rejected @label")?;
                Expectation::Rejected {
                    label: label_ref(n, &words[2])?,
                    line: n,
                }
            }
            Some("error") => {
                arity(n, words, 3, 3, "expect error @label")?;
                Expectation::Error {
                    label: label_ref(n, &words[2])?,
                    line: n,
                }
            }
            _ => return err(n, "usage: expect <verdict|violation|rejected|error> ..."),
        };
        self.script.expectations.push(e);
        Ok(())
    }
}

fn principal(n: usize, id: &str, kind: &str) -> Result<Principal, ScriptError> {
    let kind: PrincipalKind = keyword(n, "principal kind", kind)?;
    Ok(Principal {
        id: PrincipalId::new(id),
        name: id.to_string(),
        kind,
    })
}

fn speech(n: usize, sender: AgentId, kind: SpeechActKind, args: &[String]) -> Result<StepEvent, ScriptError> {
    let mut kv: BTreeMap<&str, &str> = BTreeMap::new();
    for a in args {
        let Some((k, v)) = a.split_once('=') else {
            return err(n, format!("expected key=value, found `{a}`"));
        };
        if kv.insert(k, v).is_some() {
            return err(n, format!("key `{k}` given twice"));
        }
    }
    let allowed: &[&str] = match kind {
        SpeechActKind::DeclareBurden => &["action", "holder", "subject", "deadline"],
        SpeechActKind::DeclarePermit => &["action", "holder", "subject", "requires"],
        SpeechActKind::DeclareEmbargo => &["action", "holder", "subject", "unless"],
        SpeechActKind::Transfer => &["token", "subject", "to"],
        SpeechActKind::Discharge => &["token", "subject", "evidence"],
        SpeechActKind::Grant => &["action", "holder", "subject"],
        SpeechActKind::Revoke => &["token", "subject"],
        SpeechActKind::Propose | SpeechActKind::CounterPropose => &["thread", "body"],
        SpeechActKind::Accept => &["thread", "recommendation"],
        SpeechActKind::Reject => &["thread", "reason"],
        SpeechActKind::Escalate => &["condition", "subject"],
    };
    if let Some(k) = kv.keys().find(|k| !allowed.contains(k)) {
        return err(n, format!("`{kind}` does not take `{k}`"));
    }
    let need = |k: &str| -> Result<String, ScriptError> {
        kv.get(k)
            .map(|v| v.to_string())
            .map_or_else(|| err(n, format!("`{kind}` needs `{k}=`")), Ok)
    };
    let opt = |k: &str| kv.get(k).map(|v| v.to_string());
    let seq = |k: &str| -> Result<Option<Seq>, ScriptError> {
        opt(k)
            .map(|v| v.parse().or_else(|_| err(n, format!("`{k}` must be a number"))))
            .transpose()
    };
    let clause = |k: &str| -> Result<Option<Clause>, ScriptError> {
        opt(k)
            .map(|v| match v.split_once(':') {
                Some((action, holder)) => Ok(Clause {
                    action: action.to_string(),
                    holder: holder.to_string(),
                }),
                None => err(n, format!("`{k}` takes action:holder")),
            })
            .transpose()
    };
    let token = || -> Result<TokenRef, ScriptError> {
        let t = need("token")?;
        match t.strip_prefix('#') {
            Some(id) => {
                let id = id
                    .parse()
                    .or_else(|_| err(n, format!("bad token id `{t}`")))?;
                Ok(TokenRef::Id(TokenId(id)))
            }
            None => Ok(TokenRef::Match {
                action: t,
                subject: opt("subject"),
            }),
        }
    };
    let body = match kind {
        SpeechActKind::DeclareBurden => SpeechBody::DeclareBurden {
            action: need("action")?,
            holder: need("holder")?,
            subject: opt("subject"),
            deadline: seq("deadline")?,
        },
        SpeechActKind::DeclarePermit => SpeechBody::DeclarePermit {
            action: need("action")?,
            holder: need("holder")?,
            subject: opt("subject"),
            requires: clause("requires")?,
        },
        SpeechActKind::DeclareEmbargo => SpeechBody::DeclareEmbargo {
            action: need("action")?,
            holder: need("holder")?,
            subject: opt("subject"),
            unless: clause("unless")?,
        },
        SpeechActKind::Transfer => SpeechBody::Transfer {
            token: token()?,
            to: AgentId::new(need("to")?),
        },
        SpeechActKind::Discharge => SpeechBody::Discharge {
            token: token()?,
            evidence: seq("evidence")?,
        },
        SpeechActKind::Grant => SpeechBody::Grant {
            action: need("action")?,
            holder: need("holder")?,
            subject: opt("subject"),
        },
        SpeechActKind::Revoke => SpeechBody::Revoke { token: token()? },
        SpeechActKind::Propose => SpeechBody::Propose {
            thread: need("thread")?,
            body: need("body")?,
        },
        SpeechActKind::CounterPropose => SpeechBody::CounterPropose {
            thread: need("thread")?,
            body: need("body")?,
        },
        SpeechActKind::Accept => match (opt("thread"), opt("recommendation")) {
            (Some(thread), None) => SpeechBody::Accept {
                target: AcceptTarget::Thread(thread),
            },
            (None, Some(r)) => {
                if let Some(l) = r.strip_prefix('@') {
                    return Ok(StepEvent::Approve {
                        sender,
                        label: l.to_string(),
                    });
                }
                let seq = r
                    .parse()
                    .or_else(|_| err(n, "`recommendation` takes a @label or a seq"))?;
                SpeechBody::Accept {
                    target: AcceptTarget::Recommendation(seq),
                }
            }
            _ => return err(n, "`accept` takes exactly one of `thread=` and `recommendation=`"),
        },
        SpeechActKind::Reject => SpeechBody::Reject {
            thread: need("thread")?,
            reason: opt("reason"),
        },
        SpeechActKind::Escalate => SpeechBody::Escalate {
            condition: need("condition")?,
            subject: opt("subject"),
        },
    };
    Ok(StepEvent::Event(Event::Speech(SpeechAct { sender, body })))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoted_values_and_comments() {
        let w = tokenize(r#"act a propose thread=t body="two words" # trailing"#, 1).unwrap();
        assert_eq!(w, ["act", "a", "propose", "thread=t", "body=two words"]);
    }

    #[test]
    fn config_after_event_is_refused() {
        let src = "community C\nowner P organization\nprincipal Q organization\neffect action a O read\n";
        let e = parse_script(src).unwrap_err();
        assert_eq!(e.line, 4);
    }

    #[test]
    fn mode_is_config_then_event() {
        let src = "community C\nmode advisory\nprincipal Q organization\nmode supervised\n";
        let s = parse_script(src).unwrap();
        assert_eq!(s.blocks[0].mode, DeploymentMode::Advisory);
        assert_eq!(
            s.steps[1].event,
            StepEvent::Event(Event::SetMode(DeploymentMode::Supervised))
        );
    }

    #[test]
    fn token_refs() {
        let src = "community C\n@d act x discharge token=verify subject=p1\nact x revoke token=#4\n";
        let s = parse_script(src).unwrap();
        let StepEvent::Event(Event::Speech(a)) = &s.steps[0].event else {
            panic!()
        };
        assert_eq!(
            a.body,
            SpeechBody::Discharge {
                token: TokenRef::Match {
                    action: "verify".into(),
                    subject: Some("p1".into())
                },
                evidence: None
            }
        );
        let StepEvent::Event(Event::Speech(a)) = &s.steps[1].event else {
            panic!()
        };
        assert_eq!(a.body, SpeechBody::Revoke { token: TokenRef::Id(TokenId(4)) });
    }

    #[test]
    fn unknown_keys_and_duplicates() {
        assert!(parse_script("community C\nact x revoke token=a color=red\n").is_err());
        assert!(parse_script("community C\n@a retire P\n@a retire Q\n").is_err());
        assert!(parse_script("community C\nact x accept\n").is_err());
    }
}
