//! Shared enterprise objects and the rules that make events touch them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use super::audit::Digest;
use crate::spec_lang::Discipline;
use crate::vocab::{AgentId, Seq, SpeechActKind, UnknownKeyword};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effect {
    Read,
    Append,
    /// Insert or replace the entry under the event's key.
    Write,
}

impl Effect {
    pub fn as_str(self) -> &'static str {
        match self {
            Effect::Read => "read",
            Effect::Append => "append",
            Effect::Write => "write",
        }
    }
}

impl FromStr for Effect {
    type Err = UnknownKeyword;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "read" => Ok(Effect::Read),
            "append" => Ok(Effect::Append),
            "write" => Ok(Effect::Write),
            other => Err(UnknownKeyword(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "on", content = "name", rename_all = "snake_case")]
pub enum EffectTrigger {
    /// An admissible action, or the discharge of a burden for that action.
    Action(String),
    /// An accepted speech act of this kind.
    Speech(SpeechActKind),
}

impl fmt::Display for EffectTrigger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EffectTrigger::Action(a) => write!(f, "action {a}"),
            EffectTrigger::Speech(k) => write!(f, "speech {k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EffectRule {
    pub trigger: EffectTrigger,
    pub object: String,
    pub effect: Effect,
}

/// An effect as it was applied, recorded in the triggering record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppliedEffect {
    pub object: String,
    pub effect: Effect,
    pub key: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectEntry {
    pub seq: Seq,
    pub key: Option<String>,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnterpriseObject {
    pub name: String,
    pub discipline: Discipline,
    entries: Vec<ObjectEntry>,
    reads: u64,
}

impl EnterpriseObject {
    pub fn new(name: impl Into<String>, discipline: Discipline) -> Self {
        Self {
            name: name.into(),
            discipline,
            entries: Vec::new(),
            reads: 0,
        }
    }

    pub fn entries(&self) -> &[ObjectEntry] {
        &self.entries
    }

    pub fn reads(&self) -> u64 {
        self.reads
    }

    /// Digest over the stored entries. Reads do not change it.
    pub fn digest(&self) -> Digest {
        let body = serde_json::to_vec(&self.entries).expect("entries always serialize");
        Digest(Sha256::digest(&body).into())
    }

    pub fn apply(&mut self, effect: Effect, seq: Seq, key: Option<String>, value: String) {
        match effect {
            Effect::Read => self.reads += 1,
            Effect::Append => self.entries.push(ObjectEntry { seq, key, value }),
            Effect::Write => {
                let entry = ObjectEntry { seq, key, value };
                match self.entries.iter_mut().find(|e| e.key == entry.key) {
                    Some(slot) => *slot = entry,
                    None => self.entries.push(entry),
                }
            }
        }
    }
}

/// Whether `effect` is allowed on an object with `discipline`.
pub fn permits(discipline: Discipline, effect: Effect) -> bool {
    !(discipline == Discipline::AppendOnly && effect == Effect::Write)
}

pub(crate) fn entry_value(actor: &AgentId, what: &str) -> String {
    format!("{actor} {what}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_leave_digest_alone() {
        let mut o = EnterpriseObject::new("Cache", Discipline::ReadWrite);
        let d0 = o.digest();
        o.apply(Effect::Read, 1, None, "x".into());
        assert_eq!(o.digest(), d0);
        assert_eq!(o.reads(), 1);
    }

    #[test]
    fn write_replaces_by_key() {
        let mut o = EnterpriseObject::new("Cache", Discipline::ReadWrite);
        o.apply(Effect::Write, 1, Some("p1".into()), "a".into());
        o.apply(Effect::Write, 2, Some("p1".into()), "b".into());
        o.apply(Effect::Write, 3, Some("p2".into()), "c".into());
        assert_eq!(o.entries().len(), 2);
        assert_eq!(o.entries()[0].value, "b");
    }

    #[test]
    fn append_only_refuses_write() {
        assert!(!permits(Discipline::AppendOnly, Effect::Write));
        assert!(permits(Discipline::AppendOnly, Effect::Append));
        assert!(permits(Discipline::ReadWrite, Effect::Write));
    }
}
