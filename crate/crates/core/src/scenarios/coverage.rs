use std::collections::BTreeSet;

use super::ScenarioReport;
use crate::runtime::{RecordDetail, SpeechStatus, VerdictOutcome};
use crate::deontic::TokenState;
use crate::vocab::{Modality, SpeechActKind};

/// Which speech act kinds and template policies a set of runs exercised.
///
/// A permit policy counts once it justifies an admissible action, an
/// embargo once it blocks one, and a burden once it is discharged. Tokens
/// declared at run time count toward the template policy with the same
/// modality and action.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Coverage {
    pub speech_kinds: BTreeSet<SpeechActKind>,
    /// (community, modality, action)
    pub exercised: BTreeSet<(String, Modality, String)>,
    /// Template policies that were not exercised.
    pub missing_policies: BTreeSet<(String, Modality, String)>,
}

impl Coverage {
    pub fn missing_speech_kinds(&self) -> Vec<SpeechActKind> {
        SpeechActKind::ALL
            .iter()
            .copied()
            .filter(|k| !self.speech_kinds.contains(k))
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.missing_policies.is_empty() && self.missing_speech_kinds().is_empty()
    }
}

pub fn coverage<'a>(reports: impl IntoIterator<Item = &'a ScenarioReport>) -> Coverage {
    let mut cov = Coverage::default();
    let mut policies = BTreeSet::new();
    for report in reports {
        for c in &report.communities {
            let name = c.instance.name().to_string();
            for p in &c.instance.template().policies {
                policies.insert((name.clone(), p.deontic.modality, p.deontic.action.clone()));
            }
            let tokens = c.instance.tokens();
            for r in c.instance.audit().records() {
                match &r.detail {
                    RecordDetail::SpeechAct {
                        act,
                        status: SpeechStatus::Accepted,
                        ..
                    } => {
                        cov.speech_kinds.insert(act.kind());
                    }
                    RecordDetail::Verdict {
                        outcome,
                        permit,
                        blocked_by,
                        ..
                    } => {
                        let used: Vec<_> = match outcome {
                            VerdictOutcome::Blocked => blocked_by.clone(),
                            _ => permit.iter().copied().collect(),
                        };
                        for id in used {
                            let t = tokens.get(id).filter(|t| {
                                (*outcome == VerdictOutcome::Blocked) == (t.modality == Modality::Embargo)
                            });
                            if let Some(t) = t {
                                cov.exercised.insert((name.clone(), t.modality, t.action.clone()));
                            }
                        }
                    }
                    RecordDetail::TokenTransition {
                        token,
                        to: TokenState::Discharged,
                        ..
                    } => {
                        cov.exercised
                            .insert((name.clone(), Modality::Burden, token.action.clone()));
                    }
                    _ => {}
                }
            }
        }
    }
    cov.missing_policies = policies.difference(&cov.exercised).cloned().collect();
    cov
}
