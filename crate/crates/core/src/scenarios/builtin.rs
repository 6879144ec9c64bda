use super::{parse_script, Scenario};
use crate::spec_lang::{parse_spec, CommunityTemplate};
use crate::vocab::Modality;

const DATA_ACCESS: &str = include_str!("../../assets/data_access.community");
const MATCHING_WORKFLOW: &str = include_str!("../../assets/matching_workflow.community");
const NEGOTIATION: &str = include_str!("../../assets/negotiation.community");

const SCRIPTS: &[(&str, &str)] = &[
    ("happy_path", include_str!("../../assets/scenarios/happy_path.script")),
    ("consent_gate", include_str!("../../assets/scenarios/consent_gate.script")),
    ("consent_bypass", include_str!("../../assets/scenarios/consent_bypass.script")),
    ("rogue_ai", include_str!("../../assets/scenarios/rogue_ai.script")),
    ("advisory_review", include_str!("../../assets/scenarios/advisory_review.script")),
    ("phi_negotiation", include_str!("../../assets/scenarios/phi_negotiation.script")),
];

pub const BUILTIN_NAMES: &[&str] = &[
    "happy_path",
    "consent_gate",
    "consent_bypass",
    "rogue_ai",
    "advisory_review",
    "phi_negotiation",
];

/// Data access, matching workflow and cross-site negotiation communities.
pub fn build_clinical_layers() -> (CommunityTemplate, CommunityTemplate, CommunityTemplate) {
    let parse = |src| parse_spec(src).expect("bundled community specs parse");
    (parse(DATA_ACCESS), parse(MATCHING_WORKFLOW), parse(NEGOTIATION))
}

/// The data access community with the consent requirement removed from
/// its permits.
pub fn consent_bypass_template() -> CommunityTemplate {
    let (mut t, _, _) = build_clinical_layers();
    for p in &mut t.policies {
        if p.deontic.modality == Modality::Permit {
            p.requires = None;
        }
    }
    t
}

pub fn builtin_scenario(name: &str) -> Option<Scenario> {
    let (_, src) = SCRIPTS.iter().find(|(n, _)| *n == name)?;
    let (l1, l2, l3) = build_clinical_layers();
    let templates = match name {
        "happy_path" => vec![l1, l2],
        "consent_gate" => vec![l1],
        "consent_bypass" => vec![consent_bypass_template()],
        "rogue_ai" | "advisory_review" => vec![l2],
        _ => vec![l3],
    };
    let script = parse_script(src).expect("bundled scripts parse");
    Some(Scenario::new(name, templates, script))
}

pub fn builtin_scenarios() -> Vec<Scenario> {
    BUILTIN_NAMES
        .iter()
        .map(|n| builtin_scenario(n).expect("listed"))
        .collect()
}
