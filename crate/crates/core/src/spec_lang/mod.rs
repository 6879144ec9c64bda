//! The community specification language: parsing, validation and
//! canonical pretty-printing.
//!
//! ```text
//! spec      := community+
//! community := "community" IDENT "{" member* "}"
//! member    := role | policy | contract | object | group
//! role      := "role" IDENT ":" kind card? ";"
//! kind      := "human" | "agentic_ai" | "llm_agent" | "system"
//! card      := "[" INT ".." (INT | "*") "]"
//! group     := "group" IDENT "=" "{" IDENT ("," IDENT)* "}" ";"
//! policy    := "policy" deontic ("requires" "discharged" deontic)? ("unless" deontic)? ";"
//! deontic   := ("burden" | "permit" | "embargo") "(" IDENT "," target ")"
//! target    := IDENT | "ALL" | "ALL_AI_AGENTS"
//! contract  := "contract" IDENT "{" clause* "}"
//! clause    := "allow" IDENT ":" speechkind ("," speechkind)* ";"
//!            | "escalate" "when" IDENT "to" IDENT ";"
//! object    := "object" IDENT (":" ("append_only" | "read_write"))? ";"
//! ```
//!
//! `#` starts a comment that runs to the end of the line.

pub mod ast;
mod format;
mod lexer;
mod parser;
mod validate;

use std::fmt;

pub use ast::*;
pub use format::{format_spec, format_specs};
pub use validate::{
    has_errors, unconditional_conflicts, validate_template, FindingCode, Severity,
    ValidationFinding,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub pos: Pos,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: expected ", self.pos)?;
        match self.expected.as_slice() {
            [one] => write!(f, "{one}")?,
            many => write!(f, "one of {}", many.join(", "))?,
        }
        write!(f, ", found {}", self.found)
    }
}

/// Parses a source containing exactly one community.
pub fn parse_spec(src: &str) -> Result<CommunityTemplate, ParseError> {
    let mut p = parser::Parser::new(src)?;
    let mut docs = p.document()?;
    if docs.len() != 1 {
        let second = &docs[1];
        return Err(ParseError {
            pos: second.pos,
            expected: vec!["end of input".into()],
            found: format!("second community `{}`", second.name),
        });
    }
    Ok(docs.remove(0))
}

/// Parses a source containing one or more communities.
pub fn parse_specs(src: &str) -> Result<Vec<CommunityTemplate>, ParseError> {
    parser::Parser::new(src)?.document()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::{Modality, RoleKind, SpeechActKind};

    #[test]
    fn minimal_role_defaults_to_exactly_one() {
        let t = parse_spec("community C { role Physician : human; }").unwrap();
        assert_eq!(t.name, "C");
        assert_eq!(t.roles.len(), 1);
        assert_eq!(t.roles[0].kind, RoleKind::Human);
        assert_eq!(t.roles[0].cardinality, Cardinality { min: 1, max: Some(1) });
    }

    #[test]
    fn embargo_on_builtin_group() {
        let t = parse_spec(
            "community M {\n role CriteriaMatcher : agentic_ai;\n policy embargo(final_decision, ALL_AI_AGENTS);\n}",
        )
        .unwrap();
        assert_eq!(
            t.policies[0].deontic,
            Deontic::new(Modality::Embargo, "final_decision", Target::AllAiAgents)
        );
    }

    #[test]
    fn invalid_role_kind_points_at_kind_token() {
        let err = parse_spec("community C { role X : robot; }").unwrap_err();
        assert_eq!((err.pos.line, err.pos.column), (1, 24));
        assert!(err.expected.contains(&"`human`".to_string()));
        assert_eq!(err.found, "`robot`");
    }

    #[test]
    fn positions_are_recorded() {
        let t = parse_spec("community C {\n  role A : human;\n  object O;\n}").unwrap();
        assert_eq!((t.roles[0].pos.line, t.roles[0].pos.column), (2, 3));
        assert_eq!((t.objects[0].pos.line, t.objects[0].pos.column), (3, 3));
    }

    #[test]
    fn cardinality_forms() {
        let t = parse_spec("community C { role A : human [0..*]; role B : system [2..5]; }").unwrap();
        assert_eq!(t.roles[0].cardinality, Cardinality { min: 0, max: None });
        assert_eq!(t.roles[1].cardinality, Cardinality { min: 2, max: Some(5) });
    }

    #[test]
    fn full_policy_and_contract_syntax() {
        let src = r#"
            community N {
              role DataGovernanceOfficer : human;
              role NegotiationCoordinator : agentic_ai;
              group DataOfficer = { DataGovernanceOfficer };
              policy permit(negotiate, NegotiationCoordinator) requires discharged burden(validate, NegotiationCoordinator);
              policy embargo(share, ALL) unless permit(share_specific, DataOfficer);
              contract Esc {
                allow NegotiationCoordinator : propose, counter_propose, escalate;
                escalate when low_confidence to DataGovernanceOfficer;
              }
              object History : append_only;
            }
        "#;
        let t = parse_spec(src).unwrap();
        assert!(t.policies[0].requires.is_some());
        assert_eq!(
            t.policies[1].unless.as_ref().unwrap().target,
            Target::Named("DataOfficer".into())
        );
        assert!(t.authorizes("NegotiationCoordinator", SpeechActKind::CounterPropose));
        assert!(!t.authorizes("DataGovernanceOfficer", SpeechActKind::Propose));
        assert_eq!(t.escalation_target("low_confidence"), Some("DataGovernanceOfficer"));
        assert_eq!(t.objects[0].discipline, Discipline::AppendOnly);
        assert!(validate_template(&t).is_empty());
    }

    #[test]
    fn multiple_communities() {
        let ts = parse_specs("community A {} community B { object X; }").unwrap();
        assert_eq!(ts.len(), 2);
        let err = parse_spec("community A {} community B {}").unwrap_err();
        assert_eq!(err.expected, vec!["end of input".to_string()]);
    }

    #[test]
    fn missing_semicolon_lists_alternatives() {
        let err = parse_spec("community C { policy permit(a, ALL) }").unwrap_err();
        assert_eq!(err.expected, vec!["`requires`", "`unless`", "`;`"]);
        assert_eq!(err.found, "`}`");
    }

    #[test]
    fn empty_community_formats_to_bare_braces() {
        let t = parse_spec("community C { }").unwrap();
        assert_eq!(format_spec(&t), "community C {\n}\n");
    }

    #[test]
    fn dangling_target_is_an_error() {
        let t = parse_spec("community C { role A : human; policy permit(x, Ghost); }").unwrap();
        let f = validate_template(&t);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].severity, Severity::Error);
        assert_eq!(f[0].code, FindingCode::UnresolvedTarget);
        assert!(f[0].message.contains("unresolved target"));
    }

    #[test]
    fn conflict_is_a_single_warning() {
        let t = parse_spec(
            "community C { role R : human; policy permit(a, R); policy embargo(a, R); }",
        )
        .unwrap();
        let f = validate_template(&t);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].severity, Severity::Warning);
        assert!(f[0].message.contains("unconditional conflict; embargo wins"));
        assert!(!has_errors(&f));
    }

    #[test]
    fn linked_unless_suppresses_conflict() {
        let t = parse_spec(
            "community C { role R : human; policy permit(a, R); policy embargo(a, R) unless permit(a, R); }",
        )
        .unwrap();
        assert!(validate_template(&t).is_empty());
    }

    #[test]
    fn misplaced_clauses() {
        let t = parse_spec(
            "community C { role R : human; policy permit(a, R) unless permit(b, R); policy embargo(a, R) requires discharged permit(c, R); }",
        )
        .unwrap();
        let codes: Vec<_> = validate_template(&t).into_iter().map(|f| f.code).collect();
        assert!(codes.contains(&FindingCode::UnlessOnNonEmbargo));
        assert!(codes.contains(&FindingCode::RequiresNotBurden));
        assert!(codes.contains(&FindingCode::RequiresOnNonPermit));
    }

    #[test]
    fn duplicate_and_reserved_names() {
        let t = parse_spec(
            "community C { role R : human; role R : system; role ALL : human; object O; object O; contract K {} contract K {} group R = { R }; }",
        )
        .unwrap();
        let dupes = validate_template(&t)
            .into_iter()
            .filter(|f| f.code == FindingCode::DuplicateName)
            .count();
        assert_eq!(dupes, 4);
    }

    #[test]
    fn bad_cardinality_and_contract_roles() {
        let t = parse_spec(
            "community C { role R : human [3..2]; role S : system; contract K { allow Ghost : propose; escalate when x to S; } }",
        )
        .unwrap();
        let f = validate_template(&t);
        let codes: Vec<_> = f.iter().map(|f| f.code).collect();
        assert!(codes.contains(&FindingCode::BadCardinality));
        assert!(codes.contains(&FindingCode::UnresolvedContractRole));
        assert!(codes.contains(&FindingCode::EscalationToNonHuman));
    }
}
