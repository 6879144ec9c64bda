//! Recursive-descent parser for `.community` sources.
//!
//! Keywords are contextual: `role`, `policy` and friends are only special at
//! the start of a member, so they remain usable as action names.

use super::ast::*;
use super::lexer::{tokenize, Spanned, Tok};
use super::ParseError;
use crate::vocab::{Modality, RoleKind, SpeechActKind};

pub(crate) struct Parser {
    toks: Vec<Spanned>,
    at: usize,
}

impl Parser {
    pub(crate) fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Self {
            toks: tokenize(src)?,
            at: 0,
        })
    }

    fn peek(&self) -> &Spanned {
        &self.toks[self.at]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let t = self.peek();
        ParseError {
            pos: t.pos,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.tok.to_string(),
        }
    }

    fn expect(&mut self, tok: Tok, label: &str) -> Result<Pos, ParseError> {
        if self.peek().tok == tok {
            Ok(self.bump().pos)
        } else {
            Err(self.error(&[label]))
        }
    }

    fn ident(&mut self, label: &str) -> Result<(String, Pos), ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                let pos = self.bump().pos;
                Ok((s, pos))
            }
            _ => Err(self.error(&[label])),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<Pos, ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) if s == kw => Ok(self.bump().pos),
            _ => Err(self.error(&[&format!("`{kw}`")])),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    pub(crate) fn document(&mut self) -> Result<Vec<CommunityTemplate>, ParseError> {
        let mut out = vec![self.community()?];
        while self.peek().tok != Tok::Eof {
            out.push(self.community()?);
        }
        Ok(out)
    }

    fn community(&mut self) -> Result<CommunityTemplate, ParseError> {
        let pos = self.keyword("community")?;
        let (name, _) = self.ident("community name")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut t = CommunityTemplate::empty(name);
        t.pos = pos;
        loop {
            let kw = match &self.peek().tok {
                Tok::RBrace => {
                    self.bump();
                    return Ok(t);
                }
                Tok::Ident(s) => s.clone(),
                _ => return Err(self.member_error()),
            };
            match kw.as_str() {
                "role" => t.roles.push(self.role()?),
                "group" => t.groups.push(self.group()?),
                "policy" => t.policies.push(self.policy()?),
                "contract" => t.contracts.push(self.contract()?),
                "object" => t.objects.push(self.object()?),
                _ => return Err(self.member_error()),
            }
        }
    }

    fn member_error(&self) -> ParseError {
        self.error(&[
            "`role`",
            "`group`",
            "`policy`",
            "`contract`",
            "`object`",
            "`}`",
        ])
    }

    fn role(&mut self) -> Result<RoleDecl, ParseError> {
        let pos = self.keyword("role")?;
        let (name, _) = self.ident("role name")?;
        self.expect(Tok::Colon, "`:`")?;
        let kind = match &self.peek().tok {
            Tok::Ident(s) => match s.parse::<RoleKind>() {
                Ok(k) => {
                    self.bump();
                    k
                }
                Err(_) => return Err(self.kind_error()),
            },
            _ => return Err(self.kind_error()),
        };
        let cardinality = if self.peek().tok == Tok::LBracket {
            self.cardinality()?
        } else {
            Cardinality::ONE
        };
        self.expect(Tok::Semi, "`;`")?;
        Ok(RoleDecl {
            name,
            kind,
            cardinality,
            pos,
        })
    }

    fn kind_error(&self) -> ParseError {
        self.error(&["`human`", "`agentic_ai`", "`llm_agent`", "`system`"])
    }

    fn cardinality(&mut self) -> Result<Cardinality, ParseError> {
        self.expect(Tok::LBracket, "`[`")?;
        let min = self.int()?;
        self.expect(Tok::DotDot, "`..`")?;
        let max = match self.peek().tok {
            Tok::Star => {
                self.bump();
                None
            }
            Tok::Int(_) => Some(self.int()?),
            _ => return Err(self.error(&["integer", "`*`"])),
        };
        self.expect(Tok::RBracket, "`]`")?;
        Ok(Cardinality { min, max })
    }

    fn int(&mut self) -> Result<u32, ParseError> {
        match self.peek().tok {
            Tok::Int(n) => {
                self.bump();
                Ok(n)
            }
            _ => Err(self.error(&["integer"])),
        }
    }

    fn group(&mut self) -> Result<GroupDecl, ParseError> {
        let pos = self.keyword("group")?;
        let (name, _) = self.ident("group name")?;
        self.expect(Tok::Eq, "`=`")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut members = vec![self.ident("role name")?.0];
        while self.peek().tok == Tok::Comma {
            self.bump();
            members.push(self.ident("role name")?.0);
        }
        self.expect(Tok::RBrace, "`}`")?;
        self.expect(Tok::Semi, "`;`")?;
        Ok(GroupDecl { name, members, pos })
    }

    fn policy(&mut self) -> Result<PolicyDecl, ParseError> {
        let pos = self.keyword("policy")?;
        let deontic = self.deontic()?;
        let requires = if self.at_keyword("requires") {
            self.bump();
            self.keyword("discharged")?;
            Some(self.deontic()?)
        } else {
            None
        };
        let unless = if self.at_keyword("unless") {
            self.bump();
            Some(self.deontic()?)
        } else {
            None
        };
        if self.peek().tok != Tok::Semi {
            let mut expected = Vec::new();
            if requires.is_none() && unless.is_none() {
                expected.push("`requires`");
            }
            if unless.is_none() {
                expected.push("`unless`");
            }
            expected.push("`;`");
            return Err(self.error(&expected));
        }
        self.bump();
        Ok(PolicyDecl {
            deontic,
            requires,
            unless,
            pos,
        })
    }

    fn deontic(&mut self) -> Result<Deontic, ParseError> {
        let modality = match &self.peek().tok {
            Tok::Ident(s) => match s.parse::<Modality>() {
                Ok(m) => {
                    self.bump();
                    m
                }
                Err(_) => return Err(self.error(&["`burden`", "`permit`", "`embargo`"])),
            },
            _ => return Err(self.error(&["`burden`", "`permit`", "`embargo`"])),
        };
        self.expect(Tok::LParen, "`(`")?;
        let (action, _) = self.ident("action name")?;
        self.expect(Tok::Comma, "`,`")?;
        let (target, _) = self.ident("target")?;
        self.expect(Tok::RParen, "`)`")?;
        Ok(Deontic {
            modality,
            action,
            target: Target::from_ident(&target),
        })
    }

    fn contract(&mut self) -> Result<ContractDecl, ParseError> {
        let pos = self.keyword("contract")?;
        let (name, _) = self.ident("contract name")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut clauses = Vec::new();
        loop {
            match &self.peek().tok {
                Tok::RBrace => {
                    self.bump();
                    break;
                }
                Tok::Ident(s) if s == "allow" => {
                    let pos = self.bump().pos;
                    let (role, _) = self.ident("role name")?;
                    self.expect(Tok::Colon, "`:`")?;
                    let mut kinds = vec![self.speech_kind()?];
                    while self.peek().tok == Tok::Comma {
                        self.bump();
                        kinds.push(self.speech_kind()?);
                    }
                    self.expect(Tok::Semi, "`;`")?;
                    clauses.push(ContractClause::Allow { role, kinds, pos });
                }
                Tok::Ident(s) if s == "escalate" => {
                    let pos = self.bump().pos;
                    self.keyword("when")?;
                    let (condition, _) = self.ident("condition name")?;
                    self.keyword("to")?;
                    let (role, _) = self.ident("role name")?;
                    self.expect(Tok::Semi, "`;`")?;
                    clauses.push(ContractClause::Escalate {
                        condition,
                        role,
                        pos,
                    });
                }
                _ => return Err(self.error(&["`allow`", "`escalate`", "`}`"])),
            }
        }
        Ok(ContractDecl { name, clauses, pos })
    }

    fn speech_kind(&mut self) -> Result<SpeechActKind, ParseError> {
        if let Tok::Ident(s) = &self.peek().tok {
            if let Ok(k) = s.parse::<SpeechActKind>() {
                self.bump();
                return Ok(k);
            }
        }
        let names: Vec<String> = SpeechActKind::ALL
            .iter()
            .map(|k| format!("`{}`", k.as_str()))
            .collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        Err(self.error(&refs))
    }

    fn object(&mut self) -> Result<ObjectDecl, ParseError> {
        let pos = self.keyword("object")?;
        let (name, _) = self.ident("object name")?;
        let discipline = if self.peek().tok == Tok::Colon {
            self.bump();
            match &self.peek().tok {
                Tok::Ident(s) if s == "append_only" => {
                    self.bump();
                    Discipline::AppendOnly
                }
                Tok::Ident(s) if s == "read_write" => {
                    self.bump();
                    Discipline::ReadWrite
                }
                _ => return Err(self.error(&["`append_only`", "`read_write`"])),
            }
        } else {
            Discipline::ReadWrite
        };
        self.expect(Tok::Semi, "`;`")?;
        Ok(ObjectDecl {
            name,
            discipline,
            pos,
        })
    }
}
