use std::fmt;

use serde::{Deserialize, Serialize};

use super::DeonticError;
use crate::vocab::{AgentId, PrincipalId, Seq};

/// One hop in a delegation chain.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", content = "id", rename_all = "snake_case")]
pub enum ChainNode {
    Principal(PrincipalId),
    Agent(AgentId),
    /// A role holding the token until one of its fillers acts on it.
    Role(String),
    Group(String),
}

impl fmt::Display for ChainNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChainNode::Principal(p) => write!(f, "principal:{p}"),
            ChainNode::Agent(a) => write!(f, "agent:{a}"),
            ChainNode::Role(r) => write!(f, "role:{r}"),
            ChainNode::Group(g) => write!(f, "group:{g}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DelegationLink {
    pub from: ChainNode,
    pub to: ChainNode,
    pub at: Seq,
}

/// Ordered record of how a token travelled from its issuing party to its
/// current holder. Only ever appended to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DelegationChain {
    links: Vec<DelegationLink>,
}

impl DelegationChain {
    pub fn issued(principal: PrincipalId, holder: ChainNode, at: Seq) -> Self {
        Self {
            links: vec![DelegationLink {
                from: ChainNode::Principal(principal),
                to: holder,
                at,
            }],
        }
    }

    /// Builds a chain from raw links without checking it; used when
    /// reconstructing from external data.
    pub fn from_links(links: Vec<DelegationLink>) -> Self {
        Self { links }
    }

    pub fn links(&self) -> &[DelegationLink] {
        &self.links
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Nodes from the head to the current holder.
    pub fn nodes(&self) -> Vec<&ChainNode> {
        let mut out: Vec<&ChainNode> = self.links.iter().map(|l| &l.from).take(1).collect();
        out.extend(self.links.iter().map(|l| &l.to));
        out
    }

    pub fn head(&self) -> Option<&ChainNode> {
        self.links.first().map(|l| &l.from)
    }

    pub fn tail(&self) -> Option<&ChainNode> {
        self.links.last().map(|l| &l.to)
    }

    pub fn contains_recipient(&self, node: &ChainNode) -> bool {
        self.links.iter().any(|l| &l.to == node)
    }

    pub(crate) fn push(&mut self, from: ChainNode, to: ChainNode, at: Seq) {
        self.links.push(DelegationLink { from, to, at });
    }

    /// Checks the chain invariants: non-empty, connected, no repeated
    /// recipient, and headed by a principal.
    pub fn check(&self) -> Result<(), DeonticError> {
        let Some(first) = self.links.first() else {
            return Err(DeonticError::MalformedChain("empty chain".into()));
        };
        if !matches!(first.from, ChainNode::Principal(_)) {
            return Err(DeonticError::MalformedChain(format!(
                "chain head {} is not a principal",
                first.from
            )));
        }
        for w in self.links.windows(2) {
            if w[0].to != w[1].from {
                return Err(DeonticError::MalformedChain(format!(
                    "link {} -> {} does not continue from {}",
                    w[1].from, w[1].to, w[0].to
                )));
            }
        }
        for (i, l) in self.links.iter().enumerate() {
            if self.links[..i].iter().any(|prev| prev.to == l.to) {
                return Err(DeonticError::MalformedChain(format!(
                    "{} appears twice as recipient",
                    l.to
                )));
            }
        }
        Ok(())
    }

    /// The responsible party at the head of a well-formed chain.
    pub fn principal(&self) -> Result<&PrincipalId, DeonticError> {
        self.check()?;
        match self.head() {
            Some(ChainNode::Principal(p)) => Ok(p),
            _ => unreachable!("check() guarantees a principal head"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn agent(s: &str) -> ChainNode {
        ChainNode::Agent(AgentId::new(s))
    }

    #[test]
    fn well_formed_chain() {
        let mut c = DelegationChain::issued(PrincipalId::new("H"), agent("a"), 1);
        c.push(agent("a"), agent("b"), 2);
        assert!(c.check().is_ok());
        assert_eq!(c.principal().unwrap().as_str(), "H");
        assert_eq!(c.nodes().len(), 3);
    }

    #[test]
    fn agent_head_is_malformed() {
        let c = DelegationChain::from_links(vec![DelegationLink {
            from: agent("x"),
            to: agent("y"),
            at: 0,
        }]);
        assert!(matches!(c.principal(), Err(DeonticError::MalformedChain(_))));
    }

    #[test]
    fn disconnected_and_cyclic_chains() {
        let mut c = DelegationChain::issued(PrincipalId::new("H"), agent("a"), 1);
        c.push(agent("z"), agent("b"), 2);
        assert!(c.check().is_err());

        let mut c = DelegationChain::issued(PrincipalId::new("H"), agent("a"), 1);
        c.push(agent("a"), agent("b"), 2);
        c.push(agent("b"), agent("a"), 3);
        assert!(c.check().is_err());
        assert!(DelegationChain::default().check().is_err());
    }
}
