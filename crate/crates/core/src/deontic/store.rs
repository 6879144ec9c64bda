use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::token::{DeonticToken, TokenState};
use crate::vocab::{Modality, TokenId};

/// All tokens of one community instance, keyed by id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenStore {
    tokens: BTreeMap<TokenId, DeonticToken>,
    next_id: u64,
}

impl Default for TokenStore {
    fn default() -> Self {
        Self {
            tokens: BTreeMap::new(),
            next_id: 1,
        }
    }
}

impl TokenStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// The id the next inserted token will receive.
    pub fn next_id(&self) -> TokenId {
        TokenId(self.next_id)
    }

    /// Inserts a token created with [`TokenStore::next_id`].
    pub fn insert(&mut self, token: DeonticToken) {
        assert_eq!(token.id, self.next_id(), "token ids are assigned in order");
        self.next_id += 1;
        self.tokens.insert(token.id, token);
    }

    /// Replaces an existing token with its successor state.
    pub fn update(&mut self, token: DeonticToken) {
        let slot = self
            .tokens
            .get_mut(&token.id)
            .expect("update of a token that was never inserted");
        *slot = token;
    }

    pub fn get(&self, id: TokenId) -> Option<&DeonticToken> {
        self.tokens.get(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &DeonticToken> {
        self.tokens.values()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn active(&self, modality: Modality) -> impl Iterator<Item = &DeonticToken> {
        self.tokens
            .values()
            .filter(move |t| t.modality == modality && t.state == TokenState::Held)
    }

    /// Whether a burden for `action` scoped exactly to `subject` has been discharged.
    pub fn discharged(&self, action: &str, subject: Option<&str>) -> bool {
        self.tokens.values().any(|t| {
            t.modality == Modality::Burden
                && t.state == TokenState::Discharged
                && t.action == action
                && t.subject.as_deref() == subject
        })
    }

    /// (id, state) pairs; a compact fingerprint for replay comparisons.
    pub fn states(&self) -> Vec<(TokenId, TokenState)> {
        self.tokens.values().map(|t| (t.id, t.state)).collect()
    }
}
