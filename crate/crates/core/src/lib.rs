pub mod deontic;
pub mod runtime;
pub mod scenarios;
pub mod spec_lang;
pub mod verifier;
pub mod vocab;
