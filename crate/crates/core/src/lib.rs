//! Mining, splitting and scoring of context-dependent translation examples.
//!
//! The pipeline reads annotated parallel documents ([`annotation`]), applies
//! declarative rule packs ([`rules`]) with the help of context solvers
//! ([`solvers`]), writes balanced evaluation splits ([`split`]) and scores
//! system outputs by whole-word matching ([`score`]).

pub mod annotation;
pub mod extract;
pub mod rules;
pub mod score;
pub mod solvers;
pub mod split;
pub mod text;
