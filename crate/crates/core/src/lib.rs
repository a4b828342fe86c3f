//! Library for the verifiable plumbing around an interactive camera-driven
//! video world model: trajectory <-> action codecs, data curation helpers,
//! a compressed streaming KV-cache with its attention-mask family, replayed
//! back-propagation for distribution-matching distillation, and Sim(3) /
//! relative-pose-error trajectory evaluation.

pub mod action;
pub mod attention;
pub mod cache;
pub mod curation;
pub mod distill;
pub mod eval;
pub mod synthetic;
pub mod trajectory;
