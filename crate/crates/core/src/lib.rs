//! Contract-menu design for differentially private data marketplaces.
//!
//! A data broker sells noisy query access at privacy levels `eps` through a
//! menu of contracts `(p, eps, s)` — price, privacy level, fine. Buyers come
//! in `n` honest types plus an adversarial type that resells data and weighs
//! detection fines against its resale benefit. The crate solves the
//! non-adversarial screening program exactly, the adversarial program by
//! branch and bound, provides the constant-factor approximation algorithms
//! with their guarantees, and ships a simulator plus a small differentially
//! private query engine for end-to-end runs.

pub mod adv;
pub mod approx;
pub mod cli;
pub mod dp;
pub mod model;
pub mod nonadv;
pub mod presets;
pub mod scenario;
pub mod sim;
