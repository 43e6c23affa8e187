//! Online adaptive targeting under sparse network interference.
//!
//! Rewards follow `Y_t = X* a_t + eps_t`, where `a_t` is a treatment
//! allocation in `{-1, +1}^d` and `X*` is a row-sparse effect matrix. The
//! crate provides the reward model ([`model`], [`environment`]), instance
//! generators ([`instances`]), estimation primitives ([`estimators`]), four
//! learning policies plus an oracle ([`policies`]), a seeded experiment
//! harness ([`harness`]) and the configuration/CSV layer used by the
//! `netbandit` binary ([`config`], [`output`]).

pub mod config;
pub mod environment;
pub mod estimators;
pub mod harness;
pub mod instances;
pub mod model;
pub mod output;
pub mod policies;
pub mod rng;
