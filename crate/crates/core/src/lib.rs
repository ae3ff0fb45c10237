//! Phase-0 style beacon chain core: SSZ, merkleization, committees, the state
//! transition, fork choice and FFG accountability checks, plus a deterministic
//! chain simulator.

pub mod arith;
pub mod committees;
pub mod ffg;
pub mod fork_choice;
pub mod merkle;
pub mod preset;
pub mod sim;
pub mod ssz;
pub mod transition;
pub mod types;
