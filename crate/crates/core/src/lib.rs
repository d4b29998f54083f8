//! Concrete and abstract P(CEK*)S machines for a concurrent higher-order
//! language, with control-flow (flows-to) and may-happen-in-parallel
//! analyses derived from them.
//!
//! The crate is `no_std` and only needs `alloc`. File handling, the command
//! line and report formats live in the companion `pceks` crate.

#![no_std]

extern crate alloc;

pub mod concrete;
pub mod control;
pub mod domain;
pub mod flow;
pub mod machine;
pub mod simulation;
pub mod singleton;
pub mod syntax;
