//! Oracles shared by the acceptance suite and the integration tests.
#![allow(dead_code)]

pub mod fidelity;
pub mod truth_table;
