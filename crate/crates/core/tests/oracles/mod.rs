//! Independent reference models used by the property tests and the
//! acceptance suite. None of them call into the code they check except to
//! drive it.

#![allow(dead_code)]

pub mod docs;
pub mod lifecycle;
pub mod token_model;
pub mod world;
