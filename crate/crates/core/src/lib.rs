//! Ledger, registries and identity services for transferable development
//! rights.

pub mod accounts;
pub mod amount;
pub mod application;
pub mod clock;
pub mod config;
pub mod crypto;
pub mod devnet;
pub mod docstore;
pub mod identity;
pub mod ledger;
pub mod persist;
pub mod roles;
pub mod service;
pub mod state;
pub mod token;
