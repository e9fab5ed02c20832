//! REST service and command-line front end for the TDR registry.

pub mod cli;
pub mod http;
