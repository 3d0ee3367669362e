//! File formats, scenario configuration and the command-line front end for
//! [`terramob_core`].

pub mod asc;
pub mod cli;
pub mod config;
pub mod formats;
pub mod report;
