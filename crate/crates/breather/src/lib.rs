//! File formats, configuration, threading and the command line driver on
//! top of [`breather_core`].

pub mod cli;
pub mod config;
pub mod exec;
pub mod io;
pub mod svg;

pub use breather_core as core;
