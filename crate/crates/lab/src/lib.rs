//! Configuration, experiment drivers and output writers for the
//! `geomech-lab` command-line tool.

pub mod brackets;
pub mod config;
pub mod initials;
pub mod output;
pub mod run;
pub mod shift;
