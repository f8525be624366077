//! Cavity-model analysis and synthesis of balanced bandpass filters built
//! on circular microstrip patch resonators.

pub mod balanced;
pub mod circuit;
pub mod cli;
pub mod config;
pub mod fields;
pub mod modal;
pub mod report;
pub mod specfun;
