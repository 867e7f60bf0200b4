//! Statistical verification of the generator and its supporting lemmas.

pub mod checks;
pub mod experiments;
pub mod lemmas;
pub mod oracle;
pub mod output;
pub mod report;
pub mod sampler;
pub mod stats;
pub mod suite;
