pub mod cascade;
pub mod consistency;
pub mod eval;
pub mod import;
pub mod merge;
pub mod removal;
pub mod stats;
pub mod synth;
