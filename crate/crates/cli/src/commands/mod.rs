pub mod chain_report;
pub mod common;
pub mod corrupt;
pub mod eval;
pub mod gradcheck;
pub mod oversample;
pub mod select_rig;
pub mod simulate;
pub mod stats;
pub mod toygen;
pub mod train;
