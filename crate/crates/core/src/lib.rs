// Errors carry exact rationals; they are built only on failure paths.
#![allow(clippy::result_large_err)]

pub mod cantor;
pub mod exact;
pub mod fixtures;
pub mod layering;
pub mod martingale;
pub mod report;
pub mod schnorr;
pub mod stepfn;
