//! Algebraic analysis of translation-based block ciphers: S-box differential
//! and anti-invariance measures, properness of mixing layers, a primitivity
//! certifier for the group generated by the round functions, and a
//! brute-force block-system oracle to cross-check it on small instances.

pub mod blocksys;
pub mod cipher;
pub mod error;
pub mod field;
pub mod gf2;
pub mod mixing;
pub mod vbf;

pub use error::{Error, Result};
pub use gf2::{BitMatrix, BrickDecomposition, Subspace, Vec2};
pub use vbf::Vbf;
