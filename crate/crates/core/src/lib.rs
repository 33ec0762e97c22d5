//! Deterministic core of the single-logarithm laboratory.
//!
//! Everything here is pure: normalizers and window laws, a counter-based
//! RNG with per-cell streams, the truncation split and window statistics,
//! subsequence lattices, counting functions of growth functions, and the
//! exponential bounds. IO, configuration and parallel Monte Carlo live in
//! the `lsl-lab` crate.
#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bounds;
pub mod dist;
pub mod error;
pub mod field;
pub mod math;
pub mod moments;
pub mod normalizers;
pub mod quad;
pub mod rng;
pub mod slope;
pub mod subseq;

pub use error::{Error, Result};
pub use normalizers::{AxisRule, NormalizerBundle, SlowlyVarying, WindowLaw};
