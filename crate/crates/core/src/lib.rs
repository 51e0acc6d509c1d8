//! Recursive multikernel gamma-filtering in a reproducing kernel Hilbert space.
//!
//! A gamma-filter defined directly in feature space turns every filter tap into
//! its own kernel: tap 1 is an ordinary kernel on (optionally time-delay
//! embedded) inputs and every later tap is a leaky integration of the one before
//! it, so its kernel values follow a recursion over time. This crate computes
//! those kernel stacks and learns from them:
//!
//! - [`kernel`]: base kernels, embeddings, the recursive kernel stack (reference
//!   and incremental evaluators) and a streaming evaluator for online use.
//! - [`batch`]: one kernel ridge regressor per tap, combined by stacking
//!   (least squares, ridge or l1), plus composite-average and single-kernel
//!   baselines and an exhaustive grid search.
//! - [`online`]: a bank of kernel LMS filters, one per tap, with an adaptive
//!   linear combiner, and the classical single-kernel KLMS baseline.
//! - [`datasets`]: benchmark generators and the normalized MSE metric.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is off.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod batch;
pub mod datasets;
mod error;
pub mod kernel;
mod linalg;
pub mod online;

pub use error::{Error, Result};
