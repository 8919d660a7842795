//! Variational quantum circuits trained as antiderivatives.
//!
//! A circuit model `Q(x; θ)` is fitted so that its input derivative
//! `q = ∂ₓQ` matches a target integrand; definite integrals are then
//! endpoint differences of `Q`. This crate holds the whole numerical core
//! (simulator, ansätze, gradients, samplers, losses, optimizer, noise
//! models, metrics, benchmarks) and needs only `alloc`.

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod ansatz;
pub mod benchmarks;
pub mod circuit;
mod error;
pub mod experiment;
pub mod gradients;
pub mod losses;
pub mod metrics;
pub mod noise;
pub mod quadrature;
pub mod quantum;
pub mod rng;
pub mod samplers;
pub mod trainer;

pub use error::{Error, Result};
