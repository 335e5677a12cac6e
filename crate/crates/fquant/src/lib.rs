//! Functional quantization of stochastic-process paths.
//!
//! The library builds product quantizers for paths of Brownian motion,
//! fractional Brownian motion, symmetric stable processes, Gamma
//! subordinators and (compound) Poisson processes, viewed as random
//! elements of `L^p([0,T])`. Coordinates come from the Haar basis; each
//! coordinate gets its own small scalar codebook and the codebook sizes
//! are chosen by an explicit budget-allocation rule so that the product
//! of all sizes stays below a global budget `N`.
//!
//! Two quantizer families are provided:
//!
//! * [`product::ProductQuantizer`] — Haar-coordinate product quantizers
//!   driven by a regularity modulus, whose error decays polylogarithmically
//!   in the budget;
//! * [`cppq::PoissonQuantizer`] — an explicit quantizer for (compound)
//!   Poisson paths built from censored jump-time codebooks, whose error
//!   decays faster than any power of `log N`.
//!
//! Monte Carlo distortion estimation, regularity estimation and rate
//! fitting live in [`product`], [`ratelab`] and [`cppq`]; the `fquant`
//! binary drives config-file experiments end to end.

pub mod allocation;
pub mod config;
pub mod cppq;
pub mod error;
pub mod grid;
pub mod haar;
pub mod math;
pub mod persist;
pub mod procsim;
pub mod product;
pub mod quant1d;
pub mod ratelab;
pub mod runner;
pub mod streams;

pub use error::{Error, Result};
pub use grid::{PathSample, TimeGrid};
