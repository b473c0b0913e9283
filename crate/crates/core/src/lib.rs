//! Core library for localizing an RF transmitter with a simulated network of
//! quantum sensors.
//!
//! The crate is organized bottom-up:
//!
//! - [`qmath`]: complex vectors/matrices, Hermitian eigendecomposition,
//!   matrix functions, and a seedable, stream-splittable RNG.
//! - [`sensing`]: the RF propagation and phase-accumulation model mapping
//!   transmitter-sensor geometry to per-qubit phase shifts and evolved states.
//! - [`geometry`]: grid/block/cell arithmetic, deterministic sensor
//!   deployment, and transmitter sampling for continuous/discrete settings.
//! - [`qsd`]: pretty-good-measurement construction, measurement sampling,
//!   multi-shot discrimination, and the one-level/two-level localization
//!   pipelines built on them.
//! - [`pqc`]: parameterized quantum circuits (U3/CU3 blocks), expectation
//!   readout, linear heads, analytic gradients, Adam training, and the
//!   one-level/two-level learned pipelines.
//! - [`harness`]: dataset generation, evaluation loops, and experiment
//!   aggregation (mean localization error, classification accuracy, CDFs).
//!
//! The crate is `no_std`-compatible (with `alloc`); the `std` feature (on by
//! default) enables std float intrinsics and `std::error::Error` integration.
//! File formats, CLI, and parallel orchestration live in the companion
//! binary crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod geometry;
pub mod harness;
pub mod pqc;
pub mod qmath;
pub mod qsd;
pub mod sensing;

pub use qmath::{Complex64, ComplexMatrix, QmathError, Rng, StateVector};
