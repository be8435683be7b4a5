//! Discrete Brouwer fixed points on hypergrids and their reduction to
//! bimatrix Nash equilibria.
//!
//! The crate is organized around five layers:
//!
//! * [`grid`] and [`circuit`] — hypergrids, lattice points, and
//!   Brouwer-mapping circuits: boolean gate networks that assign one of
//!   `d + 1` colors to every grid point, subject to a boundary rule.
//! * [`transform`] — the three embeddings (`pad`, `lift`, `snake`) that
//!   trade side length for dimension, with decoders that map panchromatic
//!   simplices backwards, and the composed pipeline.
//! * [`simplex`] — panchromatic-simplex search: a brute-force oracle and
//!   the directed path-following walk over the Freudenthal triangulation.
//! * [`game`], [`solve`], [`gadget`], [`reduction`] — bimatrix games in
//!   exact rational arithmetic, equilibrium verifiers and solvers, the
//!   matching-pennies gadget machinery, and the circuit-to-game reduction
//!   with its equilibrium decoder.
//! * [`smoothed`] — perturbation models and the smoothed-to-approximation
//!   reduction harness.
//!
//! All equilibrium mathematics is done in exact rational arithmetic
//! ([`Rat`]); floating point appears only at the Gaussian-perturbation
//! boundary of the smoothed harness. The crate is `no_std` compatible
//! (with `alloc`); IO, file formats, and the CLI live in the companion
//! `hypernash-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod circuit;
pub mod game;
pub mod gadget;
pub mod grid;
pub mod num;
pub mod reduction;
pub mod simplex;
pub mod smoothed;
pub mod solve;
pub mod synth;
pub mod transform;

pub use crate::num::Rat;
