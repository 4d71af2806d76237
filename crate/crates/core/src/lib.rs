//! Simulation toolkit for adiabatic quantum PageRank on model web graphs.
//!
//! - [`webgraph`]: preferential-attachment, copying, reversed, mixed and complete graphs.
//! - [`googlerank`]: transition/Google matrices, power-method and Monte Carlo PageRank.
//! - [`adiabatic`]: the interpolating Hamiltonian family, spectral gaps,
//!   Schrödinger evolution, run-time formulas and the spin mapping.
//! - [`measurement`]: sampling the PageRank state, shot budgets, top-k ranking, SWAP test.
//! - [`experiments`]: seeded ensembles and scaling-law fits.
//! - [`cli`]: the `adiarank` command-line front end.

pub mod adiabatic;
pub mod cli;
pub mod experiments;
pub mod googlerank;
pub mod measurement;
pub mod par;
pub mod seed;
pub mod stats;
pub mod webgraph;
