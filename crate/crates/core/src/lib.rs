//! Simulation toolkit for quantum sensing of *stochastic* parameters: phases
//! that are redrawn from a correlated distribution on every shot of the
//! protocol, rather than held fixed while statistics accumulate.
//!
//! The library covers the full pipeline:
//!
//! * [`qsim`] — dense state-vector simulation of small registers: probe
//!   preparation, diagonal phase encoding, decoding circuits, outcome
//!   probabilities, and input-averaged density matrices.
//! * [`distributions`] — samplers and analytic characteristic functions for
//!   the supported parameter distributions (correlated Gaussian, constrained
//!   uniform, spin-chain Gibbs ensembles, point masses).
//! * [`xxz`] — a constrained Metropolis sampler for a classical XXZ ring with
//!   conserved total Z-magnetization, and the spin-to-phase conversion that
//!   turns its configurations into sensing inputs.
//! * [`protocols`] — Ramsey-product, Bell, GHZ, and multi-copy sensing
//!   protocols: per-shot outcome probabilities, input-averaged outcome
//!   tables, and shot simulation.
//! * [`inference`] — classifiers (nearest-centroid, total-variation),
//!   least-squares linear estimators, Fisher's discriminant, and the sweep
//!   drivers that produce accuracy/MSE-versus-shots curves.
//! * [`featmat`] — characteristic feature matrices, separation values,
//!   optimal sparse probe/measurement pairs, brute-force product-state
//!   optima, and finite-size bound reports.
//!
//! Everything is deterministic given a master seed; parallel work derives
//! independent counter-based streams via [`rng::stream`].

pub mod distributions;
pub mod featmat;
pub mod inference;
pub mod protocols;
pub mod qsim;
pub mod rng;
pub mod xxz;
