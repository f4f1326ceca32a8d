//! Exact solvers for subset distributions over finite posets that meet
//! per-chain coverage bounds, and for mixed equilibria of the network
//! interdiction game built on top of them.
//!
//! All arithmetic is exact ([`Rational`]). The main entry points are
//! [`greedy::solve_q_general`] for explicitly listed chain bounds,
//! [`affine::solve_q_affine`] for affine bounds (no chain enumeration), and
//! [`game::compute_ne`] for equilibria.

#![allow(clippy::needless_range_loop)]

pub mod affine;
pub mod circulation;
pub mod cli;
pub mod error;
pub mod game;
pub mod greedy;
pub mod io;
pub mod lp;
pub mod network;
pub mod oracle;
pub mod poset;
pub mod problem;
pub mod rational;

pub use error::Error;
pub use network::{EdgeSpec, FlowNetwork, Path};
pub use poset::{ElementId, MaximalChain, Poset};
pub use problem::{ChainConstraintProblem, ChainValues, SubsetDistribution};
pub use rational::Rational;
