//! Uniformly expanding full-branch interval maps whose fixed point 0 is a
//! wild attractor.
//!
//! The map `f` on `(0, 1]` has branches `I_n = (c^{−n}, c^{−n+1}]`. Each branch
//! is affine on its left part `L_n` (mapping onto `(0, a_{n+1}]`) and smooth
//! and convex on its right part `R_n` (mapping onto `[a_{n+1}, 1]`).
//!
//! * [`map`] builds and evaluates `f` ([`FullBranchMap`]).
//! * [`cylinder`] computes cylinder sets and certified measures of `C_n`
//!   in exact rational arithmetic.
//! * [`orbit`] and [`basin`] iterate orbits and gather Monte Carlo
//!   statistics of the basin of 0.
//! * [`verifier`] runs the batch property checks.
//! * [`plot`] renders the graph of `f` as CSV or SVG.

pub mod basin;
pub mod branch;
pub mod cylinder;
pub mod error;
pub mod map;
pub mod orbit;
pub mod plot;
pub mod profile;
pub mod rational;
pub mod root;
pub mod schedule;
pub mod verifier;

pub use branch::{Branch, FloatBranch};
pub use error::{Error, Result};
pub use map::{lambda_of, validate, ExpansionConfig, FullBranchMap, ValidationReport};
pub use profile::TransitionProfile;
pub use rational::Rational;
pub use schedule::ProportionSchedule;
