//! Solver and verification library for nonconvex Allen-Cahn-type energies on
//! parametric two-dimensional dumbbell domains.
//!
//! The crate is organized around the pipeline
//! geometry -> mesh -> fem -> minimize, with `closedform` providing exact
//! evaluation of the limiting constants and profiles the solver is checked
//! against, and `limits` solving the truncated unbounded limit problems.

pub mod closedform;
pub mod fem;
pub mod geometry;
pub mod limits;
pub mod mesh;
pub mod minimize;
pub mod potential;
pub mod quad;
pub mod sparse;
