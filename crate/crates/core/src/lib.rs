//! Symbolic toolkit for conservation laws of PDE systems: a jet-space
//! expression kernel, variational calculus operators, multiplier-based
//! construction and verification of conservation laws, the action of point
//! symmetries on known laws, potential systems and nonlocal symmetries, and
//! linearization tests.

pub mod dcm;
pub mod fixtures;
pub mod jetexpr;
pub mod linearize;
pub mod nonlocal;
pub mod problem;
pub mod report;
pub mod symaction;
pub mod system;
pub mod varcalc;
