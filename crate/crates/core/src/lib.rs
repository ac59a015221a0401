//! A priori global-error estimates for explicit Runge–Kutta methods.
//!
//! The global error of a method with modified-equation coefficients `b` is
//! expanded as `Σ_τ h^(ρ−1) b(τ) α(τ)/ρ! · I_τ(t)`, where the elementary
//! integrals `I_τ` depend only on the problem. This crate provides the tree
//! combinatorics and exact coefficient algebra behind `b`, fixed-step
//! integrators, the Emden–Fowler and linear oscillator problems with their
//! asymptotic solutions, and the estimators that combine them.

pub mod bseries;
pub mod error;
pub mod estimator;
pub mod oscillators;
pub mod rk;
pub mod trees;

pub use error::{Error, Result};
