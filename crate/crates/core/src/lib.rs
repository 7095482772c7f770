#![no_std]
//! Time changes by inverse killed subordinators.
//!
//! For a Bernstein function with characteristics `(a, k, mu)` and a Markov
//! semigroup `T` with generator `L`, `u(t, x) = E[T_{E_t^S} f(x)]` solves
//! `(k d/dt + d^w/dt) u = (L - a) u + a f` with `u(0) = f`, where `E^S` is the
//! inverse of the subordinator killed at an independent `Exp(a)` time and
//! `w(z) = mu((z, inf))`. This crate evaluates both sides: Monte Carlo over
//! the time change ([`mc`]) and a deterministic convolution-quadrature
//! solver ([`fpde`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bernstein;
pub mod checks;
pub mod error;
pub mod fpde;
pub mod mc;
pub mod models;
pub mod quadrature;
pub mod sampler;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
