//! Reducing ansatzes `u = exp(i f(t,x))·φ(ω(t,x))` for the nonlinear
//! Schrödinger equation `2i u_t + Δu − u F(|u|) = 0`, the exact solutions they
//! generate, and finite-difference certification of every closed-form claim.
//! The same machinery covers `□u = λu^k` with `u = f(x)·φ(x₀ + x₃)`.

pub mod catalog;
pub mod cli;
pub mod error;
pub mod export;
mod lstsq;
pub mod nonlinearity;
pub mod numerics;
pub mod profile;
pub mod reduced_ode;
pub mod verifier;
pub mod wave;

pub use error::{Error, Result};
