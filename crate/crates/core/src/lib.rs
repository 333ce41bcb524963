//! Fold-fold bifurcation analysis for two-zone Filippov systems.
//!
//! The crate is organised bottom-up:
//!
//! * [`psys`] holds the two-zone system in normal form and the switching surface.
//! * [`glacial`] builds the glacial flip-flop climate model and its forcing functions.
//! * [`integrator`] integrates the nonsmooth flow with event location and sliding.
//! * [`bifurcation`] locates fold-fold points, evaluates the closed-form coefficients
//!   and checks the theorem's hypotheses.
//! * [`poincare`] provides half-maps, limit-cycle search and the time-map fit.
//! * [`config`], [`report`] and [`cli`] drive everything from the command line.

pub mod bifurcation;
pub mod cli;
pub mod config;
pub mod error;
pub mod glacial;
pub mod integrator;
pub mod poincare;
pub mod psys;
pub mod report;
pub mod synthetic;

pub use error::{Error, ErrorKind, Result};
pub use psys::{PiecewiseSystem, Region, State, SurfaceParams};
