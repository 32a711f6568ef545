//! Spin dynamics in correlation-order-restricted Liouville spaces.
//!
//! The crate builds product-operator bases truncated at a maximum correlation
//! order, assembles sparse commutation and relaxation superoperators on them,
//! propagates the inhomogeneous master equation, and measures how the
//! density-matrix norm spreads over correlation orders. Alongside the full
//! simulation it implements the scalar norm-transport model (a chain of norm
//! equations and its continuum limit) and the resulting bounds on the
//! truncation order needed for a target accuracy.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the double-precision instantiation used by the CLI.

pub mod basis;
pub mod bounds;
pub mod error;
pub mod linalg;
pub mod normflow;
pub mod propagate;
pub mod scalar;
pub mod sparse;
pub mod special;
pub mod spinsys;
pub mod superop;

pub use basis::{basis_dimension, correlation_order, order_norms, project_order, Basis, BasisState};
pub use bounds::{required_order, short_time_horizon, BoundQuery, BoundResult};
pub use error::{Error, Result};
pub use scalar::{Cx, Real};
pub use spinsys::{
    equilibrium_state, initial_state, parse_system, InitialSpec, RelaxationLaw, SpinSystem,
};

pub type StateVector64 = basis::StateVector<f64>;
pub type StateVector32 = basis::StateVector<f32>;
pub type Superoperator64 = superop::Superoperator<f64>;
pub type Superoperator32 = superop::Superoperator<f32>;
pub type NormTrajectory64 = propagate::NormTrajectory<f64>;
pub type CoefficientTrace64 = propagate::CoefficientTrace<f64>;
pub type ErrorReport64 = propagate::ErrorReport<f64>;
pub type NormFlowParams64 = normflow::NormFlowParams<f64>;
pub type NormFlowParams32 = normflow::NormFlowParams<f32>;
pub type NormProfile64 = normflow::NormProfile<f64>;
