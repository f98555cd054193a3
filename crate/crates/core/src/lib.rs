//! Average-reward reinforcement-learning laboratory.
//!
//! The crate bundles optimistic tabular agents built on time-uniform
//! confidence bounds and support-adaptive planning, the benchmark
//! environments they are usually evaluated on, exact solvers used for
//! regret accounting, and a seeded experiment harness with a CLI.
//!
//! The numerical core (`conc`, `mdp`, `plan`) is generic over the scalar
//! type through [`Scalar`]; the simulation layers (`envs`, `agents`,
//! `harness`) run on `f64`.

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::Float;

pub mod agents;
pub mod conc;
pub mod envs;
pub mod harness;
pub mod mdp;
pub mod plan;

/// Scalar type the numerical core is generic over.
pub trait Scalar: Float + Sum + Debug + Send + Sync + 'static {}
impl<T: Float + Sum + Debug + Send + Sync + 'static> Scalar for T {}

/// Converts an `f64` constant into the working scalar type.
#[inline]
pub(crate) fn c<F: Scalar>(x: f64) -> F {
    F::from(x).expect("constant representable in scalar type")
}

/// Concrete aliases for the default (double-precision) instantiation.
pub type Model = mdp::MdpModel<f64>;
pub type Metrics = mdp::MdpMetrics<f64>;
pub type Interval = conc::ConfInterval<f64>;
pub type Bounds = plan::BoundsTable<f64>;
pub type Plan = plan::PlanResult<f64>;
