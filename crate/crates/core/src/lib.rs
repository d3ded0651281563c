//! Minimizing-movement gradient flows on geodesic metric spaces.
//!
//! The generic engine ([`engine`]) computes Moreau–Yosida resolvents, discrete
//! flows and Mayer limits for any [`space::MetricSpace`] that can take a
//! proximal step. Two instantiations ship with the crate: Euclidean space
//! with a quadratic functional ([`euclid`]), and circle-symmetric Kähler
//! potentials with the Mabuchi distance and the K-energy ([`kahler`],
//! [`geodesic`], [`model`]), whose flow is compared against a direct Calabi
//! flow integrator ([`reference`]).

pub mod engine;
pub mod error;
pub mod euclid;
pub mod geodesic;
pub mod harness;
pub mod io;
pub mod kahler;
pub mod model;
pub mod reference;
pub mod space;
pub mod spectral;

pub use engine::{discrete_flow, mayer_limit, resolvent, ProximalSpace, ResolventConfig};
pub use error::{Result, SpaceError};
pub use kahler::{FourierMode, Potential, SurfaceBackground};
pub use model::KahlerSpace;
pub use space::{MetricSpace, RandomPoints, ToleranceConfig};
