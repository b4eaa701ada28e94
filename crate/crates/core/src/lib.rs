//! Decimation of ferromagnetic lattice spin systems on `Z^2`.
//!
//! This crate is the allocation-only algorithmic core: lattice geometry,
//! spin configurations, coupling kernels for nearest-neighbour and
//! long-range Ising and planar-rotator models, finite-volume energies with
//! frozen sites and boundary conditions, single-site Monte Carlo, exact
//! enumeration oracles, and the decimation map together with the probe that
//! measures the discontinuity of decimated conditional magnetizations.
//!
//! It is `#![no_std]` and only needs `alloc`. File formats, parallel
//! orchestration and the command-line interface live in the `decim` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod config;
pub mod couplings;
pub mod decimation;
mod error;
pub mod hamiltonian;
pub mod lattice;
pub mod oracle;
pub mod rng;
pub mod sampler;
pub mod stats;

pub use config::{Level, OrderRelation, Rotor, Spin, SpinConfiguration, SpinKind};
pub use couplings::{CouplingModel, Family, InteractionKernel};
pub use decimation::{GapReport, ProbeSpec};
pub use error::{Error, Result};
pub use hamiltonian::{AnnulusSchedule, BoundarySpec, Exterior, FiniteVolume};
pub use lattice::{BoxRegion, Site, SiteSet};
pub use rng::SplitMix64;
pub use sampler::{ChainSpec, Observable};
pub use stats::Estimate;
