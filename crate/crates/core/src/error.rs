use crate::lattice::Site;

/// Errors raised by the core operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("outer half-width {outer} must exceed inner half-width {inner}")]
    DegenerateAnnulus { inner: u64, outer: u64 },
    #[error("configuration windows differ (half-widths {left} and {right})")]
    WindowMismatch { left: u32, right: u32 },
    #[error("spin kind mismatch: expected {expected}, found {found}")]
    KindMismatch {
        expected: &'static str,
        found: &'static str,
    },
    #[error("site {0} lies outside the configuration window")]
    OutsideWindow(Site),
    #[error("site {0} is frozen and cannot be updated")]
    FrozenSite(Site),
    #[error("coupling of a site with itself ({0}) is undefined")]
    SelfCoupling(Site),
    #[error("invalid value: {0}")]
    InvalidValue(&'static str),
    #[error("invalid model parameter: {0}")]
    InvalidModel(&'static str),
    #[error("invalid chain parameter: {0}")]
    InvalidChain(&'static str),
    #[error("exterior configuration does not cover site {0} within kernel range")]
    MissingExterior(Site),
    #[error("system has {found} free sites, the exact oracle allows at most {limit}")]
    TooLarge { found: usize, limit: usize },
    #[error("frozen assignment is incomplete: even site {0} is not frozen")]
    IncompleteFrozen(Site),
    #[error("boundary conditions differ at {0}, inside the outer box")]
    BoundaryInsideAnnulus(Site),
    #[error("no annulus size up to {limit} reaches the requested bound")]
    Unattainable { limit: u64 },
    #[error("{0}")]
    Invalid(&'static str),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
