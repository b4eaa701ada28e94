//! Spin configurations on a box, the special configurations used by the
//! decimation probe, the sitewise orders and the sub-neighbourhood tests.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{Error, Result};
use crate::lattice::{BoxRegion, Site, SiteSet};

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let mut t = libm::remainder(theta, TAU);
    if t <= -PI {
        t += TAU;
    }
    if t > PI {
        t -= TAU;
    }
    t
}

/// Geodesic distance on the unit circle, in `[0, π]`.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    libm::fabs(normalize_angle(a - b))
}

/// A planar unit spin stored by its Cartesian components.
///
/// The four axis directions are represented exactly, so sums such as
/// `e1 + (-e1)` cancel to an exact zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotor {
    cos: f64,
    sin: f64,
}

impl Rotor {
    pub const EAST: Rotor = Rotor { cos: 1.0, sin: 0.0 };
    pub const NORTH: Rotor = Rotor { cos: 0.0, sin: 1.0 };
    pub const WEST: Rotor = Rotor {
        cos: -1.0,
        sin: 0.0,
    };
    pub const SOUTH: Rotor = Rotor {
        cos: 0.0,
        sin: -1.0,
    };

    pub fn from_angle(theta: f64) -> Self {
        let t = normalize_angle(theta);
        if t == 0.0 {
            Self::EAST
        } else if t == FRAC_PI_2 {
            Self::NORTH
        } else if t == PI {
            Self::WEST
        } else if t == -FRAC_PI_2 {
            Self::SOUTH
        } else {
            let (sin, cos) = libm::sincos(t);
            Self { cos, sin }
        }
    }

    /// Components already known to lie on the unit circle.
    pub(crate) const fn from_parts(cos: f64, sin: f64) -> Self {
        Self { cos, sin }
    }

    /// Canonical angle in `(-π, π]`.
    pub fn angle(self) -> f64 {
        let t = libm::atan2(self.sin, self.cos);
        if t <= -PI {
            PI
        } else {
            t
        }
    }

    pub fn cos(self) -> f64 {
        self.cos
    }

    pub fn sin(self) -> f64 {
        self.sin
    }

    pub fn dot(self, other: Rotor) -> f64 {
        self.cos * other.cos + self.sin * other.sin
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpinKind {
    /// Ising spins `±1`.
    Scalar,
    /// Planar rotators.
    Planar,
}

impl SpinKind {
    pub const fn name(self) -> &'static str {
        match self {
            SpinKind::Scalar => "scalar",
            SpinKind::Planar => "planar",
        }
    }
}

/// One of the two extremal homogeneous configurations: all `+1` / all
/// `+π/2` (plus), all `-1` / all `-π/2` (minus).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    Plus,
    Minus,
}

impl Level {
    pub const fn sign(self) -> i8 {
        match self {
            Level::Plus => 1,
            Level::Minus => -1,
        }
    }

    pub const fn opposite(self) -> Level {
        match self {
            Level::Plus => Level::Minus,
            Level::Minus => Level::Plus,
        }
    }

    pub fn spin(self, kind: SpinKind) -> Spin {
        match (kind, self) {
            (SpinKind::Scalar, _) => Spin::Scalar(self.sign()),
            (SpinKind::Planar, Level::Plus) => Spin::Planar(Rotor::NORTH),
            (SpinKind::Planar, Level::Minus) => Spin::Planar(Rotor::SOUTH),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Spin {
    Scalar(i8),
    Planar(Rotor),
}

impl Spin {
    pub fn kind(self) -> SpinKind {
        match self {
            Spin::Scalar(_) => SpinKind::Scalar,
            Spin::Planar(_) => SpinKind::Planar,
        }
    }

    /// The ordered coordinate: `σ` for Ising spins, `sin θ` for rotators.
    pub fn order_value(self) -> f64 {
        match self {
            Spin::Scalar(s) => f64::from(s),
            Spin::Planar(r) => r.sin(),
        }
    }

    fn check(self) -> Result<Self> {
        match self {
            Spin::Scalar(s) if s != 1 && s != -1 => {
                Err(Error::InvalidValue("Ising spins must be +1 or -1"))
            }
            _ => Ok(self),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Values {
    Scalar(Vec<i8>),
    Planar(Vec<Rotor>),
}

/// Spin values on every site of a box together with a mask of frozen
/// (pinned) sites that samplers never update.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinConfiguration {
    window: BoxRegion,
    values: Values,
    frozen: SiteSet,
}

impl SpinConfiguration {
    pub fn homogeneous(window: BoxRegion, kind: SpinKind, level: Level) -> Self {
        let values = match level.spin(kind) {
            Spin::Scalar(s) => Values::Scalar(vec![s; window.len()]),
            Spin::Planar(r) => Values::Planar(vec![r; window.len()]),
        };
        Self {
            window,
            values,
            frozen: SiteSet::empty(window),
        }
    }

    pub fn from_scalar_fn(window: BoxRegion, mut f: impl FnMut(Site) -> i8) -> Result<Self> {
        let values: Vec<i8> = window.sites().map(&mut f).collect();
        if values.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidValue("Ising spins must be +1 or -1"));
        }
        Ok(Self {
            window,
            values: Values::Scalar(values),
            frozen: SiteSet::empty(window),
        })
    }

    pub fn from_angle_fn(window: BoxRegion, mut f: impl FnMut(Site) -> f64) -> Self {
        Self::from_rotor_fn(window, |s| Rotor::from_angle(f(s)))
    }

    pub fn from_rotor_fn(window: BoxRegion, f: impl FnMut(Site) -> Rotor) -> Self {
        Self {
            window,
            values: Values::Planar(window.sites().map(f).collect()),
            frozen: SiteSet::empty(window),
        }
    }

    pub fn kind(&self) -> SpinKind {
        match self.values {
            Values::Scalar(_) => SpinKind::Scalar,
            Values::Planar(_) => SpinKind::Planar,
        }
    }

    pub fn window(&self) -> BoxRegion {
        self.window
    }

    pub fn frozen(&self) -> &SiteSet {
        &self.frozen
    }

    pub fn is_frozen(&self, site: Site) -> bool {
        self.frozen.contains(site)
    }

    /// Sites of the window that may be updated.
    pub fn free_sites(&self) -> SiteSet {
        SiteSet::from_predicate(self.window, |s| !self.frozen.contains(s))
    }

    pub fn get(&self, site: Site) -> Option<Spin> {
        let i = self.window.index(site)?;
        Some(self.get_index(i))
    }

    pub(crate) fn get_index(&self, i: usize) -> Spin {
        match &self.values {
            Values::Scalar(v) => Spin::Scalar(v[i]),
            Values::Planar(v) => Spin::Planar(v[i]),
        }
    }

    /// Order coordinate at a site (`σ` or `sin θ`).
    pub fn order_value(&self, site: Site) -> Option<f64> {
        self.get(site).map(Spin::order_value)
    }

    pub fn set(&mut self, site: Site, spin: Spin) -> Result<()> {
        let i = self.window.index(site).ok_or(Error::OutsideWindow(site))?;
        self.set_index(i, spin)
    }

    pub(crate) fn set_index(&mut self, i: usize, spin: Spin) -> Result<()> {
        let spin = spin.check()?;
        match (&mut self.values, spin) {
            (Values::Scalar(v), Spin::Scalar(s)) => v[i] = s,
            (Values::Planar(v), Spin::Planar(r)) => v[i] = r,
            (_, other) => {
                return Err(Error::KindMismatch {
                    expected: self.kind().name(),
                    found: other.kind().name(),
                })
            }
        }
        Ok(())
    }

    pub fn freeze(&mut self, site: Site) -> Result<()> {
        self.frozen.insert(site).map(|_| ())
    }

    pub fn unfreeze(&mut self, site: Site) -> bool {
        self.frozen.remove(site)
    }

    /// Sets a value and pins it.
    pub fn pin(&mut self, site: Site, spin: Spin) -> Result<()> {
        self.set(site, spin)?;
        self.freeze(site)
    }

    pub fn scalar_values(&self) -> Option<&[i8]> {
        match &self.values {
            Values::Scalar(v) => Some(v),
            Values::Planar(_) => None,
        }
    }

    pub fn rotors(&self) -> Option<&[Rotor]> {
        match &self.values {
            Values::Planar(v) => Some(v),
            Values::Scalar(_) => None,
        }
    }

    /// Angles in `(-π, π]`, row-major; `None` for Ising configurations.
    pub fn angles(&self) -> Option<Vec<f64>> {
        self.rotors().map(|r| r.iter().map(|r| r.angle()).collect())
    }

    /// The order-reversing involution: `σ ↦ -σ` or `θ ↦ -θ`. Frozen mask kept.
    pub fn reflected(&self) -> Self {
        let values = match &self.values {
            Values::Scalar(v) => Values::Scalar(v.iter().map(|s| -s).collect()),
            Values::Planar(v) => Values::Planar(
                v.iter()
                    .map(|r| Rotor {
                        cos: r.cos,
                        sin: -r.sin,
                    })
                    .collect(),
            ),
        };
        Self {
            window: self.window,
            values,
            frozen: self.frozen.clone(),
        }
    }

    /// Rotates every rotor by `phi`; Ising configurations are returned as is.
    pub fn rotated(&self, phi: f64) -> Self {
        match &self.values {
            Values::Scalar(_) => self.clone(),
            Values::Planar(v) => Self {
                window: self.window,
                values: Values::Planar(
                    v.iter()
                        .map(|r| Rotor::from_angle(r.angle() + phi))
                        .collect(),
                ),
                frozen: self.frozen.clone(),
            },
        }
    }

    pub(crate) fn with_frozen(mut self, frozen: SiteSet) -> Self {
        debug_assert_eq!(frozen.bounds(), self.window);
        self.frozen = frozen;
        self
    }
}

/// `(-1)^(x+y)` on every site.
pub fn alternating_ising(window: BoxRegion) -> SpinConfiguration {
    SpinConfiguration::from_scalar_fn(window, Site::parity_sign).expect("parity signs are ±1")
}

/// Axis along which the rotator bad configuration alternates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RotatorAlternation {
    /// `(-1)^(x+y) e1`: angles `0` and `π`.
    #[default]
    Horizontal,
    /// `(-1)^(x+y) e2`: angles `+π/2` and `-π/2`.
    Vertical,
}

pub fn alternating_rotator(window: BoxRegion, axis: RotatorAlternation) -> SpinConfiguration {
    let (even, odd) = match axis {
        RotatorAlternation::Horizontal => (Rotor::EAST, Rotor::WEST),
        RotatorAlternation::Vertical => (Rotor::NORTH, Rotor::SOUTH),
    };
    SpinConfiguration::from_rotor_fn(window, |s| if s.parity_sign() > 0 { even } else { odd })
}

pub fn homogeneous(window: BoxRegion, kind: SpinKind, level: Level) -> SpinConfiguration {
    SpinConfiguration::homogeneous(window, kind, level)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderRelation {
    LessEqual,
    GreaterEqual,
    Equal,
    Incomparable,
}

impl OrderRelation {
    pub fn is_less_equal(self) -> bool {
        matches!(self, OrderRelation::LessEqual | OrderRelation::Equal)
    }

    pub fn is_greater_equal(self) -> bool {
        matches!(self, OrderRelation::GreaterEqual | OrderRelation::Equal)
    }
}

/// Sitewise comparison: values for Ising spins, `sin θ` for rotators.
pub fn compare_sin(a: &SpinConfiguration, b: &SpinConfiguration) -> Result<OrderRelation> {
    if a.window != b.window {
        return Err(Error::WindowMismatch {
            left: a.window.half_width(),
            right: b.window.half_width(),
        });
    }
    if a.kind() != b.kind() {
        return Err(Error::KindMismatch {
            expected: a.kind().name(),
            found: b.kind().name(),
        });
    }
    let (mut le, mut ge) = (true, true);
    for i in 0..a.window.len() {
        let (x, y) = (a.get_index(i).order_value(), b.get_index(i).order_value());
        le &= x <= y;
        ge &= x >= y;
        if !le && !ge {
            return Ok(OrderRelation::Incomparable);
        }
    }
    Ok(match (le, ge) {
        (true, true) => OrderRelation::Equal,
        (true, false) => OrderRelation::LessEqual,
        (false, true) => OrderRelation::GreaterEqual,
        (false, false) => OrderRelation::Incomparable,
    })
}

/// Membership of `c` in the `side` sub-neighbourhood of `center`: agreement
/// with `center` on `Λ_inner` (exact for Ising spins, within angular
/// distance `eps` for rotators) and closeness to the `side` homogeneous
/// configuration on the annulus `Δ_outer \ Λ_inner`. Sites beyond
/// `Δ_outer` are unconstrained.
pub fn in_sub_neighborhood(
    c: &SpinConfiguration,
    center: &SpinConfiguration,
    inner: u32,
    outer: u32,
    side: Level,
    eps: f64,
) -> Result<bool> {
    if outer <= inner {
        return Err(Error::DegenerateAnnulus {
            inner: inner.into(),
            outer: outer.into(),
        });
    }
    if c.kind() != center.kind() {
        return Err(Error::KindMismatch {
            expected: center.kind().name(),
            found: c.kind().name(),
        });
    }
    if c.kind() == SpinKind::Planar && !(eps > 0.0 && eps < FRAC_PI_2) {
        return Err(Error::InvalidValue("eps must lie in (0, π/2)"));
    }
    if c.window.half_width() < outer {
        return Err(Error::OutsideWindow(Site::new(outer as i32, outer as i32)));
    }
    if center.window.half_width() < inner {
        return Err(Error::OutsideWindow(Site::new(inner as i32, inner as i32)));
    }
    let target = side.spin(c.kind());
    for site in BoxRegion::new(outer).sites() {
        let value = c.get(site).expect("window covers the outer box");
        let reference = if site.sup_norm() <= inner {
            center.get(site).expect("center covers the inner box")
        } else {
            target
        };
        let close = match (value, reference) {
            (Spin::Scalar(a), Spin::Scalar(b)) => a == b,
            (Spin::Planar(a), Spin::Planar(b)) => angular_distance(a.angle(), b.angle()) < eps,
            _ => false,
        };
        if !close {
            return Ok(false);
        }
    }
    Ok(true)
}
