//! Coupling functions `J(i, j)` of the six model families, pair energies,
//! truncated interaction kernels and bounds on the neglected tails.
//!
//! Every family is ferromagnetic and translation invariant, so a coupling
//! only depends on the offset `j - i`. Long-range families are truncated at
//! a sup-norm radius `R`; [`tail_mass`] bounds what the truncation drops.

use alloc::vec;
use alloc::vec::Vec;

use crate::config::{Spin, SpinKind};
use crate::error::{Error, Result};
use crate::lattice::Site;

/// Model family with its decay exponents or anisotropy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// Nearest-neighbour Ising model.
    NearestNeighborIsing,
    /// Nearest-neighbour vertical bonds plus `|i1 - j1|^-alpha` along rows.
    AxialIsing { alpha: f64 },
    /// `|i1 - j1|^-alpha_horizontal` along rows, `|i2 - j2|^-alpha_vertical`
    /// along columns.
    BiAxialIsing {
        alpha_horizontal: f64,
        alpha_vertical: f64,
    },
    /// `|i - j|^-alpha` (Euclidean).
    IsotropicIsing { alpha: f64 },
    /// Nearest-neighbour rotators with the horizontal component damped by
    /// `kappa`, so the vertical direction is favoured.
    AnisotropicRotator { kappa: f64 },
    /// Rotators with `|i - j|^-alpha` couplings and the plain inner product.
    IsotropicRotator { alpha: f64 },
}

impl Family {
    pub const fn name(&self) -> &'static str {
        match self {
            Family::NearestNeighborIsing => "nn_ising",
            Family::AxialIsing { .. } => "axial_lr",
            Family::BiAxialIsing { .. } => "biaxial_lr",
            Family::IsotropicIsing { .. } => "iso_lr_ising",
            Family::AnisotropicRotator { .. } => "aniso_rotator",
            Family::IsotropicRotator { .. } => "iso_lr_rotator",
        }
    }

    pub const fn kind(&self) -> SpinKind {
        match self {
            Family::AnisotropicRotator { .. } | Family::IsotropicRotator { .. } => SpinKind::Planar,
            _ => SpinKind::Scalar,
        }
    }

    pub const fn is_long_range(&self) -> bool {
        !matches!(
            self,
            Family::NearestNeighborIsing | Family::AnisotropicRotator { .. }
        )
    }

    pub const fn is_isotropic_long_range(&self) -> bool {
        matches!(
            self,
            Family::IsotropicIsing { .. } | Family::IsotropicRotator { .. }
        )
    }

    /// Exponent governing the tail: the slowest decay for bi-axial models.
    pub fn decay_exponent(&self) -> Option<f64> {
        match *self {
            Family::AxialIsing { alpha }
            | Family::IsotropicIsing { alpha }
            | Family::IsotropicRotator { alpha } => Some(alpha),
            Family::BiAxialIsing {
                alpha_horizontal,
                alpha_vertical,
            } => Some(alpha_horizontal.min(alpha_vertical)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingModel {
    family: Family,
    strength: f64,
}

impl CouplingModel {
    pub fn new(family: Family, strength: f64) -> Result<Self> {
        if !(strength.is_finite() && strength >= 0.0) {
            return Err(Error::InvalidModel(
                "coupling strength J must be finite and >= 0",
            ));
        }
        let ok = match family {
            Family::NearestNeighborIsing => true,
            Family::AxialIsing { alpha } => alpha > 1.0 && alpha.is_finite(),
            Family::BiAxialIsing {
                alpha_horizontal,
                alpha_vertical,
            } => {
                alpha_horizontal > 1.0
                    && alpha_vertical > 1.0
                    && alpha_horizontal.is_finite()
                    && alpha_vertical.is_finite()
            }
            Family::IsotropicIsing { alpha } => alpha > 2.0 && alpha.is_finite(),
            Family::AnisotropicRotator { kappa } => kappa > 0.0 && kappa < 1.0,
            Family::IsotropicRotator { alpha } => alpha > 2.0 && alpha <= 4.0,
        };
        if !ok {
            return Err(Error::InvalidModel(match family {
                Family::AxialIsing { .. } => "axial model needs alpha > 1",
                Family::BiAxialIsing { .. } => "bi-axial model needs both alphas > 1",
                Family::IsotropicIsing { .. } => "isotropic Ising model needs alpha > 2",
                Family::AnisotropicRotator { .. } => "anisotropy kappa must lie in (0, 1)",
                Family::IsotropicRotator { .. } => "isotropic rotator model needs alpha in (2, 4]",
                Family::NearestNeighborIsing => unreachable!(),
            }));
        }
        Ok(Self { family, strength })
    }

    pub fn nearest_neighbor(strength: f64) -> Result<Self> {
        Self::new(Family::NearestNeighborIsing, strength)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn kind(&self) -> SpinKind {
        self.family.kind()
    }

    /// Componentwise weights `(w1, w2)` of the spin inner product:
    /// `<s, t> = w1 s1 t1 + w2 s2 t2`.
    pub fn component_weights(&self) -> (f64, f64) {
        match self.family {
            Family::AnisotropicRotator { kappa } => (kappa, 1.0),
            _ => (1.0, 1.0),
        }
    }

    /// `J(0, (dx, dy))`; zero at the origin and wherever no term applies.
    pub fn coupling_offset(&self, dx: i32, dy: i32) -> f64 {
        if dx == 0 && dy == 0 {
            return 0.0;
        }
        let j = self.strength;
        let (ax, ay) = (dx.unsigned_abs(), dy.unsigned_abs());
        let nn = ax + ay == 1;
        match self.family {
            Family::NearestNeighborIsing | Family::AnisotropicRotator { .. } => {
                if nn {
                    j
                } else {
                    0.0
                }
            }
            Family::AxialIsing { alpha } => {
                if ay == 0 {
                    j * libm::pow(f64::from(ax), -alpha)
                } else if ax == 0 && ay == 1 {
                    j
                } else {
                    0.0
                }
            }
            Family::BiAxialIsing {
                alpha_horizontal,
                alpha_vertical,
            } => {
                if ay == 0 {
                    j * libm::pow(f64::from(ax), -alpha_horizontal)
                } else if ax == 0 {
                    j * libm::pow(f64::from(ay), -alpha_vertical)
                } else {
                    0.0
                }
            }
            Family::IsotropicIsing { alpha } | Family::IsotropicRotator { alpha } => {
                let r2 = f64::from(ax) * f64::from(ax) + f64::from(ay) * f64::from(ay);
                j * libm::pow(r2, -0.5 * alpha)
            }
        }
    }

    /// `J(i, j)`; rejects `i = j`.
    pub fn coupling(&self, i: Site, j: Site) -> Result<f64> {
        if i == j {
            return Err(Error::SelfCoupling(i));
        }
        Ok(self.coupling_offset(j.x - i.x, j.y - i.y))
    }

    /// The inner-product term of the pair energy `-J(i,j) <s_i, s_j>`.
    pub fn pair_energy(&self, a: Spin, b: Spin) -> Result<f64> {
        let expected = self.kind();
        for s in [a, b] {
            if s.kind() != expected {
                return Err(Error::KindMismatch {
                    expected: expected.name(),
                    found: s.kind().name(),
                });
            }
        }
        Ok(match (a, b) {
            (Spin::Scalar(x), Spin::Scalar(y)) => f64::from(x * y),
            (Spin::Planar(x), Spin::Planar(y)) => {
                let (w1, w2) = self.component_weights();
                w1 * x.cos() * y.cos() + w2 * x.sin() * y.sin()
            }
            _ => unreachable!(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    /// Row-major `(2R+1)^2` table indexed by `(dy + R, dx + R)`.
    Dense { weights: Vec<f64> },
    /// `horizontal[k-1] = J(0, (k, 0))`, `vertical[k-1] = J(0, (0, k))`.
    Axial {
        horizontal: Vec<f64>,
        vertical: Vec<f64>,
    },
}

/// Precomputed couplings `J(0, v)` for `0 < |v|_inf <= R`.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionKernel {
    radius: u32,
    storage: Storage,
}

impl InteractionKernel {
    /// Requested truncation radius.
    pub fn radius(&self) -> u32 {
        self.radius
    }

    /// Largest sup-norm offset that can carry a non-zero weight.
    pub fn reach(&self) -> u32 {
        match &self.storage {
            Storage::Dense { .. } => self.radius,
            Storage::Axial {
                horizontal,
                vertical,
            } => horizontal.len().max(vertical.len()) as u32,
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense { .. })
    }

    /// Constant-time lookup of `J(0, (dx, dy))`; zero outside the kernel.
    #[inline]
    pub fn weight(&self, dx: i32, dy: i32) -> f64 {
        match &self.storage {
            Storage::Dense { weights } => {
                let r = self.radius as i32;
                if dx.abs() > r || dy.abs() > r {
                    return 0.0;
                }
                let side = 2 * r + 1;
                weights[((dy + r) * side + dx + r) as usize]
            }
            Storage::Axial {
                horizontal,
                vertical,
            } => {
                let (table, k) = match (dx, dy) {
                    (0, 0) => return 0.0,
                    (_, 0) => (horizontal, dx.unsigned_abs() as usize),
                    (0, _) => (vertical, dy.unsigned_abs() as usize),
                    _ => return 0.0,
                };
                table.get(k - 1).copied().unwrap_or(0.0)
            }
        }
    }

    /// Row `dy` of a dense table as a slice over `dx = -R..=R`.
    #[inline]
    pub(crate) fn dense_row(&self, dy: i32) -> &[f64] {
        match &self.storage {
            Storage::Dense { weights } => {
                let side = 2 * self.radius as usize + 1;
                let start = (dy + self.radius as i32) as usize * side;
                &weights[start..start + side]
            }
            Storage::Axial { .. } => &[],
        }
    }

    #[inline]
    pub(crate) fn axial_tables(&self) -> (&[f64], &[f64]) {
        match &self.storage {
            Storage::Axial {
                horizontal,
                vertical,
            } => (horizontal, vertical),
            Storage::Dense { .. } => (&[], &[]),
        }
    }

    /// Non-zero entries `(dx, dy, J)` in row-major order.
    pub fn entries(&self) -> Vec<(i32, i32, f64)> {
        let r = self.reach() as i32;
        let mut out = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                let w = self.weight(dx, dy);
                if w != 0.0 {
                    out.push((dx, dy, w));
                }
            }
        }
        out
    }

    /// Number of stored table slots.
    pub fn table_len(&self) -> usize {
        match &self.storage {
            Storage::Dense { weights } => weights.len(),
            Storage::Axial {
                horizontal,
                vertical,
            } => 2 * (horizontal.len() + vertical.len()),
        }
    }

    /// `sum_v J(0, v)` over the stored offsets.
    pub fn total_weight(&self) -> f64 {
        self.entries().iter().map(|e| e.2).sum()
    }
}

/// Tabulates the model's couplings out to sup-norm radius `radius`.
pub fn build_kernel(model: &CouplingModel, radius: u32) -> Result<InteractionKernel> {
    if radius == 0 {
        return Err(Error::InvalidModel("truncation radius must be >= 1"));
    }
    let r = radius as i32;
    let storage = match model.family {
        Family::IsotropicIsing { .. } | Family::IsotropicRotator { .. } => {
            let side = 2 * r + 1;
            let mut weights = vec![0.0; (side * side) as usize];
            for dy in -r..=r {
                for dx in -r..=r {
                    weights[((dy + r) * side + dx + r) as usize] = model.coupling_offset(dx, dy);
                }
            }
            Storage::Dense { weights }
        }
        Family::NearestNeighborIsing | Family::AnisotropicRotator { .. } => Storage::Axial {
            horizontal: vec![model.strength],
            vertical: vec![model.strength],
        },
        Family::AxialIsing { .. } => Storage::Axial {
            horizontal: (1..=r).map(|k| model.coupling_offset(k, 0)).collect(),
            vertical: vec![model.strength],
        },
        Family::BiAxialIsing { .. } => Storage::Axial {
            horizontal: (1..=r).map(|k| model.coupling_offset(k, 0)).collect(),
            vertical: (1..=r).map(|k| model.coupling_offset(0, k)).collect(),
        },
    };
    Ok(InteractionKernel { radius, storage })
}

/// Upper bound on `sum_{k >= start} k^-alpha` for `alpha > 1`, `start >= 1`.
///
/// The first 64 terms are summed explicitly; the rest is closed with
/// `b^-alpha + b^(1-alpha) / (alpha - 1)`, which dominates `sum_{k >= b}`.
/// The result never exceeds `(start - 1)^(1-alpha) / (alpha - 1)`.
pub fn power_tail_1d(alpha: f64, start: u64) -> f64 {
    const EXPLICIT: u64 = 64;
    debug_assert!(alpha > 1.0 && start >= 1);
    let mut sum = 0.0;
    // Smallest terms first.
    for k in (start..start + EXPLICIT).rev() {
        sum += libm::pow(k as f64, -alpha);
    }
    let b = (start + EXPLICIT) as f64;
    sum + libm::pow(b, -alpha) + libm::pow(b, 1.0 - alpha) / (alpha - 1.0)
}

/// Sup-norm shell sums of `|v|^-alpha` on `Z^2` and their tails.
///
/// Shells `m <= EXACT_SHELLS` are summed exactly. Beyond, each normalised
/// shell sum `m^(alpha-1) S(m)` is at most `c_alpha + 4/m` with
/// `c_alpha = 8 ∫_0^1 (1+t^2)^(-alpha/2) dt`, which gives a rigorous closed
/// bound for the remainder that is tight to relative order `1/m`.
#[derive(Debug, Clone)]
pub struct ShellTail {
    alpha: f64,
    c_alpha: f64,
    /// `tail[k] = sum_{k < m <= EXACT_SHELLS} S(m)` plus the closed bound.
    tail: Vec<f64>,
}

impl ShellTail {
    pub const EXACT_SHELLS: u64 = 1024;

    pub fn new(alpha: f64) -> Self {
        assert!(alpha > 2.0, "isotropic tails need alpha > 2");
        let m_max = Self::EXACT_SHELLS as usize;
        let c_alpha = 8.0 * simpson(|t| libm::pow(1.0 + t * t, -0.5 * alpha), 0.0, 1.0, 4096);
        let mut tail = vec![0.0; m_max + 1];
        tail[m_max] = Self::closed_bound(alpha, c_alpha, Self::EXACT_SHELLS);
        for m in (1..=m_max).rev() {
            tail[m - 1] = tail[m] + shell_sum(alpha, m as u64);
        }
        Self {
            alpha,
            c_alpha,
            tail,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The limiting normalised shell sum `c_alpha`.
    pub fn shell_constant(&self) -> f64 {
        self.c_alpha
    }

    fn closed_bound(alpha: f64, c_alpha: f64, k: u64) -> f64 {
        let k = k as f64;
        c_alpha * libm::pow(k, 2.0 - alpha) / (alpha - 2.0)
            + 4.0 * libm::pow(k, 1.0 - alpha) / (alpha - 1.0)
    }

    /// Upper bound on `sum_{|v|_inf > k} |v|^-alpha`; non-increasing in `k`.
    pub fn beyond(&self, k: u64) -> f64 {
        if k <= Self::EXACT_SHELLS {
            self.tail[k as usize]
        } else {
            Self::closed_bound(self.alpha, self.c_alpha, k)
        }
    }
}

/// `S(m) = sum_{|v|_inf = m} |v|^-alpha`.
pub fn shell_sum(alpha: f64, m: u64) -> f64 {
    let mf = m as f64;
    let term = |k: f64| libm::pow(mf * mf + k * k, -0.5 * alpha);
    let mut inner = 0.0;
    for k in (1..m).rev() {
        inner += term(k as f64);
    }
    4.0 * term(0.0) + 4.0 * term(mf) + 8.0 * inner
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}

/// Upper bound on `sum_{|v|_inf > R} J(0, v)`, the coupling mass dropped by
/// truncating at radius `R`. Exactly zero for nearest-neighbour families.
pub fn tail_mass(model: &CouplingModel, radius: u32) -> Result<f64> {
    if radius == 0 {
        return Err(Error::InvalidModel("truncation radius must be >= 1"));
    }
    let j = model.strength;
    let start = u64::from(radius) + 1;
    Ok(match model.family {
        Family::NearestNeighborIsing | Family::AnisotropicRotator { .. } => 0.0,
        Family::AxialIsing { alpha } => 2.0 * j * power_tail_1d(alpha, start),
        Family::BiAxialIsing {
            alpha_horizontal,
            alpha_vertical,
        } => {
            2.0 * j
                * (power_tail_1d(alpha_horizontal, start) + power_tail_1d(alpha_vertical, start))
        }
        Family::IsotropicIsing { alpha } | Family::IsotropicRotator { alpha } => {
            j * ShellTail::new(alpha).beyond(u64::from(radius))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Rotor;
    use core::f64::consts::FRAC_PI_2;
    use proptest::prelude::*;

    fn iso(alpha: f64) -> CouplingModel {
        CouplingModel::new(Family::IsotropicIsing { alpha }, 1.0).unwrap()
    }

    #[test]
    fn coupling_examples() {
        assert_eq!(
            iso(3.0).coupling(Site::ORIGIN, Site::new(2, 0)).unwrap(),
            0.125
        );
        let i1 = CouplingModel::new(Family::AxialIsing { alpha: 1.5 }, 1.0).unwrap();
        assert_eq!(i1.coupling(Site::ORIGIN, Site::new(1, 1)).unwrap(), 0.0);
        assert_eq!(i1.coupling(Site::ORIGIN, Site::new(0, 1)).unwrap(), 1.0);
        assert_eq!(i1.coupling(Site::ORIGIN, Site::new(0, 2)).unwrap(), 0.0);
        let i2 = CouplingModel::new(
            Family::BiAxialIsing {
                alpha_horizontal: 1.5,
                alpha_vertical: 1.2,
            },
            2.0,
        )
        .unwrap();
        let want = 2.0 * libm::pow(3.0, -1.2);
        assert!((i2.coupling(Site::ORIGIN, Site::new(0, 3)).unwrap() - want).abs() < 1e-15);
        assert!(matches!(
            iso(3.0).coupling(Site::new(1, 1), Site::new(1, 1)),
            Err(Error::SelfCoupling(_))
        ));
    }

    #[test]
    fn model_validation() {
        assert!(CouplingModel::new(Family::AxialIsing { alpha: 1.0 }, 1.0).is_err());
        assert!(CouplingModel::new(Family::IsotropicIsing { alpha: 2.0 }, 1.0).is_err());
        assert!(CouplingModel::new(Family::IsotropicRotator { alpha: 4.5 }, 1.0).is_err());
        assert!(CouplingModel::new(Family::IsotropicRotator { alpha: 4.0 }, 1.0).is_ok());
        assert!(CouplingModel::new(Family::AnisotropicRotator { kappa: 1.0 }, 1.0).is_err());
        assert!(CouplingModel::new(Family::NearestNeighborIsing, -1.0).is_err());
    }

    #[test]
    fn pair_energy_examples() {
        let nn = CouplingModel::nearest_neighbor(1.0).unwrap();
        assert_eq!(
            nn.pair_energy(Spin::Scalar(1), Spin::Scalar(1)).unwrap(),
            1.0
        );
        assert_eq!(
            nn.pair_energy(Spin::Scalar(1), Spin::Scalar(-1)).unwrap(),
            -1.0
        );
        assert!(nn
            .pair_energy(Spin::Scalar(1), Spin::Planar(Rotor::EAST))
            .is_err());

        let v2 = CouplingModel::new(Family::IsotropicRotator { alpha: 3.0 }, 1.0).unwrap();
        let r = Spin::Planar(Rotor::from_angle(0.7));
        assert!((v2.pair_energy(r, r).unwrap() - 1.0).abs() < 1e-15);

        let v1 = CouplingModel::new(Family::AnisotropicRotator { kappa: 0.5 }, 1.0).unwrap();
        let up = Spin::Planar(Rotor::from_angle(FRAC_PI_2));
        // sin^2(π/2) + κ cos^2(π/2) = 1
        assert_eq!(v1.pair_energy(up, up).unwrap(), 1.0);
        let east = Spin::Planar(Rotor::EAST);
        assert_eq!(v1.pair_energy(east, east).unwrap(), 0.5);
    }

    #[test]
    fn kernel_examples() {
        let nn = CouplingModel::nearest_neighbor(1.0).unwrap();
        for r in [1, 3, 8] {
            let k = build_kernel(&nn, r).unwrap();
            assert_eq!(k.entries().len(), 4);
        }
        let k = build_kernel(&iso(3.0), 2).unwrap();
        assert_eq!(k.weight(2, 0), 0.125);
        assert_eq!(k.weight(3, 0), 0.0);
        assert_eq!(k.entries().len(), 24);

        let i1 = CouplingModel::new(Family::AxialIsing { alpha: 2.0 }, 1.0).unwrap();
        let k = build_kernel(&i1, 3).unwrap();
        let mut offsets: Vec<(i32, i32)> = k.entries().iter().map(|e| (e.0, e.1)).collect();
        offsets.sort();
        let mut want = vec![
            (0, 1),
            (0, -1),
            (1, 0),
            (-1, 0),
            (2, 0),
            (-2, 0),
            (3, 0),
            (-3, 0),
        ];
        want.sort();
        assert_eq!(offsets, want);
        assert!(build_kernel(&i1, 0).is_err());
    }

    #[test]
    fn dense_kernel_size() {
        let k = build_kernel(&iso(3.0), 32).unwrap();
        assert_eq!(k.table_len(), 4225);
        assert_eq!(k.entries().len(), 4224);
    }

    #[test]
    fn tail_mass_examples() {
        let nn = CouplingModel::nearest_neighbor(1.0).unwrap();
        assert_eq!(tail_mass(&nn, 1).unwrap(), 0.0);

        let i1 = CouplingModel::new(Family::AxialIsing { alpha: 2.0 }, 1.0).unwrap();
        let t = tail_mass(&i1, 100).unwrap();
        // Two horizontal directions, each bounded by ∫_100^∞ k^-2 = 0.01.
        assert!(t <= 2.0 * 0.01);
        let direct: f64 = (101..2_000_000u64).rev().map(|k| (k as f64).powi(-2)).sum();
        assert!(t >= 2.0 * direct);
    }

    #[test]
    fn isotropic_tail_against_direct_summation() {
        // Direct sum of |v|^-4 over 10 < |v|_inf <= 2000; the remainder beyond
        // 2000 is below 3e-7, far under the 1% tolerance.
        let mut direct = 0.0;
        for x in -2000i64..=2000 {
            for y in -2000i64..=2000 {
                if x.abs().max(y.abs()) > 10 {
                    let r2 = (x * x + y * y) as f64;
                    direct += 1.0 / (r2 * r2);
                }
            }
        }
        let t = tail_mass(&iso(4.0), 10).unwrap();
        assert!(t >= direct);
        assert!((t - direct) / direct < 0.01, "tail {t} direct {direct}");
    }

    #[test]
    fn shell_constant_closed_form() {
        // 8 ∫_0^1 (1+t^2)^-2 dt = 2 + π
        let c = ShellTail::new(4.0).shell_constant();
        assert!((c - (2.0 + core::f64::consts::PI)).abs() < 1e-12);
        // 8 ∫_0^1 (1+t^2)^-3/2 dt = 8/√2
        let c3 = ShellTail::new(3.0).shell_constant();
        assert!((c3 - 8.0 / core::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn shell_tail_bound_is_continuous_and_monotone() {
        let t = ShellTail::new(2.5);
        let m = ShellTail::EXACT_SHELLS;
        for k in [0, 1, 5, 100, m - 1, m, m + 1, 10 * m, 1_000_000] {
            assert!(t.beyond(k) >= t.beyond(k + 1));
        }
        // Closed bound is an upper bound of the exact shells.
        let exact: f64 = (11..=2000).map(|s| shell_sum(2.5, s)).sum();
        assert!(exact <= t.beyond(10) - t.beyond(2000) + 1e-12);
    }

    #[test]
    fn power_tail_bounds() {
        for alpha in [1.3, 2.0, 3.5] {
            for start in [1u64, 2, 10, 1000] {
                let t = power_tail_1d(alpha, start);
                let direct: f64 = (start..start + 200_000)
                    .rev()
                    .map(|k| (k as f64).powf(-alpha))
                    .sum();
                assert!(t >= direct);
                if start > 1 {
                    let integral = ((start - 1) as f64).powf(1.0 - alpha) / (alpha - 1.0);
                    assert!(t <= integral);
                }
            }
        }
    }

    fn any_model() -> impl Strategy<Value = CouplingModel> {
        prop_oneof![
            Just(Family::NearestNeighborIsing),
            (1.05f64..3.0).prop_map(|alpha| Family::AxialIsing { alpha }),
            (1.05f64..3.0, 1.05f64..3.0).prop_map(|(a, b)| Family::BiAxialIsing {
                alpha_horizontal: a,
                alpha_vertical: b
            }),
            (2.05f64..5.0).prop_map(|alpha| Family::IsotropicIsing { alpha }),
            (0.05f64..0.95).prop_map(|kappa| Family::AnisotropicRotator { kappa }),
            (2.05f64..4.0).prop_map(|alpha| Family::IsotropicRotator { alpha }),
        ]
        .prop_flat_map(|f| (0.1f64..3.0).prop_map(move |j| CouplingModel::new(f, j).unwrap()))
    }

    proptest! {
        #[test]
        fn coupling_symmetry_and_translation(
            m in any_model(),
            (ix, iy, jx, jy, tx, ty) in (-9i32..9, -9i32..9, -9i32..9, -9i32..9, -20i32..20, -20i32..20)
        ) {
            let (i, j) = (Site::new(ix, iy), Site::new(jx, jy));
            prop_assume!(i != j);
            let c = m.coupling(i, j).unwrap();
            prop_assert!(c >= 0.0);
            prop_assert_eq!(c, m.coupling(j, i).unwrap());
            prop_assert_eq!(c, m.coupling(i.offset(tx, ty), j.offset(tx, ty)).unwrap());
        }

        #[test]
        fn kernel_matches_coupling(m in any_model(), r in 1u32..7) {
            let k = build_kernel(&m, r).unwrap();
            let ri = r as i32;
            for dy in -ri..=ri {
                for dx in -ri..=ri {
                    prop_assert_eq!(k.weight(dx, dy), m.coupling_offset(dx, dy));
                    prop_assert_eq!(k.weight(dx, dy), k.weight(-dx, -dy));
                    if m.family().is_isotropic_long_range() {
                        prop_assert_eq!(k.weight(dx, dy), k.weight(dy, dx));
                    }
                }
            }
        }

    }

    proptest! {
        // Each isotropic tail table sums about half a million exact terms.
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn tail_mass_monotone(alpha in 2.1f64..5.0, r in 1u32..60) {
            let a = tail_mass(&iso(alpha), r).unwrap();
            prop_assert!(a >= tail_mass(&iso(alpha), r + 1).unwrap());
            prop_assert!(a >= tail_mass(&iso(alpha + 0.1), r).unwrap());
            let ax = |al: f64| CouplingModel::new(Family::AxialIsing { alpha: al }, 1.0).unwrap();
            let b = tail_mass(&ax(alpha - 1.0), r).unwrap();
            prop_assert!(b >= tail_mass(&ax(alpha - 1.0), r + 1).unwrap());
            prop_assert!(b >= tail_mass(&ax(alpha - 0.9), r).unwrap());
        }
    }
}
