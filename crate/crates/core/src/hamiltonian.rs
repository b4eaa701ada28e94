//! Finite-volume Hamiltonians with frozen sites and boundary conditions.
//!
//! A [`FiniteVolume`] holds the spins of a box, the mask of frozen sites
//! and the static field that the exterior (everything outside the box)
//! exerts on each free site. The free sites form the region whose energy
//!
//! ```text
//! H(σ | ω) = - Σ_{i<j, i or j free} J(i,j) <σ_i, σ_j> - Σ_{i free} <h_ext(i), σ_i>
//! ```
//!
//! is evaluated, with couplings truncated at the kernel radius.

use alloc::vec;
use alloc::vec::Vec;

use crate::config::{Level, Rotor, Spin, SpinConfiguration, SpinKind};
use crate::couplings::{power_tail_1d, CouplingModel, Family, InteractionKernel, ShellTail};
use crate::error::{Error, Result};
use crate::lattice::{BoxRegion, Site, SiteSet};

/// What lies outside the configuration window.
#[derive(Debug, Clone, PartialEq)]
pub enum Exterior {
    /// No couplings to the outside.
    Free,
    /// The homogeneous configuration of the given level on all of `Z^2`.
    Homogeneous(Level),
    /// Explicit values on a larger window; must cover the kernel reach.
    Explicit(SpinConfiguration),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    pub exterior: Exterior,
}

impl BoundarySpec {
    pub fn free() -> Self {
        Self {
            exterior: Exterior::Free,
        }
    }

    pub fn homogeneous(level: Level) -> Self {
        Self {
            exterior: Exterior::Homogeneous(level),
        }
    }

    pub fn explicit(config: SpinConfiguration) -> Self {
        Self {
            exterior: Exterior::Explicit(config),
        }
    }

    /// Spin imposed at `site` (outside a window), if any.
    fn value(&self, site: Site, kind: SpinKind) -> Result<Option<Spin>> {
        match &self.exterior {
            Exterior::Free => Ok(None),
            Exterior::Homogeneous(level) => Ok(Some(level.spin(kind))),
            Exterior::Explicit(c) => c.get(site).map(Some).ok_or(Error::MissingExterior(site)),
        }
    }
}

/// Local field acting on one spin; the site's conditional energy is
/// `-h σ` (Ising) or `-(h_x cos θ + h_y sin θ)` (rotators).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalField {
    Scalar(f64),
    Planar { x: f64, y: f64 },
}

impl LocalField {
    /// `<h, s>` for a spin of the matching kind.
    pub fn dot(self, spin: Spin) -> Result<f64> {
        match (self, spin) {
            (LocalField::Scalar(h), Spin::Scalar(s)) => Ok(h * f64::from(s)),
            (LocalField::Planar { x, y }, Spin::Planar(r)) => Ok(x * r.cos() + y * r.sin()),
            (LocalField::Scalar(_), s) | (LocalField::Planar { .. }, s) => {
                Err(Error::KindMismatch {
                    expected: if matches!(self, LocalField::Scalar(_)) {
                        "scalar"
                    } else {
                        "planar"
                    },
                    found: s.kind().name(),
                })
            }
        }
    }

    pub fn vertical(self) -> f64 {
        match self {
            LocalField::Scalar(h) => h,
            LocalField::Planar { y, .. } => y,
        }
    }
}

#[derive(Debug, Clone)]
enum State {
    Scalar(Vec<f64>),
    Planar { cos: Vec<f64>, sin: Vec<f64> },
}

/// A compiled finite-volume system ready for energy evaluation and updates.
#[derive(Debug, Clone)]
pub struct FiniteVolume<'k> {
    model: CouplingModel,
    kernel: &'k InteractionKernel,
    window: BoxRegion,
    frozen: SiteSet,
    free: Vec<usize>,
    state: State,
    /// Unweighted exterior field components per window site.
    ext_a: Vec<f64>,
    ext_b: Vec<f64>,
}

impl<'k> FiniteVolume<'k> {
    pub fn new(
        model: &CouplingModel,
        kernel: &'k InteractionKernel,
        config: &SpinConfiguration,
        bc: &BoundarySpec,
    ) -> Result<Self> {
        let kind = model.kind();
        if config.kind() != kind {
            return Err(Error::KindMismatch {
                expected: kind.name(),
                found: config.kind().name(),
            });
        }
        if let Exterior::Explicit(ext) = &bc.exterior {
            if ext.kind() != kind {
                return Err(Error::KindMismatch {
                    expected: kind.name(),
                    found: ext.kind().name(),
                });
            }
        }
        let window = config.window();
        let state = match (config.scalar_values(), config.rotors()) {
            (Some(v), _) => State::Scalar(v.iter().map(|&s| f64::from(s)).collect()),
            (_, Some(r)) => State::Planar {
                cos: r.iter().map(|r| r.cos()).collect(),
                sin: r.iter().map(|r| r.sin()).collect(),
            },
            _ => unreachable!(),
        };
        let frozen = config.frozen().clone();
        let free: Vec<usize> = (0..window.len())
            .filter(|&i| !frozen.contains_index(i))
            .collect();
        let mut fv = Self {
            model: *model,
            kernel,
            window,
            frozen,
            free,
            state,
            ext_a: vec![0.0; window.len()],
            ext_b: vec![0.0; window.len()],
        };
        fv.compute_exterior_field(bc)?;
        Ok(fv)
    }

    fn compute_exterior_field(&mut self, bc: &BoundarySpec) -> Result<()> {
        if matches!(bc.exterior, Exterior::Free) {
            return Ok(());
        }
        let kind = self.model.kind();
        let reach = self.kernel.reach() as i32;
        let l = self.window.half_width() as i32;
        let entries = self.kernel.entries();
        // Sites within `reach` of the boundary are the only ones that see
        // the exterior.
        for &i in &self.free {
            let site = self.window.site(i);
            if site.sup_norm() as i32 + reach <= l {
                continue;
            }
            let (mut a, mut b) = (0.0, 0.0);
            for &(dx, dy, w) in &entries {
                let target = site.offset(dx, dy);
                if self.window.contains(target) {
                    continue;
                }
                match bc.value(target, kind)? {
                    Some(Spin::Scalar(s)) => a += w * f64::from(s),
                    Some(Spin::Planar(r)) => {
                        a += w * r.cos();
                        b += w * r.sin();
                    }
                    None => {}
                }
            }
            self.ext_a[i] = a;
            self.ext_b[i] = b;
        }
        Ok(())
    }

    pub fn model(&self) -> &CouplingModel {
        &self.model
    }

    pub fn kernel(&self) -> &InteractionKernel {
        self.kernel
    }

    pub fn window(&self) -> BoxRegion {
        self.window
    }

    pub fn kind(&self) -> SpinKind {
        self.model.kind()
    }

    pub fn frozen(&self) -> &SiteSet {
        &self.frozen
    }

    /// Row-major window indices of the free sites.
    pub fn free_indices(&self) -> &[usize] {
        &self.free
    }

    pub fn free_count(&self) -> usize {
        self.free.len()
    }

    pub fn spin(&self, site: Site) -> Option<Spin> {
        self.window.index(site).map(|i| self.spin_at(i))
    }

    #[inline]
    pub(crate) fn spin_at(&self, i: usize) -> Spin {
        match &self.state {
            State::Scalar(v) => Spin::Scalar(if v[i] > 0.0 { 1 } else { -1 }),
            State::Planar { cos, sin } => Spin::Planar(Rotor::from_parts(cos[i], sin[i])),
        }
    }

    /// `σ_i` or `sin θ_i` at a window index.
    #[inline]
    pub fn order_value_at(&self, i: usize) -> f64 {
        match &self.state {
            State::Scalar(v) => v[i],
            State::Planar { sin, .. } => sin[i],
        }
    }

    /// Overwrites the spin at a free site.
    pub fn set(&mut self, site: Site, spin: Spin) -> Result<()> {
        let i = self.updatable_index(site)?;
        if spin.kind() != self.kind() {
            return Err(Error::KindMismatch {
                expected: self.kind().name(),
                found: spin.kind().name(),
            });
        }
        if let Spin::Scalar(s) = spin {
            if s != 1 && s != -1 {
                return Err(Error::InvalidValue("Ising spins must be +1 or -1"));
            }
        }
        self.set_at(i, spin);
        Ok(())
    }

    #[inline]
    pub(crate) fn set_at(&mut self, i: usize, spin: Spin) {
        match (&mut self.state, spin) {
            (State::Scalar(v), Spin::Scalar(s)) => v[i] = f64::from(s),
            (State::Planar { cos, sin }, Spin::Planar(r)) => {
                cos[i] = r.cos();
                sin[i] = r.sin();
            }
            _ => unreachable!("kind checked by callers"),
        }
    }

    #[inline]
    pub(crate) fn set_scalar_at(&mut self, i: usize, s: f64) {
        if let State::Scalar(v) = &mut self.state {
            v[i] = s;
        }
    }

    pub(crate) fn updatable_index(&self, site: Site) -> Result<usize> {
        let i = self.window.index(site).ok_or(Error::OutsideWindow(site))?;
        if self.frozen.contains_index(i) {
            return Err(Error::FrozenSite(site));
        }
        Ok(i)
    }

    /// Current configuration, frozen mask included.
    pub fn configuration(&self) -> SpinConfiguration {
        let w = self.window;
        let c = match &self.state {
            State::Scalar(v) => SpinConfiguration::from_scalar_fn(w, |s| {
                if v[w.index_unchecked(s)] > 0.0 {
                    1
                } else {
                    -1
                }
            })
            .expect("stored spins are ±1"),
            State::Planar { cos, sin } => SpinConfiguration::from_rotor_fn(w, |s| {
                let i = w.index_unchecked(s);
                Rotor::from_parts(cos[i], sin[i])
            }),
        };
        c.with_frozen(self.frozen.clone())
    }

    /// `Σ_j J(i,j) v_j` over window sites within the kernel.
    #[inline]
    fn neighbor_sum(&self, values: &[f64], i: usize) -> f64 {
        let site = self.window.site(i);
        let l = self.window.half_width() as i32;
        let side = self.window.side();
        if self.kernel.is_dense() {
            let r = self.kernel.radius() as i32;
            let dy_lo = (-r).max(-l - site.y);
            let dy_hi = r.min(l - site.y);
            let dx_lo = (-r).max(-l - site.x);
            let dx_hi = r.min(l - site.x);
            let width = (dx_hi - dx_lo + 1) as usize;
            let k_off = (dx_lo + r) as usize;
            let col0 = (site.x + dx_lo + l) as usize;
            let mut acc = 0.0;
            for dy in dy_lo..=dy_hi {
                let krow = &self.kernel.dense_row(dy)[k_off..k_off + width];
                let start = (site.y + dy + l) as usize * side + col0;
                let vrow = &values[start..start + width];
                acc += dot(krow, vrow);
            }
            acc
        } else {
            let (horizontal, vertical) = self.kernel.axial_tables();
            let mut acc = 0.0;
            for (k, &w) in horizontal.iter().enumerate() {
                let k = k as i32 + 1;
                if site.x - k >= -l {
                    acc += w * values[i - k as usize];
                }
                if site.x + k <= l {
                    acc += w * values[i + k as usize];
                }
            }
            for (k, &w) in vertical.iter().enumerate() {
                let k = k as i32 + 1;
                if site.y - k >= -l {
                    acc += w * values[i - k as usize * side];
                }
                if site.y + k <= l {
                    acc += w * values[i + k as usize * side];
                }
            }
            acc
        }
    }

    /// Field at a window index, frozen or not.
    #[inline]
    pub(crate) fn field_at(&self, i: usize) -> LocalField {
        match &self.state {
            State::Scalar(v) => LocalField::Scalar(self.neighbor_sum(v, i) + self.ext_a[i]),
            State::Planar { cos, sin } => {
                let (w1, w2) = self.model.component_weights();
                LocalField::Planar {
                    x: w1 * (self.neighbor_sum(cos, i) + self.ext_a[i]),
                    y: w2 * (self.neighbor_sum(sin, i) + self.ext_b[i]),
                }
            }
        }
    }

    /// Scalar field at a window index (Ising systems only).
    #[inline]
    pub(crate) fn scalar_field_at(&self, i: usize) -> f64 {
        match &self.state {
            State::Scalar(v) => self.neighbor_sum(v, i) + self.ext_a[i],
            State::Planar { .. } => unreachable!("scalar field of a planar system"),
        }
    }

    /// The field `h_i` on a free site.
    pub fn local_field(&self, site: Site) -> Result<LocalField> {
        let i = self.updatable_index(site)?;
        Ok(self.field_at(i))
    }

    /// Contribution of the frozen sites alone to the field at `site`
    /// (exterior excluded).
    pub fn frozen_field(&self, site: Site) -> Result<LocalField> {
        self.fixed_field(site, false)
    }

    /// Field at `site` from everything that is not updated: frozen sites
    /// plus the exterior.
    pub fn boundary_field(&self, site: Site) -> Result<LocalField> {
        self.fixed_field(site, true)
    }

    fn fixed_field(&self, site: Site, exterior: bool) -> Result<LocalField> {
        let i = self.window.index(site).ok_or(Error::OutsideWindow(site))?;
        let masked = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .enumerate()
                .map(|(j, &x)| {
                    if self.frozen.contains_index(j) {
                        x
                    } else {
                        0.0
                    }
                })
                .collect()
        };
        let (ea, eb) = if exterior {
            (self.ext_a[i], self.ext_b[i])
        } else {
            (0.0, 0.0)
        };
        Ok(match &self.state {
            State::Scalar(v) => LocalField::Scalar(self.neighbor_sum(&masked(v), i) + ea),
            State::Planar { cos, sin } => {
                let (w1, w2) = self.model.component_weights();
                LocalField::Planar {
                    x: w1 * (self.neighbor_sum(&masked(cos), i) + ea),
                    y: w2 * (self.neighbor_sum(&masked(sin), i) + eb),
                }
            }
        })
    }

    /// `H(new) - H(old)` for changing one free spin from `old` to `new`,
    /// all other spins as currently stored.
    pub fn energy_delta_between(&self, site: Site, old: Spin, new: Spin) -> Result<f64> {
        let h = self.local_field(site)?;
        Ok(h.dot(old)? - h.dot(new)?)
    }

    /// `H(new) - H(current)` for changing the spin at `site` to `new`.
    pub fn energy_delta(&self, site: Site, new: Spin) -> Result<f64> {
        let old = self.spin(site).ok_or(Error::OutsideWindow(site))?;
        self.energy_delta_between(site, old, new)
    }

    /// Energy of the free region with the current spins.
    pub fn total_energy(&self) -> f64 {
        let entries = self.kernel.entries();
        let (w1, w2) = self.model.component_weights();
        let mut energy = 0.0;
        for &i in &self.free {
            let site = self.window.site(i);
            let mut pair = 0.0;
            let si = self.spin_at(i);
            for &(dx, dy, w) in &entries {
                let Some(j) = self.window.index(site.offset(dx, dy)) else {
                    continue;
                };
                let weight = if self.frozen.contains_index(j) {
                    1.0
                } else {
                    0.5
                };
                pair += weight * w * self.pair_term(si, self.spin_at(j));
            }
            let ext = match si {
                Spin::Scalar(s) => self.ext_a[i] * f64::from(s),
                Spin::Planar(r) => w1 * self.ext_a[i] * r.cos() + w2 * self.ext_b[i] * r.sin(),
            };
            energy -= pair + ext;
        }
        energy
    }

    #[inline]
    fn pair_term(&self, a: Spin, b: Spin) -> f64 {
        self.model
            .pair_energy(a, b)
            .expect("kinds agree inside a system")
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four accumulators let the compiler vectorise without reassociation.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut tail = 0.0;
    for k in 4 * chunks..a.len() {
        tail += a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Energy of the free sites of `config` under `bc`.
pub fn total_energy(
    config: &SpinConfiguration,
    bc: &BoundarySpec,
    model: &CouplingModel,
    kernel: &InteractionKernel,
) -> Result<f64> {
    Ok(FiniteVolume::new(model, kernel, config, bc)?.total_energy())
}

pub fn local_field(
    site: Site,
    config: &SpinConfiguration,
    bc: &BoundarySpec,
    model: &CouplingModel,
    kernel: &InteractionKernel,
) -> Result<LocalField> {
    FiniteVolume::new(model, kernel, config, bc)?.local_field(site)
}

pub fn energy_delta(
    site: Site,
    old: Spin,
    new: Spin,
    config: &SpinConfiguration,
    bc: &BoundarySpec,
    model: &CouplingModel,
    kernel: &InteractionKernel,
) -> Result<f64> {
    FiniteVolume::new(model, kernel, config, bc)?.energy_delta_between(site, old, new)
}

/// Worst-case change of the energy of `Λ_inner` when the spins outside
/// `Δ_outer` are changed arbitrarily:
/// `2 Σ_{x ∈ Λ_inner} Σ_{y ∉ Δ_outer} J(x, y)`.
///
/// Offsets within the kernel radius are summed directly; everything beyond
/// is closed with rigorous tail bounds, so the value is an upper bound on
/// the untruncated sum. It is non-increasing in `outer` and
/// non-decreasing in `inner`.
pub fn energy_difference_bound(
    model: &CouplingModel,
    kernel: &InteractionKernel,
    inner: u32,
    outer: u64,
) -> Result<f64> {
    BoundEvaluator::new(model, kernel).eval(inner, outer)
}

struct BoundEvaluator<'a> {
    model: &'a CouplingModel,
    kernel: &'a InteractionKernel,
    shells: Option<ShellTail>,
}

impl<'a> BoundEvaluator<'a> {
    fn new(model: &'a CouplingModel, kernel: &'a InteractionKernel) -> Self {
        let shells = match model.family() {
            Family::IsotropicIsing { alpha } | Family::IsotropicRotator { alpha } => {
                Some(ShellTail::new(alpha))
            }
            _ => None,
        };
        Self {
            model,
            kernel,
            shells,
        }
    }

    /// `Σ_{k >= start} J k^-alpha` along one axis: kernel entries up to the
    /// radius, tail bound beyond.
    fn axis_tail(&self, alpha: f64, table: &[f64], start: u64) -> f64 {
        let r = table.len() as u64;
        let mut sum = 0.0;
        if start <= r {
            for k in (start..=r).rev() {
                sum += table[(k - 1) as usize];
            }
        }
        sum + self.model.strength() * power_tail_1d(alpha, start.max(r + 1))
    }

    fn eval(&self, inner: u32, outer: u64) -> Result<f64> {
        if outer <= u64::from(inner) {
            return Err(Error::DegenerateAnnulus {
                inner: inner.into(),
                outer,
            });
        }
        let l = i64::from(inner);
        let rows = (2 * l + 1) as f64;
        let (horizontal, vertical) = self.kernel.axial_tables();
        let line = |alpha: f64, table: &[f64]| -> f64 {
            // For each coordinate c in [-L, L], sinks at distance
            // >= outer + 1 - c on one side and outer + 1 + c on the other.
            let mut s = 0.0;
            for c in -l..=l {
                let right = (outer as i64 + 1 - c) as u64;
                let left = (outer as i64 + 1 + c) as u64;
                s += self.axis_tail(alpha, table, right) + self.axis_tail(alpha, table, left);
            }
            rows * s
        };
        let half = match self.model.family() {
            Family::NearestNeighborIsing | Family::AnisotropicRotator { .. } => 0.0,
            // Vertical bonds have length one and never leave Δ_outer.
            Family::AxialIsing { alpha } => line(alpha, horizontal),
            Family::BiAxialIsing {
                alpha_horizontal,
                alpha_vertical,
            } => line(alpha_horizontal, horizontal) + line(alpha_vertical, vertical),
            Family::IsotropicIsing { .. } | Family::IsotropicRotator { .. } => {
                let shells = self.shells.as_ref().expect("isotropic tail table");
                let r = i64::from(self.kernel.radius());
                let big = outer as i64;
                let mut s = 0.0;
                for x in BoxRegion::new(inner).sites() {
                    let a = i64::from(x.sup_norm());
                    let gap = big - a;
                    if gap < r {
                        // Offsets within the kernel that leave Δ_outer.
                        let ri = r as i32;
                        for dy in -ri..=ri {
                            for dx in -ri..=ri {
                                let y = (i64::from(x.x + dx), i64::from(x.y + dy));
                                if y.0.abs().max(y.1.abs()) > big {
                                    s += self.kernel.weight(dx, dy);
                                }
                            }
                        }
                    }
                    s += self.model.strength() * shells.beyond(gap.max(r) as u64);
                }
                s
            }
        };
        Ok(2.0 * half)
    }
}

/// Validates that `bc1` and `bc2` agree on `Δ_outer \ Λ_inner`, then
/// returns [`energy_difference_bound`].
pub fn bc_energy_difference(
    inner: u32,
    outer: u64,
    model: &CouplingModel,
    kernel: &InteractionKernel,
    bc1: &BoundarySpec,
    bc2: &BoundarySpec,
) -> Result<f64> {
    if outer <= u64::from(inner) {
        return Err(Error::DegenerateAnnulus {
            inner: inner.into(),
            outer,
        });
    }
    match (&bc1.exterior, &bc2.exterior) {
        (Exterior::Free, Exterior::Free) => {}
        (Exterior::Homogeneous(a), Exterior::Homogeneous(b)) => {
            if a != b {
                return Err(Error::BoundaryInsideAnnulus(Site::new(inner as i32 + 1, 0)));
            }
        }
        (Exterior::Free, _) | (_, Exterior::Free) => {
            return Err(Error::BoundaryInsideAnnulus(Site::new(inner as i32 + 1, 0)));
        }
        _ => {
            let outer32 =
                u32::try_from(outer).map_err(|_| Error::MissingExterior(Site::new(i32::MAX, 0)))?;
            let kind = model.kind();
            for site in BoxRegion::new(outer32).sites() {
                if site.sup_norm() <= inner {
                    continue;
                }
                let a = bc1.value(site, kind)?;
                let b = bc2.value(site, kind)?;
                if a != b {
                    return Err(Error::BoundaryInsideAnnulus(site));
                }
            }
        }
    }
    energy_difference_bound(model, kernel, inner, outer)
}

/// Outcome of [`annulus_size`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusSchedule {
    pub inner: u32,
    pub outer: u64,
    pub bound: f64,
    /// Decay exponent that controls the tail (`min` of the two for
    /// bi-axial models); `None` for finite-range families.
    pub alpha_eff: Option<f64>,
    /// Growth exponent of the asymptotic prescription `N ~ L^p`:
    /// `2/(α-1)` for axial families, `2/(α-2)` for isotropic ones.
    pub asymptotic_exponent: f64,
}

/// Growth exponent of the asymptotic annulus prescription for `model`.
pub fn asymptotic_exponent(model: &CouplingModel) -> f64 {
    match (model.family(), model.family().decay_exponent()) {
        (f, Some(alpha)) if f.is_isotropic_long_range() => 2.0 / (alpha - 2.0),
        (_, Some(alpha)) => 2.0 / (alpha - 1.0),
        _ => 0.0,
    }
}

/// Smallest `N > L` with `energy_difference_bound(L, N) <= target`.
///
/// Exponential search followed by bisection that keeps
/// `bound(lo) > target >= bound(hi)`, so on return `bound(N - 1) > target`
/// whenever `N > L + 1`.
pub fn annulus_size(
    model: &CouplingModel,
    kernel: &InteractionKernel,
    inner: u32,
    target: f64,
) -> Result<AnnulusSchedule> {
    if target.is_nan() || target <= 0.0 {
        return Err(Error::InvalidValue("target bound must be positive"));
    }
    const LIMIT: u64 = 1 << 62;
    let eval = BoundEvaluator::new(model, kernel);
    let f = |n: u64| eval.eval(inner, n);
    let first = u64::from(inner) + 1;
    let schedule = |outer: u64, bound: f64| AnnulusSchedule {
        inner,
        outer,
        bound,
        alpha_eff: model.family().decay_exponent(),
        asymptotic_exponent: asymptotic_exponent(model),
    };
    let b0 = f(first)?;
    if b0 <= target {
        return Ok(schedule(first, b0));
    }
    let mut lo = first;
    let mut step = 1u64;
    let mut hi = loop {
        let candidate = lo.saturating_add(step).min(LIMIT);
        if f(candidate)? <= target {
            break candidate;
        }
        if candidate == LIMIT {
            return Err(Error::Unattainable { limit: LIMIT });
        }
        lo = candidate;
        step = step.saturating_mul(2);
    };
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if f(mid)? <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(schedule(hi, f(hi)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{alternating_ising, alternating_rotator, homogeneous, RotatorAlternation};
    use crate::couplings::build_kernel;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    fn nn() -> (CouplingModel, InteractionKernel) {
        let m = CouplingModel::nearest_neighbor(1.0).unwrap();
        let k = build_kernel(&m, 1).unwrap();
        (m, k)
    }

    fn model(family: Family, r: u32) -> (CouplingModel, InteractionKernel) {
        let m = CouplingModel::new(family, 1.0).unwrap();
        let k = build_kernel(&m, r).unwrap();
        (m, k)
    }

    fn random_ising(window: BoxRegion, rng: &mut SplitMix64) -> SpinConfiguration {
        SpinConfiguration::from_scalar_fn(window, |_| if rng.next_f64() < 0.5 { 1 } else { -1 })
            .unwrap()
    }

    #[test]
    fn single_site_energies() {
        let (m, k) = nn();
        let plus = BoundarySpec::homogeneous(Level::Plus);
        let up = homogeneous(BoxRegion::new(0), SpinKind::Scalar, Level::Plus);
        assert_eq!(total_energy(&up, &plus, &m, &k).unwrap(), -4.0);
        let down = homogeneous(BoxRegion::new(0), SpinKind::Scalar, Level::Minus);
        assert_eq!(total_energy(&down, &plus, &m, &k).unwrap(), 4.0);
    }

    #[test]
    fn isotropic_single_site_against_offset_sum() {
        let (m, k) = model(Family::IsotropicIsing { alpha: 3.0 }, 2);
        let up = homogeneous(BoxRegion::new(0), SpinKind::Scalar, Level::Plus);
        let e = total_energy(&up, &BoundarySpec::homogeneous(Level::Plus), &m, &k).unwrap();
        let mut direct = 0.0;
        for dx in -2i32..=2 {
            for dy in -2i32..=2 {
                if (dx, dy) != (0, 0) {
                    direct += ((dx * dx + dy * dy) as f64).powf(-1.5);
                }
            }
        }
        assert!((e + direct).abs() < 1e-12);
    }

    #[test]
    fn local_field_examples() {
        let (m, k) = nn();
        // (1,0) between frozen (0,0)=+1 and (2,0)=-1; vertical neighbours
        // are outside a one-row window, exterior free.
        let mut c = SpinConfiguration::from_scalar_fn(BoxRegion::new(2), |_| 1).unwrap();
        c.pin(Site::new(0, 0), Spin::Scalar(1)).unwrap();
        c.pin(Site::new(2, 0), Spin::Scalar(-1)).unwrap();
        for s in [Site::new(1, 1), Site::new(1, -1)] {
            c.pin(s, Spin::Scalar(1)).unwrap();
        }
        let fv = FiniteVolume::new(&m, &k, &c, &BoundarySpec::free()).unwrap();
        // Horizontal pair cancels, the two vertical +1 neighbours remain.
        assert_eq!(
            fv.local_field(Site::new(1, 0)).unwrap(),
            LocalField::Scalar(2.0)
        );

        let all_plus = homogeneous(BoxRegion::new(1), SpinKind::Scalar, Level::Plus);
        assert_eq!(
            local_field(Site::ORIGIN, &all_plus, &BoundarySpec::free(), &m, &k).unwrap(),
            LocalField::Scalar(4.0)
        );
        let mut frozen = all_plus.clone();
        frozen.freeze(Site::ORIGIN).unwrap();
        assert!(matches!(
            local_field(Site::ORIGIN, &frozen, &BoundarySpec::free(), &m, &k),
            Err(Error::FrozenSite(_))
        ));
    }

    #[test]
    fn axial_field_against_direct_sum() {
        let (m, k) = model(Family::AxialIsing { alpha: 1.5 }, 100);
        let c = homogeneous(BoxRegion::new(0), SpinKind::Scalar, Level::Plus);
        let h = local_field(
            Site::ORIGIN,
            &c,
            &BoundarySpec::homogeneous(Level::Plus),
            &m,
            &k,
        )
        .unwrap();
        let direct = 2.0 + 2.0 * (1..=100).map(|k| (k as f64).powf(-1.5)).sum::<f64>();
        match h {
            LocalField::Scalar(v) => assert!((v - direct).abs() < 1e-12),
            _ => panic!(),
        }
    }

    #[test]
    fn energy_delta_examples() {
        let (m, k) = nn();
        let c = homogeneous(BoxRegion::new(1), SpinKind::Scalar, Level::Plus);
        let bc = BoundarySpec::homogeneous(Level::Plus);
        let fv = FiniteVolume::new(&m, &k, &c, &bc).unwrap();
        let h = fv.local_field(Site::ORIGIN).unwrap().vertical();
        assert_eq!(
            fv.energy_delta_between(Site::ORIGIN, Spin::Scalar(1), Spin::Scalar(-1))
                .unwrap(),
            2.0 * h
        );
        assert_eq!(fv.energy_delta(Site::ORIGIN, Spin::Scalar(1)).unwrap(), 0.0);
    }

    #[test]
    fn energy_delta_matches_recomputed_totals() {
        let (m, k) = nn();
        let mut rng = SplitMix64::new(42);
        let window = BoxRegion::new(3);
        let ext = random_ising(BoxRegion::new(4), &mut rng);
        let bc = BoundarySpec::explicit(ext);
        let c = random_ising(window, &mut rng);
        let mut fv = FiniteVolume::new(&m, &k, &c, &bc).unwrap();
        for site in window.sites() {
            let before = fv.total_energy();
            let old = fv.spin(site).unwrap();
            let new = Spin::Scalar(-(old.order_value() as i8));
            let delta = fv.energy_delta(site, new).unwrap();
            fv.set(site, new).unwrap();
            assert_eq!(delta, fv.total_energy() - before);
        }
    }

    #[test]
    fn explicit_exterior_must_cover_reach() {
        let (m, k) = model(Family::IsotropicIsing { alpha: 3.0 }, 3);
        let c = homogeneous(BoxRegion::new(2), SpinKind::Scalar, Level::Plus);
        let small = homogeneous(BoxRegion::new(4), SpinKind::Scalar, Level::Plus);
        assert!(matches!(
            total_energy(&c, &BoundarySpec::explicit(small), &m, &k),
            Err(Error::MissingExterior(_))
        ));
        let big = homogeneous(BoxRegion::new(5), SpinKind::Scalar, Level::Plus);
        let e1 = total_energy(&c, &BoundarySpec::explicit(big), &m, &k).unwrap();
        let e2 = total_energy(&c, &BoundarySpec::homogeneous(Level::Plus), &m, &k).unwrap();
        assert!((e1 - e2).abs() < 1e-12);
    }

    #[test]
    fn zero_frozen_field_for_alternating_constraint() {
        use crate::decimation::preimage_freeze;
        let window = BoxRegion::new(6);
        let (m, k) = nn();
        let mut c = preimage_freeze(&alternating_ising(BoxRegion::new(3)), window).unwrap();
        c.freeze(Site::ORIGIN).unwrap();
        let fv = FiniteVolume::new(&m, &k, &c, &BoundarySpec::free()).unwrap();
        for s in window.sites().filter(|s| !s.is_even()) {
            assert_eq!(
                fv.frozen_field(s).unwrap(),
                LocalField::Scalar(0.0),
                "at {s}"
            );
        }

        let (v1, k1) = model(Family::AnisotropicRotator { kappa: 0.5 }, 1);
        let image = alternating_rotator(BoxRegion::new(3), RotatorAlternation::Horizontal);
        let r = preimage_freeze(&image, window).unwrap();
        let fv = FiniteVolume::new(&v1, &k1, &r, &BoundarySpec::free()).unwrap();
        for s in window.sites().filter(|s| !s.is_even()) {
            assert_eq!(fv.frozen_field(s).unwrap().vertical(), 0.0, "at {s}");
        }
    }

    #[test]
    fn nn_bound_is_zero() {
        let (m, k) = nn();
        for l in 0..5 {
            assert_eq!(
                energy_difference_bound(&m, &k, l, u64::from(l) + 1).unwrap(),
                0.0
            );
        }
        let s = annulus_size(&m, &k, 5, 1.0).unwrap();
        assert_eq!((s.outer, s.bound), (6, 0.0));
        assert!(energy_difference_bound(&m, &k, 3, 3).is_err());
        assert!(annulus_size(&m, &k, 3, 0.0).is_err());
    }

    /// Direct double sum `2 Σ_{x∈Λ_L} Σ_{y∉Δ_N, |y|_inf <= cutoff} J(x,y)`.
    fn brute_double_sum(m: &CouplingModel, l: i32, n: i32, cutoff: i32) -> f64 {
        let mut s = 0.0;
        let outside = |y: (i32, i32)| y.0.abs().max(y.1.abs()) > n;
        for xx in -l..=l {
            for xy in -l..=l {
                if m.family().is_isotropic_long_range() {
                    for yy in -cutoff..=cutoff {
                        for yx in -cutoff..=cutoff {
                            if outside((yx, yy)) {
                                s += m.coupling_offset(yx - xx, yy - xy);
                            }
                        }
                    }
                } else {
                    // Axial couplings vanish off the row and column of x.
                    for t in -cutoff..=cutoff {
                        if outside((t, xy)) {
                            s += m.coupling_offset(t - xx, 0);
                        }
                        if outside((xx, t)) {
                            s += m.coupling_offset(0, t - xy);
                        }
                    }
                }
            }
        }
        2.0 * s
    }

    #[test]
    fn axial_bound_brackets_brute_force() {
        let (m, k) = model(Family::AxialIsing { alpha: 1.5 }, 40);
        let bound = energy_difference_bound(&m, &k, 2, 50).unwrap();
        let brute = brute_double_sum(&m, 2, 50, 3000);
        assert!(brute <= bound);
        // The crude estimate 2 (2L+1)^2 · 2 (N-L)^(1-α)/(α-1) dominates.
        let analytic = 2.0 * 25.0 * 2.0 * (48f64).powf(-0.5) / 0.5;
        assert!(bound <= analytic);
        // Mass beyond the cutoff: 2 · 25 sources · 2 sides · Σ_{k>2998} k^-1.5.
        let beyond = 2.0 * 25.0 * 2.0 * 2.0 * (2998f64).powf(-0.5);
        assert!(bound - brute < 1.05 * beyond, "{}", bound - brute);
    }

    #[test]
    fn isotropic_bound_brackets_brute_force() {
        let (m, k) = model(Family::IsotropicIsing { alpha: 3.0 }, 6);
        for n in [3u64, 5, 9, 20] {
            let bound = energy_difference_bound(&m, &k, 2, n).unwrap();
            let brute = brute_double_sum(&m, 2, n as i32, 200);
            assert!(brute <= bound, "N={n}: brute {brute} > bound {bound}");
            // Beyond the cutoff ~ 2·25·5.66/198, plus the kernel overlap slack.
            assert!(bound - brute < 0.3 * bound + 1.0, "N={n}");
        }
    }

    #[test]
    fn isotropic_annulus_is_minimal() {
        let (m, k) = model(Family::IsotropicIsing { alpha: 4.0 }, 8);
        let s = annulus_size(&m, &k, 10, 1.0).unwrap();
        assert!(s.bound <= 1.0);
        assert!(energy_difference_bound(&m, &k, 10, s.outer - 1).unwrap() > 1.0);
        assert_eq!(s.asymptotic_exponent, 1.0);
        assert!(s.outer > 10 && s.outer < 200);
    }

    #[test]
    fn biaxial_uses_slowest_decay() {
        let (m, k) = model(
            Family::BiAxialIsing {
                alpha_horizontal: 1.5,
                alpha_vertical: 3.0,
            },
            8,
        );
        let s = annulus_size(&m, &k, 8, 1.0).unwrap();
        assert_eq!(s.alpha_eff, Some(1.5));
        assert_eq!(s.asymptotic_exponent, 4.0);
    }

    #[test]
    fn bc_pairs_must_agree_on_annulus() {
        let (m, k) = model(Family::IsotropicIsing { alpha: 3.0 }, 3);
        let plus = BoundarySpec::homogeneous(Level::Plus);
        let minus = BoundarySpec::homogeneous(Level::Minus);
        assert!(matches!(
            bc_energy_difference(1, 3, &m, &k, &plus, &minus),
            Err(Error::BoundaryInsideAnnulus(_))
        ));
        let a = homogeneous(BoxRegion::new(5), SpinKind::Scalar, Level::Plus);
        let mut b = a.clone();
        b.set(Site::new(5, 5), Spin::Scalar(-1)).unwrap();
        let v = bc_energy_difference(
            1,
            3,
            &m,
            &k,
            &BoundarySpec::explicit(a.clone()),
            &BoundarySpec::explicit(b),
        )
        .unwrap();
        assert!(v > 0.0);
        let mut c = a.clone();
        c.set(Site::new(2, 0), Spin::Scalar(-1)).unwrap();
        assert!(bc_energy_difference(
            1,
            3,
            &m,
            &k,
            &BoundarySpec::explicit(a),
            &BoundarySpec::explicit(c)
        )
        .is_err());
    }

    #[test]
    fn isotropic_rotator_rotation_invariance() {
        let (m, k) = model(Family::IsotropicRotator { alpha: 3.0 }, 3);
        let mut rng = SplitMix64::new(9);
        let c = SpinConfiguration::from_angle_fn(BoxRegion::new(2), |_| rng.uniform(-3.0, 3.0));
        let ext = SpinConfiguration::from_angle_fn(BoxRegion::new(5), |_| rng.uniform(-3.0, 3.0));
        let e = total_energy(&c, &BoundarySpec::explicit(ext.clone()), &m, &k).unwrap();
        let pi = core::f64::consts::PI;
        let e2 = total_energy(
            &c.rotated(pi),
            &BoundarySpec::explicit(ext.rotated(pi)),
            &m,
            &k,
        )
        .unwrap();
        assert!((e - e2).abs() < 1e-10);
    }

    fn ising_family() -> impl Strategy<Value = Family> {
        prop_oneof![
            Just(Family::NearestNeighborIsing),
            (1.1f64..2.5).prop_map(|alpha| Family::AxialIsing { alpha }),
            (1.1f64..2.5, 1.1f64..2.5).prop_map(|(a, b)| Family::BiAxialIsing {
                alpha_horizontal: a,
                alpha_vertical: b
            }),
            (2.1f64..4.5).prop_map(|alpha| Family::IsotropicIsing { alpha }),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn delta_antisymmetry_and_alignment(family in ising_family(), seed in any::<u64>()) {
            let (m, k) = model(family, 3);
            let mut rng = SplitMix64::new(seed);
            let c = random_ising(BoxRegion::new(2), &mut rng);
            let ext = random_ising(BoxRegion::new(5), &mut rng);
            let mut fv = FiniteVolume::new(&m, &k, &c, &BoundarySpec::explicit(ext)).unwrap();
            for site in BoxRegion::new(2).sites() {
                let up = fv.energy_delta_between(site, Spin::Scalar(-1), Spin::Scalar(1)).unwrap();
                let down = fv.energy_delta_between(site, Spin::Scalar(1), Spin::Scalar(-1)).unwrap();
                prop_assert!((up + down).abs() < 1e-12);
                let h = fv.local_field(site).unwrap().vertical();
                let before = fv.total_energy();
                fv.set(site, Spin::Scalar(if h >= 0.0 { 1 } else { -1 })).unwrap();
                prop_assert!(fv.total_energy() <= before + 1e-9);
            }
        }

        #[test]
        fn global_flip_symmetry(family in ising_family(), seed in any::<u64>()) {
            let (m, k) = model(family, 3);
            let mut rng = SplitMix64::new(seed);
            let c = random_ising(BoxRegion::new(2), &mut rng);
            let ext = random_ising(BoxRegion::new(5), &mut rng);
            let e = total_energy(&c, &BoundarySpec::explicit(ext.clone()), &m, &k).unwrap();
            let f = total_energy(&c.reflected(), &BoundarySpec::explicit(ext.reflected()), &m, &k).unwrap();
            prop_assert!((e - f).abs() < 1e-12);
        }

        #[test]
        fn bc_change_outside_outer_box_is_bounded(family in ising_family(), seed in any::<u64>(), extra in 1u32..3) {
            let (inner, r) = (1u32, 4u32);
            let outer = inner + extra;
            let (m, k) = model(family, r);
            let mut rng = SplitMix64::new(seed);
            let ext_window = BoxRegion::new(inner + r + 1);
            let bc1 = random_ising(ext_window, &mut rng);
            let bc2 = SpinConfiguration::from_scalar_fn(ext_window, |s| {
                if s.sup_norm() <= outer { bc1.get(s).unwrap().order_value() as i8 }
                else if rng.next_f64() < 0.5 { 1 } else { -1 }
            }).unwrap();
            let (b1, b2) = (BoundarySpec::explicit(bc1), BoundarySpec::explicit(bc2));
            let bound = bc_energy_difference(inner, outer.into(), &m, &k, &b1, &b2).unwrap();
            for _ in 0..8 {
                let sigma = random_ising(BoxRegion::new(inner), &mut rng);
                // The annulus values are fixed by the boundary configuration.
                let e1 = total_energy(&sigma, &b1, &m, &k).unwrap();
                let e2 = total_energy(&sigma, &b2, &m, &k).unwrap();
                prop_assert!((e1 - e2).abs() <= bound + 1e-12);
            }
        }

    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn bound_monotone(alpha in 2.2f64..4.0, l in 0u32..4, n in 1u64..40) {
            let (m, k) = model(Family::IsotropicIsing { alpha }, 5);
            let outer = u64::from(l) + n;
            let b = energy_difference_bound(&m, &k, l, outer).unwrap();
            prop_assert!(b >= energy_difference_bound(&m, &k, l, outer + 1).unwrap());
            if u64::from(l) + 1 < outer {
                prop_assert!(energy_difference_bound(&m, &k, l + 1, outer).unwrap() >= b);
            }
        }
    }
}
