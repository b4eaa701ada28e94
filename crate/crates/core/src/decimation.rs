//! Decimation `ω'_i = ω_{2i}`, pre-image freezing and the
//! essential-discontinuity probe.
//!
//! The probe compares the origin observable of the decorated system (even
//! sites frozen, odd sites and the origin free) under two image
//! configurations that agree with the alternating configuration on `Λ'_L`
//! and are all-plus resp. all-minus on the annulus `Δ'_N \ Λ'_L`. Both
//! share the maximal far field outside the original window `Δ_{2N}`.

use alloc::vec::Vec;

use crate::config::{
    alternating_ising, alternating_rotator, in_sub_neighborhood, Level, RotatorAlternation, Spin,
    SpinConfiguration, SpinKind,
};
use crate::couplings::{build_kernel, CouplingModel, InteractionKernel};
use crate::error::{Error, Result};
use crate::hamiltonian::annulus_size;
use crate::lattice::{BoxRegion, Site};
use crate::rng::derive_seed;
use crate::sampler::{constrained_plus_magnetization, ChainSpec};
use crate::stats::Estimate;

/// Image configuration `ω'_i = ω_{2i}` on the half-size window.
pub fn decimate(config: &SpinConfiguration) -> SpinConfiguration {
    let image = BoxRegion::new(config.window().half_width() / 2);
    let value = |s: Site| {
        config
            .get(Site::new(2 * s.x, 2 * s.y))
            .expect("2i lies in the window")
    };
    match config.kind() {
        SpinKind::Scalar => SpinConfiguration::from_scalar_fn(image, |s| match value(s) {
            Spin::Scalar(v) => v,
            Spin::Planar(_) => unreachable!(),
        })
        .expect("values are copied from a valid configuration"),
        SpinKind::Planar => SpinConfiguration::from_rotor_fn(image, |s| match value(s) {
            Spin::Planar(r) => r,
            Spin::Scalar(_) => unreachable!(),
        }),
    }
}

/// Pre-image of `image` on `window`: every even site `2i` other than the
/// origin is frozen to `image_i`; the origin takes `image_0` but stays
/// free; odd sites start at the maximal configuration.
pub fn preimage_freeze(image: &SpinConfiguration, window: BoxRegion) -> Result<SpinConfiguration> {
    let needed = window.half_width() / 2;
    if image.window().half_width() < needed {
        return Err(Error::WindowMismatch {
            left: image.window().half_width(),
            right: needed,
        });
    }
    let mut c = SpinConfiguration::homogeneous(window, image.kind(), Level::Plus);
    for site in window.sites().filter(|s| s.is_even()) {
        let value = image
            .get(Site::new(site.x / 2, site.y / 2))
            .expect("image covers half the window");
        if site == Site::ORIGIN {
            c.set(site, value)?;
        } else {
            c.pin(site, value)?;
        }
    }
    Ok(c)
}

/// Which configuration sits on the inner image box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ImageCenter {
    /// The alternating (bad) configuration.
    #[default]
    Alternating,
    /// The all-plus (good) configuration, used as a control.
    AllPlus,
}

/// Parameters of one discontinuity probe. `inner` and `outer` are the
/// image-lattice radii `L` and `N`; the decorated system lives on the
/// original window `Δ_{2N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSpec {
    pub model: CouplingModel,
    pub kernel_radius: u32,
    pub beta: f64,
    pub inner: u32,
    pub outer: u32,
    /// Neighbourhood width recorded for rotators; annulus angles are
    /// exactly `±π/2`.
    pub eps: f64,
    pub chain: ChainSpec,
    pub replicas: u32,
    pub center: ImageCenter,
    pub alternation: RotatorAlternation,
}

impl ProbeSpec {
    pub const DEFAULT_REPLICAS: u32 = 8;
    pub const DEFAULT_EPS: f64 = 0.1;

    pub fn new(
        model: CouplingModel,
        kernel_radius: u32,
        beta: f64,
        inner: u32,
        outer: u32,
        chain: ChainSpec,
    ) -> Self {
        Self {
            model,
            kernel_radius,
            beta,
            inner,
            outer,
            eps: Self::DEFAULT_EPS,
            chain,
            replicas: Self::DEFAULT_REPLICAS,
            center: ImageCenter::Alternating,
            alternation: RotatorAlternation::Horizontal,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.outer <= self.inner {
            return Err(Error::DegenerateAnnulus {
                inner: self.inner.into(),
                outer: self.outer.into(),
            });
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidValue("beta must be finite and non-negative"));
        }
        if self.replicas == 0 {
            return Err(Error::InvalidValue("replicas must be positive"));
        }
        if self.kernel_radius == 0 {
            return Err(Error::InvalidValue("kernel radius must be positive"));
        }
        if self.model.kind() == SpinKind::Planar
            && !(self.eps > 0.0 && self.eps < core::f64::consts::FRAC_PI_2)
        {
            return Err(Error::InvalidValue("eps must lie in (0, pi/2)"));
        }
        self.chain.validate()
    }

    /// Original-lattice window of the decorated system.
    pub fn window(&self) -> BoxRegion {
        BoxRegion::new(2 * self.outer)
    }

    pub fn kernel(&self) -> Result<InteractionKernel> {
        build_kernel(&self.model, self.kernel_radius)
    }

    fn center_configuration(&self) -> SpinConfiguration {
        let window = BoxRegion::new(self.outer);
        match (self.center, self.model.kind()) {
            (ImageCenter::AllPlus, kind) => {
                SpinConfiguration::homogeneous(window, kind, Level::Plus)
            }
            (ImageCenter::Alternating, SpinKind::Scalar) => alternating_ising(window),
            (ImageCenter::Alternating, SpinKind::Planar) => {
                alternating_rotator(window, self.alternation)
            }
        }
    }

    /// Image configuration for one side: the center on `Λ'_L`, the side's
    /// homogeneous value on the annulus.
    pub fn image(&self, side: Level) -> Result<SpinConfiguration> {
        let center = self.center_configuration();
        let kind = self.model.kind();
        let mut image = center.clone();
        for site in BoxRegion::new(self.outer).sites() {
            if site.sup_norm() > self.inner {
                image.set(site, side.spin(kind))?;
            }
        }
        debug_assert!(in_sub_neighborhood(
            &image,
            &center,
            self.inner,
            self.outer,
            side,
            self.eps.min(1.0)
        )
        .unwrap_or(false));
        Ok(image)
    }

    /// Sizing of the annulus that makes the boundary-condition energy
    /// difference on the original lattice at most one, when that is below
    /// `2N`; `None` when the probe's `N` is large enough or the model is
    /// finite range.
    pub fn annulus_shortfall(&self) -> Result<Option<u64>> {
        if !self.model.family().is_long_range() {
            return Ok(None);
        }
        let kernel = self.kernel()?;
        let needed = match annulus_size(&self.model, &kernel, 2 * self.inner, 1.0) {
            Ok(s) => s.outer,
            Err(Error::Unattainable { limit }) => limit,
            Err(e) => return Err(e),
        };
        Ok((u64::from(2 * self.outer) < needed).then_some(needed))
    }
}

/// One independent chain of a probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeJob {
    pub side: Level,
    pub replica: u32,
    pub seed: u64,
}

/// All chains of a probe in merge order: plus side first, replicas
/// ascending.
pub fn probe_jobs(spec: &ProbeSpec) -> Vec<ProbeJob> {
    [Level::Plus, Level::Minus]
        .into_iter()
        .enumerate()
        .flat_map(|(k, side)| {
            (0..spec.replicas).map(move |replica| ProbeJob {
                side,
                replica,
                seed: derive_seed(derive_seed(spec.chain.seed, k as u64), u64::from(replica)),
            })
        })
        .collect()
}

/// Runs one probe chain and returns the origin estimate.
pub fn run_probe_job(
    spec: &ProbeSpec,
    kernel: &InteractionKernel,
    job: &ProbeJob,
) -> Result<Estimate> {
    let frozen = preimage_freeze(&spec.image(job.side)?, spec.window())?;
    constrained_plus_magnetization(
        &frozen,
        2 * spec.outer,
        spec.beta,
        &spec.model,
        kernel,
        &spec.chain.with_seed(job.seed),
    )
}

/// Parameters echoed into a [`GapReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeParams {
    pub model: CouplingModel,
    pub kernel_radius: u32,
    pub beta: f64,
    pub inner: u32,
    pub outer: u32,
    pub eps: f64,
    pub center: ImageCenter,
    pub seed_base: u64,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub m_plus: Estimate,
    pub m_minus: Estimate,
    pub gap: f64,
    /// `gap / sqrt(se_plus^2 + se_minus^2)`.
    pub significance: f64,
    pub replicas_plus: Vec<Estimate>,
    pub replicas_minus: Vec<Estimate>,
    pub params: ProbeParams,
}

impl GapReport {
    pub fn combined_error(&self) -> f64 {
        libm::hypot(self.m_plus.std_error, self.m_minus.std_error)
    }
}

pub fn significance(gap: f64, combined_error: f64) -> f64 {
    if combined_error > 0.0 {
        gap / combined_error
    } else if gap == 0.0 {
        0.0
    } else {
        gap.signum() * f64::INFINITY
    }
}

/// Merges job results (in [`probe_jobs`] order) into a report.
pub fn assemble_gap_report(
    spec: &ProbeSpec,
    results: &[(ProbeJob, Estimate)],
) -> Result<GapReport> {
    let pick = |side: Level| -> Vec<Estimate> {
        let mut v: Vec<(u32, Estimate)> = results
            .iter()
            .filter(|(j, _)| j.side == side)
            .map(|(j, e)| (j.replica, *e))
            .collect();
        v.sort_by_key(|(r, _)| *r);
        v.into_iter().map(|(_, e)| e).collect()
    };
    let (plus, minus) = (pick(Level::Plus), pick(Level::Minus));
    if plus.len() != spec.replicas as usize || minus.len() != spec.replicas as usize {
        return Err(Error::Invalid("probe results do not match the job list"));
    }
    let m_plus = Estimate::pool(&plus);
    let m_minus = Estimate::pool(&minus);
    let gap = m_plus.mean - m_minus.mean;
    let se = libm::hypot(m_plus.std_error, m_minus.std_error);
    Ok(GapReport {
        m_plus,
        m_minus,
        gap,
        significance: significance(gap, se),
        replicas_plus: plus,
        replicas_minus: minus,
        params: ProbeParams {
            model: spec.model,
            kernel_radius: spec.kernel_radius,
            beta: spec.beta,
            inner: spec.inner,
            outer: spec.outer,
            eps: spec.eps,
            center: spec.center,
            seed_base: spec.chain.seed,
            seeds: probe_jobs(spec).iter().map(|j| j.seed).collect(),
        },
    })
}

/// Runs every chain of the probe sequentially.
pub fn discontinuity_probe(spec: &ProbeSpec) -> Result<GapReport> {
    spec.validate()?;
    let kernel = spec.kernel()?;
    let results = probe_jobs(spec)
        .into_iter()
        .map(|job| run_probe_job(spec, &kernel, &job).map(|e| (job, e)))
        .collect::<Result<Vec<_>>>()?;
    assemble_gap_report(spec, &results)
}

/// How the image annulus radius `N` grows with `L` in a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NRule {
    /// `N = max(L + 1, ceil(L^p))` with the asymptotic growth exponent `p`
    /// of the model (`p = 0` for finite range).
    PowerSchedule,
    /// `N = max(L + 1, ceil(r L))`.
    FixedRatio(f64),
    /// Smallest `N` whose original-lattice window `Δ_{2N}` brings the
    /// boundary-condition energy difference on `Λ_{2L}` below `target`.
    Bound { target: f64 },
}

impl NRule {
    pub fn outer(
        &self,
        model: &CouplingModel,
        kernel: &InteractionKernel,
        inner: u32,
    ) -> Result<u32> {
        let floor = u64::from(inner) + 1;
        let n = match *self {
            NRule::PowerSchedule => {
                let p = crate::hamiltonian::asymptotic_exponent(model);
                let grown = if p == 0.0 {
                    0.0
                } else {
                    libm::ceil(libm::pow(f64::from(inner), p))
                };
                floor.max(grown as u64)
            }
            NRule::FixedRatio(r) => {
                if r.is_nan() || r <= 1.0 {
                    return Err(Error::InvalidValue("fixed ratio must exceed 1"));
                }
                floor.max(libm::ceil(r * f64::from(inner)) as u64)
            }
            NRule::Bound { target } => {
                let s = annulus_size(model, kernel, 2 * inner, target)?;
                floor.max(s.outer.div_ceil(2))
            }
        };
        u32::try_from(n).map_err(|_| Error::Unattainable {
            limit: u64::from(u32::MAX),
        })
    }
}

/// Probes a scan will run: one alternating row per `L`, plus a control
/// row with the all-plus image at the first `L`.
pub fn scan_plan(base: &ProbeSpec, inners: &[u32], rule: NRule) -> Result<Vec<ProbeSpec>> {
    if inners.is_empty() {
        return Err(Error::InvalidValue("L list must not be empty"));
    }
    let kernel = base.kernel()?;
    let mut plan = Vec::with_capacity(inners.len() + 1);
    for &inner in inners {
        let outer = rule.outer(&base.model, &kernel, inner)?;
        plan.push(ProbeSpec {
            inner,
            outer,
            center: ImageCenter::Alternating,
            ..base.clone()
        });
    }
    let control = ProbeSpec {
        center: ImageCenter::AllPlus,
        ..plan[0].clone()
    };
    plan.push(control);
    Ok(plan)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanTable {
    /// Alternating rows in `L` order, then the control row.
    pub rows: Vec<GapReport>,
    /// Consecutive `L` pairs where the gap more than halved.
    pub halving: Vec<(u32, u32)>,
}

/// Assembles the scan table from the reports of [`scan_plan`].
pub fn scan_table(rows: Vec<GapReport>) -> ScanTable {
    let alternating: Vec<&GapReport> = rows
        .iter()
        .filter(|r| r.params.center == ImageCenter::Alternating)
        .collect();
    let halving = alternating
        .windows(2)
        .filter(|w| w[1].gap < 0.5 * w[0].gap)
        .map(|w| (w[0].params.inner, w[1].params.inner))
        .collect();
    ScanTable { rows, halving }
}

/// Sequential scan over `inners`.
pub fn bad_vs_good_scan(base: &ProbeSpec, inners: &[u32], rule: NRule) -> Result<ScanTable> {
    let rows = scan_plan(base, inners, rule)?
        .iter()
        .map(discontinuity_probe)
        .collect::<Result<Vec<_>>>()?;
    Ok(scan_table(rows))
}

/// Probe at `N` and at `2N`; the gap shift measures how far the finite
/// window is from the constrained limit.
#[derive(Debug, Clone, PartialEq)]
pub struct Convergence {
    pub at_n: GapReport,
    pub at_2n: GapReport,
    pub shift: f64,
}

pub fn convergence_diagnostic(spec: &ProbeSpec) -> Result<Convergence> {
    let at_n = discontinuity_probe(spec)?;
    let doubled = ProbeSpec {
        outer: 2 * spec.outer,
        ..spec.clone()
    };
    let at_2n = discontinuity_probe(&doubled)?;
    Ok(Convergence {
        shift: at_2n.gap - at_n.gap,
        at_n,
        at_2n,
    })
}
