//! Single-site Markov chain Monte Carlo for finite-volume Gibbs measures.
//!
//! Ising spins are updated by heat bath, rotators by Metropolis with a
//! uniform angular proposal. Sweeps visit the free sites in row-major order,
//! so a chain is a deterministic function of its seed.

use alloc::vec::Vec;

use crate::config::{Level, Rotor, Spin, SpinConfiguration, SpinKind};
use crate::couplings::{CouplingModel, InteractionKernel};
use crate::error::{Error, Result};
use crate::hamiltonian::{BoundarySpec, FiniteVolume, LocalField};
use crate::lattice::{BoxRegion, Site, SiteSet};
use crate::rng::SplitMix64;
use crate::stats::Estimate;

/// Run-length and proposal parameters of one chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSpec {
    /// Recorded sweeps after burn-in.
    pub sweeps: u64,
    pub burn_in: u64,
    pub seed: u64,
    /// Half-width of the uniform angle proposal (rotators only).
    pub proposal_width: f64,
    /// Record every `thinning`-th sweep.
    pub thinning: u64,
}

impl ChainSpec {
    pub const DEFAULT_PROPOSAL_WIDTH: f64 = core::f64::consts::FRAC_PI_2;

    pub fn new(sweeps: u64, burn_in: u64, seed: u64) -> Result<Self> {
        let spec = Self {
            sweeps,
            burn_in,
            seed,
            proposal_width: Self::DEFAULT_PROPOSAL_WIDTH,
            thinning: 1,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 {
            return Err(Error::InvalidChain("sweeps must be positive"));
        }
        if self.thinning == 0 {
            return Err(Error::InvalidChain("thinning must be positive"));
        }
        if self.sweeps < self.thinning {
            return Err(Error::InvalidChain("thinning leaves no recorded samples"));
        }
        let w = self.proposal_width;
        if !(w > 0.0 && w <= core::f64::consts::PI) {
            return Err(Error::InvalidChain("proposal_width must lie in (0, pi]"));
        }
        Ok(())
    }

    pub fn samples(&self) -> u64 {
        self.sweeps / self.thinning
    }
}

/// Quantities recorded along a chain.
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    Constant(f64),
    /// `σ_i` or `sin θ_i`.
    Spin(Site),
    /// Mean of `σ_i` or `sin θ_i` over a set.
    MeanSpin(SiteSet),
    /// Energy of the free region.
    Energy,
}

impl Observable {
    fn check(&self, window: BoxRegion) -> Result<()> {
        match self {
            Observable::Spin(s) if !window.contains(*s) => Err(Error::OutsideWindow(*s)),
            Observable::MeanSpin(set) => {
                if set.is_empty() {
                    return Err(Error::Invalid("empty observable site set"));
                }
                match set.iter().find(|s| !window.contains(*s)) {
                    Some(s) => Err(Error::OutsideWindow(s)),
                    None => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }

    fn compile(&self, window: BoxRegion) -> Compiled {
        match self {
            Observable::Constant(c) => Compiled::Constant(*c),
            Observable::Spin(s) => Compiled::Spin(window.index_unchecked(*s)),
            Observable::MeanSpin(set) => {
                Compiled::Mean(set.iter().map(|s| window.index_unchecked(s)).collect())
            }
            Observable::Energy => Compiled::Energy,
        }
    }
}

enum Compiled {
    Constant(f64),
    Spin(usize),
    Mean(Vec<usize>),
    Energy,
}

impl Compiled {
    fn eval(&self, fv: &FiniteVolume<'_>) -> f64 {
        match self {
            Compiled::Constant(c) => *c,
            Compiled::Spin(i) => fv.order_value_at(*i),
            Compiled::Mean(idx) => {
                idx.iter().map(|&i| fv.order_value_at(i)).sum::<f64>() / idx.len() as f64
            }
            Compiled::Energy => fv.total_energy(),
        }
    }
}

/// `P(σ = +1) = 1 / (1 + exp(-2βh))`.
pub fn heat_bath_plus_probability(beta: f64, h: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-2.0 * beta * h))
}

/// Resamples an Ising spin from its exact single-site conditional.
pub fn heat_bath_update_ising(
    fv: &mut FiniteVolume<'_>,
    site: Site,
    beta: f64,
    rng: &mut SplitMix64,
) -> Result<Spin> {
    if fv.kind() != SpinKind::Scalar {
        return Err(Error::KindMismatch {
            expected: "scalar",
            found: fv.kind().name(),
        });
    }
    let i = fv.updatable_index(site)?;
    let s = heat_bath_at(fv, i, beta, rng);
    Ok(Spin::Scalar(s as i8))
}

#[inline]
fn heat_bath_at(fv: &mut FiniteVolume<'_>, i: usize, beta: f64, rng: &mut SplitMix64) -> f64 {
    let p = heat_bath_plus_probability(beta, fv.scalar_field_at(i));
    let s = if rng.next_f64() < p { 1.0 } else { -1.0 };
    fv.set_scalar_at(i, s);
    s
}

/// One Metropolis step for a rotator; returns the (possibly unchanged)
/// spin.
pub fn metropolis_update_rotator(
    fv: &mut FiniteVolume<'_>,
    site: Site,
    beta: f64,
    proposal_width: f64,
    rng: &mut SplitMix64,
) -> Result<Rotor> {
    if fv.kind() != SpinKind::Planar {
        return Err(Error::KindMismatch {
            expected: "planar",
            found: fv.kind().name(),
        });
    }
    let i = fv.updatable_index(site)?;
    metropolis_at(fv, i, beta, proposal_width, rng);
    match fv.spin_at(i) {
        Spin::Planar(r) => Ok(r),
        Spin::Scalar(_) => unreachable!(),
    }
}

#[inline]
fn metropolis_at(
    fv: &mut FiniteVolume<'_>,
    i: usize,
    beta: f64,
    width: f64,
    rng: &mut SplitMix64,
) -> bool {
    let Spin::Planar(old) = fv.spin_at(i) else {
        unreachable!()
    };
    let proposal = Rotor::from_angle(old.angle() + rng.uniform(-width, width));
    let LocalField::Planar { x, y } = fv.field_at(i) else {
        unreachable!()
    };
    let delta = -(x * (proposal.cos() - old.cos()) + y * (proposal.sin() - old.sin()));
    let u = rng.next_f64();
    if delta <= 0.0 || u < libm::exp(-beta * delta) {
        fv.set_at(i, Spin::Planar(proposal));
        true
    } else {
        false
    }
}

/// One row-major sweep over the free sites; returns accepted moves.
pub fn sweep(
    fv: &mut FiniteVolume<'_>,
    sites: &[usize],
    beta: f64,
    proposal_width: f64,
    rng: &mut SplitMix64,
) -> u64 {
    match fv.kind() {
        SpinKind::Scalar => {
            for &i in sites {
                heat_bath_at(fv, i, beta, rng);
            }
            sites.len() as u64
        }
        SpinKind::Planar => sites
            .iter()
            .map(|&i| u64::from(metropolis_at(fv, i, beta, proposal_width, rng)))
            .sum(),
    }
}

/// Result of [`run_chain`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChainRun {
    pub estimates: Vec<Estimate>,
    /// Recorded values per observable.
    pub series: Vec<Vec<f64>>,
    /// Fraction of accepted proposals (1 for heat bath).
    pub acceptance: f64,
    pub final_state: SpinConfiguration,
}

/// Runs `burn_in + sweeps` sweeps from `init` and estimates each
/// observable. The updated region is the set of non-frozen sites of `init`.
#[allow(clippy::too_many_arguments)]
pub fn run_chain(
    init: &SpinConfiguration,
    bc: &BoundarySpec,
    model: &CouplingModel,
    kernel: &InteractionKernel,
    beta: f64,
    spec: &ChainSpec,
    observables: &[Observable],
) -> Result<ChainRun> {
    spec.validate()?;
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidValue("beta must be finite and non-negative"));
    }
    let mut fv = FiniteVolume::new(model, kernel, init, bc)?;
    let window = fv.window();
    for o in observables {
        o.check(window)?;
    }
    let compiled: Vec<Compiled> = observables.iter().map(|o| o.compile(window)).collect();
    let sites: Vec<usize> = fv.free_indices().to_vec();
    let mut rng = SplitMix64::new(spec.seed);
    let mut accepted = 0u64;
    for _ in 0..spec.burn_in {
        sweep(&mut fv, &sites, beta, spec.proposal_width, &mut rng);
    }
    let mut series: Vec<Vec<f64>> = (0..compiled.len())
        .map(|_| Vec::with_capacity(spec.samples() as usize))
        .collect();
    for t in 1..=spec.sweeps {
        accepted += sweep(&mut fv, &sites, beta, spec.proposal_width, &mut rng);
        if t % spec.thinning == 0 {
            for (c, s) in compiled.iter().zip(series.iter_mut()) {
                s.push(c.eval(&fv));
            }
        }
    }
    let proposals = spec.sweeps * sites.len() as u64;
    Ok(ChainRun {
        estimates: series.iter().map(|s| Estimate::from_series(s)).collect(),
        series,
        acceptance: if proposals == 0 {
            1.0
        } else {
            accepted as f64 / proposals as f64
        },
        final_state: fv.configuration(),
    })
}

/// Builds the constrained system on the invisible sites of `Δ_outer`:
/// every even site other than the origin takes its frozen value from
/// `frozen_even`, everything else starts at the maximal configuration,
/// and the exterior of `Δ_outer` is held at the maximal configuration.
pub fn constrained_system(
    frozen_even: &SpinConfiguration,
    outer: u32,
) -> Result<SpinConfiguration> {
    let window = BoxRegion::new(outer);
    let kind = frozen_even.kind();
    let mut c = SpinConfiguration::homogeneous(window, kind, Level::Plus);
    for site in window.sites() {
        if !site.is_even() || site == Site::ORIGIN {
            continue;
        }
        if !frozen_even.is_frozen(site) {
            return Err(Error::IncompleteFrozen(site));
        }
        c.pin(
            site,
            frozen_even
                .get(site)
                .expect("frozen sites lie in the window"),
        )?;
    }
    Ok(c)
}

/// Estimate of the origin observable (`σ_0` or `sin θ_0`) in the
/// constrained measure with maximal far field.
pub fn constrained_plus_magnetization(
    frozen_even: &SpinConfiguration,
    outer: u32,
    beta: f64,
    model: &CouplingModel,
    kernel: &InteractionKernel,
    spec: &ChainSpec,
) -> Result<Estimate> {
    let init = constrained_system(frozen_even, outer)?;
    let run = run_chain(
        &init,
        &BoundarySpec::homogeneous(Level::Plus),
        model,
        kernel,
        beta,
        spec,
        &[Observable::Spin(Site::ORIGIN)],
    )?;
    Ok(run.estimates[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{alternating_ising, homogeneous};
    use crate::couplings::{build_kernel, Family};
    use crate::lattice::even_sublattice;

    fn nn() -> (CouplingModel, InteractionKernel) {
        let m = CouplingModel::nearest_neighbor(1.0).unwrap();
        let k = build_kernel(&m, 1).unwrap();
        (m, k)
    }

    #[test]
    fn heat_bath_probability_examples() {
        assert_eq!(heat_bath_plus_probability(0.0, 3.0), 0.5);
        assert_eq!(heat_bath_plus_probability(1.0, 0.0), 0.5);
        assert!(heat_bath_plus_probability(50.0, 10.0) > 1.0 - 1e-15);
        let p = heat_bath_plus_probability(0.5, 2.0);
        assert!((p - 1.0 / (1.0 + (-2f64).exp())).abs() < 1e-15);
        assert!((p - 0.8808).abs() < 1e-4);
    }

    #[test]
    fn chain_spec_validation() {
        assert!(ChainSpec::new(0, 0, 1).is_err());
        let mut s = ChainSpec::new(10, 0, 1).unwrap();
        s.proposal_width = 0.0;
        assert!(s.validate().is_err());
        s.proposal_width = 4.0;
        assert!(s.validate().is_err());
        s.proposal_width = core::f64::consts::PI;
        s.thinning = 20;
        assert!(s.validate().is_err());
    }

    #[test]
    fn frozen_sites_rejected() {
        let (m, k) = nn();
        let mut c = homogeneous(BoxRegion::new(1), SpinKind::Scalar, Level::Plus);
        c.freeze(Site::ORIGIN).unwrap();
        let mut fv = FiniteVolume::new(&m, &k, &c, &BoundarySpec::free()).unwrap();
        let mut rng = SplitMix64::new(0);
        assert!(matches!(
            heat_bath_update_ising(&mut fv, Site::ORIGIN, 1.0, &mut rng),
            Err(Error::FrozenSite(_))
        ));
        assert!(matches!(
            metropolis_update_rotator(&mut fv, Site::new(1, 0), 1.0, 1.0, &mut rng),
            Err(Error::KindMismatch { .. })
        ));
    }

    #[test]
    fn metropolis_downhill_always_accepted() {
        let m = CouplingModel::new(Family::AnisotropicRotator { kappa: 0.5 }, 1.0).unwrap();
        let k = build_kernel(&m, 1).unwrap();
        let c = homogeneous(BoxRegion::new(0), SpinKind::Planar, Level::Minus);
        let mut fv =
            FiniteVolume::new(&m, &k, &c, &BoundarySpec::homogeneous(Level::Plus)).unwrap();
        let mut rng = SplitMix64::new(3);
        // From the south pole in a northward field every proposal is downhill.
        for _ in 0..50 {
            let before = fv.spin(Site::ORIGIN).unwrap();
            let width = 0.3;
            let proposed = {
                let mut peek = rng.clone();
                Rotor::from_angle(
                    match before {
                        Spin::Planar(r) => r.angle(),
                        _ => unreachable!(),
                    } + peek.uniform(-width, width),
                )
            };
            let delta = fv
                .energy_delta(Site::ORIGIN, Spin::Planar(proposed))
                .unwrap();
            let after =
                metropolis_update_rotator(&mut fv, Site::ORIGIN, 1.0, width, &mut rng).unwrap();
            if delta <= 0.0 {
                assert_eq!(after, proposed);
            }
            if fv.spin(Site::ORIGIN).unwrap().order_value() > 0.5 {
                break;
            }
        }
    }

    #[test]
    fn zero_beta_rotator_is_uniform() {
        let m = CouplingModel::new(Family::IsotropicRotator { alpha: 3.0 }, 1.0).unwrap();
        let k = build_kernel(&m, 2).unwrap();
        let c = homogeneous(BoxRegion::new(0), SpinKind::Planar, Level::Plus);
        let spec = ChainSpec {
            proposal_width: core::f64::consts::PI,
            ..ChainSpec::new(40_000, 100, 5).unwrap()
        };
        let run = run_chain(
            &c,
            &BoundarySpec::homogeneous(Level::Plus),
            &m,
            &k,
            0.0,
            &spec,
            &[Observable::Spin(Site::ORIGIN)],
        )
        .unwrap();
        assert_eq!(run.acceptance, 1.0);
        let e = run.estimates[0];
        assert!(e.mean.abs() < 3.0 * e.std_error, "{e:?}");
    }

    #[test]
    fn constant_observable_and_determinism() {
        let (m, k) = nn();
        let c = homogeneous(BoxRegion::new(2), SpinKind::Scalar, Level::Plus);
        let spec = ChainSpec::new(200, 10, 77).unwrap();
        let obs = [
            Observable::Constant(1.0),
            Observable::Spin(Site::ORIGIN),
            Observable::Energy,
        ];
        let bc = BoundarySpec::homogeneous(Level::Minus);
        let a = run_chain(&c, &bc, &m, &k, 0.4, &spec, &obs).unwrap();
        let b = run_chain(&c, &bc, &m, &k, 0.4, &spec, &obs).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.estimates[0].mean, a.estimates[0].std_error), (1.0, 0.0));
        assert!(run_chain(
            &c,
            &bc,
            &m,
            &k,
            0.4,
            &spec,
            &[Observable::Spin(Site::new(9, 0))]
        )
        .is_err());
    }

    #[test]
    fn constrained_all_plus_is_magnetized() {
        let (m, k) = nn();
        let plus = {
            let mut c = homogeneous(BoxRegion::new(4), SpinKind::Scalar, Level::Plus);
            for s in even_sublattice(BoxRegion::new(4)).iter() {
                c.freeze(s).unwrap();
            }
            c
        };
        let spec = ChainSpec::new(4000, 200, 1).unwrap();
        let e = constrained_plus_magnetization(&plus, 4, 1.0, &m, &k, &spec).unwrap();
        assert!(e.mean > 0.9, "{e:?}");
        let zero = constrained_plus_magnetization(&plus, 4, 0.0, &m, &k, &spec).unwrap();
        assert!(zero.mean.abs() < 3.0 * zero.std_error);
    }

    #[test]
    fn constrained_requires_frozen_even_sites() {
        let c = alternating_ising(BoxRegion::new(2));
        assert!(matches!(
            constrained_system(&c, 2),
            Err(Error::IncompleteFrozen(_))
        ));
        let mut frozen = c.clone();
        for s in even_sublattice(BoxRegion::new(2)).iter() {
            frozen.freeze(s).unwrap();
        }
        let sys = constrained_system(&frozen, 2).unwrap();
        assert!(!sys.is_frozen(Site::ORIGIN));
        assert_eq!(sys.get(Site::new(2, 0)), Some(Spin::Scalar(1)));
        assert_eq!(sys.get(Site::new(2, 1)), Some(Spin::Scalar(1)));
        assert!(sys.is_frozen(Site::new(2, 2)) && !sys.is_frozen(Site::new(2, 1)));
        assert_eq!(sys.free_sites().len(), 25 - 8);
    }
}
