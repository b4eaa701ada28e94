//! Exact references for small systems.
//!
//! Ising systems are enumerated exhaustively (Gray-code order, one spin
//! flip per state); rotator systems are replaced by `q`-state clock models
//! whose state space is summed exactly. The sums are stabilised by
//! shifting energies by a lower bound so every Boltzmann weight is at most
//! one.

use alloc::vec;
use alloc::vec::Vec;

use crate::config::{Spin, SpinConfiguration, SpinKind};
use crate::couplings::{CouplingModel, InteractionKernel};
use crate::error::{Error, Result};
use crate::hamiltonian::{BoundarySpec, FiniteVolume, LocalField};
use crate::lattice::Site;
use crate::sampler::heat_bath_plus_probability;

/// Largest number of free Ising spins [`enumerate_ising`] accepts.
pub const MAX_ISING_SITES: usize = 22;
/// Largest number of free rotators [`clock_quadrature_rotator`] accepts.
pub const MAX_CLOCK_SITES: usize = 8;
/// Largest clock state space `q^n`.
pub const MAX_CLOCK_STATES: u64 = 20_000_000;

/// Exact expectations at one free site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteMarginal {
    pub site: Site,
    /// `<σ_i>` or `<sin θ_i>`.
    pub mean: f64,
    /// `<cos θ_i>`; zero for Ising spins.
    pub mean_cos: f64,
    /// `P(σ_i = +1)` for Ising spins.
    pub prob_plus: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub ln_partition: f64,
    /// `exp(ln_partition)`; may overflow to infinity for large systems.
    pub partition_value: f64,
    pub mean_energy: f64,
    pub states: u64,
    pub sites: Vec<SiteMarginal>,
    /// Clock models only: largest change of a site mean when `q` doubles,
    /// if the doubled state space is within the cap.
    pub discretization_shift: Option<f64>,
}

impl ExactResult {
    pub fn expectation(&self, site: Site) -> Option<f64> {
        self.sites.iter().find(|m| m.site == site).map(|m| m.mean)
    }
}

/// Pair couplings among the free sites and the fixed field on each, read
/// off a compiled system.
struct Quadratic {
    sites: Vec<Site>,
    /// Row-major `n × n`, zero diagonal.
    couplings: Vec<f64>,
    /// Component weights `(w_cos, w_sin)`; `(1, 0)` for Ising.
    weights: (f64, f64),
    fixed: Vec<(f64, f64)>,
}

impl Quadratic {
    fn new(fv: &FiniteVolume<'_>) -> Result<Self> {
        let window = fv.window();
        let sites: Vec<Site> = fv.free_indices().iter().map(|&i| window.site(i)).collect();
        let n = sites.len();
        let kernel = fv.kernel();
        let mut couplings = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    couplings[a * n + b] =
                        kernel.weight(sites[b].x - sites[a].x, sites[b].y - sites[a].y);
                }
            }
        }
        let fixed = sites
            .iter()
            .map(|&s| {
                fv.boundary_field(s).map(|h| match h {
                    LocalField::Scalar(h) => (h, 0.0),
                    LocalField::Planar { x, y } => (x, y),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let weights = match fv.kind() {
            SpinKind::Scalar => (1.0, 0.0),
            SpinKind::Planar => fv.model().component_weights(),
        };
        Ok(Self {
            sites,
            couplings,
            weights,
            fixed,
        })
    }

    fn len(&self) -> usize {
        self.sites.len()
    }

    /// Lower bound on the energy over unit spins.
    fn energy_floor(&self) -> f64 {
        let w = self.weights.0.abs().max(self.weights.1.abs());
        let pairs: f64 = self.couplings.iter().map(|j| j.abs()).sum::<f64>() / 2.0;
        let fields: f64 = self
            .fixed
            .iter()
            .map(|(a, b)| libm::sqrt(a * a + b * b))
            .sum();
        -(w * pairs + fields)
    }
}

/// Exact enumeration of all `2^n` free-spin states of an Ising system.
pub fn enumerate_ising(
    config: &SpinConfiguration,
    bc: &BoundarySpec,
    model: &CouplingModel,
    kernel: &InteractionKernel,
    beta: f64,
) -> Result<ExactResult> {
    if model.kind() != SpinKind::Scalar {
        return Err(Error::KindMismatch {
            expected: "scalar",
            found: model.kind().name(),
        });
    }
    let fv = FiniteVolume::new(model, kernel, config, bc)?;
    if fv.free_count() > MAX_ISING_SITES {
        return Err(Error::TooLarge {
            found: fv.free_count(),
            limit: MAX_ISING_SITES,
        });
    }
    let q = Quadratic::new(&fv)?;
    let n = q.len();
    let floor = q.energy_floor();

    // Without fixed fields the Hamiltonian is even under a global flip:
    // enumerate the half with the last spin down and symmetrise exactly.
    let symmetric = n > 0 && q.fixed.iter().all(|f| f.0 == 0.0);
    let walked = if symmetric { n - 1 } else { n };

    // Start from all -1 and walk the reflected Gray code.
    let mut s = vec![-1.0f64; n];
    let mut h: Vec<f64> = (0..n)
        .map(|a| q.fixed[a].0 - (0..n).map(|b| q.couplings[a * n + b]).sum::<f64>())
        .collect();
    let mut energy = {
        let pairs: f64 = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .map(|(a, b)| q.couplings[a * n + b])
            .sum();
        -pairs + q.fixed.iter().map(|f| f.0).sum::<f64>()
    };
    let mut z = 0.0;
    let mut e_acc = 0.0;
    let mut m_acc = vec![0.0; n];
    let total = 1u64 << walked;
    for step in 0..total {
        let w = libm::exp(-beta * (energy - floor));
        z += w;
        e_acc += w * energy;
        for a in 0..n {
            m_acc[a] += w * s[a];
        }
        if step + 1 == total {
            break;
        }
        let k = (step + 1).trailing_zeros() as usize;
        // Flipping s_k changes E by 2 s_k h_k and h_a by -2 J_ak s_k.
        energy += 2.0 * s[k] * h[k];
        let old = s[k];
        s[k] = -old;
        for (a, ha) in h.iter_mut().enumerate() {
            *ha -= 2.0 * q.couplings[a * n + k] * old;
        }
    }
    if symmetric {
        m_acc.iter_mut().for_each(|m| *m = 0.0);
    }
    let ln_partition = libm::log(z) - beta * floor + if symmetric { libm::log(2.0) } else { 0.0 };
    Ok(ExactResult {
        ln_partition,
        partition_value: libm::exp(ln_partition),
        mean_energy: e_acc / z,
        states: 1u64 << n,
        sites: q
            .sites
            .iter()
            .zip(&m_acc)
            .map(|(&site, &m)| SiteMarginal {
                site,
                mean: m / z,
                mean_cos: 0.0,
                prob_plus: Some(0.5 * (1.0 + m / z)),
            })
            .collect(),
        discretization_shift: None,
    })
}

/// Bit `k` of a state index is set when the `k`-th free site (row-major)
/// is `+1`.
fn state_spins(state: usize, n: usize) -> impl Iterator<Item = i8> {
    (0..n).map(move |k| if state >> k & 1 == 1 { 1 } else { -1 })
}

/// Normalised Gibbs probabilities of all free-spin states, indexed as in
/// [`sweep_stationarity_defect`].
pub fn gibbs_vector(
    config: &SpinConfiguration,
    bc: &BoundarySpec,
    model: &CouplingModel,
    kernel: &InteractionKernel,
    beta: f64,
) -> Result<Vec<f64>> {
    let fv = FiniteVolume::new(model, kernel, config, bc)?;
    let n = fv.free_count();
    if n > MAX_ISING_SITES || model.kind() != SpinKind::Scalar {
        return Err(Error::TooLarge {
            found: n,
            limit: MAX_ISING_SITES,
        });
    }
    let q = Quadratic::new(&fv)?;
    let floor = q.energy_floor();
    let mut p: Vec<f64> = (0..1usize << n)
        .map(|state| {
            let s: Vec<f64> = state_spins(state, n).map(f64::from).collect();
            let mut e = 0.0;
            for a in 0..n {
                e -= q.fixed[a].0 * s[a];
                for b in a + 1..n {
                    e -= q.couplings[a * n + b] * s[a] * s[b];
                }
            }
            libm::exp(-beta * (e - floor))
        })
        .collect();
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= z);
    Ok(p)
}

/// Heat-bath probabilities `P(σ_k = +1 | rest)` for every state and free
/// site, computed through the sampler's field evaluation.
fn heat_bath_table(fv: &mut FiniteVolume<'_>, beta: f64) -> Result<Vec<Vec<f64>>> {
    let window = fv.window();
    let sites: Vec<Site> = fv.free_indices().iter().map(|&i| window.site(i)).collect();
    let n = sites.len();
    let mut table = Vec::with_capacity(1 << n);
    for state in 0..1usize << n {
        for (site, s) in sites.iter().zip(state_spins(state, n)) {
            fv.set(*site, Spin::Scalar(s))?;
        }
        table.push(
            sites
                .iter()
                .map(|&site| {
                    fv.local_field(site)
                        .map(|h| heat_bath_plus_probability(beta, h.vertical()))
                })
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok(table)
}

/// Applies the heat-bath kernel of free site `k` to a row vector.
fn apply_site_kernel(v: &[f64], k: usize, table: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    let bit = 1usize << k;
    for (state, &mass) in v.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        let p = table[state][k];
        out[state | bit] += mass * p;
        out[state & !bit] += mass * (1.0 - p);
    }
    out
}

/// Stationarity and reversibility of the heat-bath dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceReport {
    pub spins: usize,
    /// `max |π P_sweep - π|` for the row-major sweep kernel.
    pub sweep_defect: f64,
    /// `max |π(σ) P_k(σ,σ^k) - π(σ^k) P_k(σ^k,σ)|` over sites and states.
    pub detailed_balance_defect: f64,
    /// `max |π P - π|` using the dense sweep matrix, when `n <= 8`.
    pub dense_defect: Option<f64>,
    /// `max |Σ_j P(i,j) - 1|` of the dense sweep matrix.
    pub dense_row_sum_defect: Option<f64>,
}

/// Largest system [`sweep_stationarity_defect`] accepts.
pub const MAX_BALANCE_SITES: usize = 12;

/// Checks the heat-bath sweep kernel against the enumerated Gibbs vector.
pub fn sweep_stationarity_defect(
    config: &SpinConfiguration,
    bc: &BoundarySpec,
    model: &CouplingModel,
    kernel: &InteractionKernel,
    beta: f64,
) -> Result<BalanceReport> {
    let mut fv = FiniteVolume::new(model, kernel, config, bc)?;
    let n = fv.free_count();
    if n > MAX_BALANCE_SITES {
        return Err(Error::TooLarge {
            found: n,
            limit: MAX_BALANCE_SITES,
        });
    }
    let pi = gibbs_vector(config, bc, model, kernel, beta)?;
    let table = heat_bath_table(&mut fv, beta)?;
    let max_diff = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };

    let mut v = pi.clone();
    for k in 0..n {
        v = apply_site_kernel(&v, k, &table);
    }
    let sweep_defect = max_diff(&v, &pi);

    let mut detailed = 0.0f64;
    #[allow(clippy::needless_range_loop)]
    for k in 0..n {
        let bit = 1usize << k;
        for state in (0..pi.len()).filter(|s| s & bit == 0) {
            let up = state | bit;
            let forward = pi[state] * table[state][k];
            let backward = pi[up] * (1.0 - table[up][k]);
            detailed = detailed.max((forward - backward).abs());
        }
    }

    let (dense_defect, dense_row_sum_defect) = if n <= 8 {
        let size = pi.len();
        let mut rows = Vec::with_capacity(size);
        for state in 0..size {
            let mut row = vec![0.0; size];
            row[state] = 1.0;
            for k in 0..n {
                row = apply_site_kernel(&row, k, &table);
            }
            rows.push(row);
        }
        let mut product = vec![0.0; size];
        for (i, row) in rows.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                product[j] += pi[i] * p;
            }
        }
        let row_sums = rows
            .iter()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max);
        (Some(max_diff(&product, &pi)), Some(row_sums))
    } else {
        (None, None)
    };

    Ok(BalanceReport {
        spins: n,
        sweep_defect,
        detailed_balance_defect: detailed,
        dense_defect,
        dense_row_sum_defect,
    })
}

/// Exact expectations of the `q`-state clock approximation of a rotator
/// system (angles `2πk/q - π`).
pub fn clock_quadrature_rotator(
    config: &SpinConfiguration,
    bc: &BoundarySpec,
    model: &CouplingModel,
    kernel: &InteractionKernel,
    beta: f64,
    q: u32,
) -> Result<ExactResult> {
    let fv = FiniteVolume::new(model, kernel, config, bc)?;
    if model.kind() != SpinKind::Planar {
        return Err(Error::KindMismatch {
            expected: "planar",
            found: model.kind().name(),
        });
    }
    if q < 8 {
        return Err(Error::InvalidValue("clock quadrature needs q >= 8"));
    }
    let quad = Quadratic::new(&fv)?;
    let n = quad.len();
    let states = clock_states(q, n).ok_or(Error::TooLarge {
        found: n,
        limit: MAX_CLOCK_SITES,
    })?;
    let mut result = clock_sum(&quad, beta, q, states);
    if let Some(doubled) = clock_states(2 * q, n) {
        let fine = clock_sum(&quad, beta, 2 * q, doubled);
        result.discretization_shift = Some(
            result
                .sites
                .iter()
                .zip(&fine.sites)
                .map(|(a, b)| (a.mean - b.mean).abs().max((a.mean_cos - b.mean_cos).abs()))
                .fold(0.0, f64::max),
        );
    }
    Ok(result)
}

fn clock_states(q: u32, n: usize) -> Option<u64> {
    if n > MAX_CLOCK_SITES {
        return None;
    }
    let states = u64::from(q).checked_pow(n as u32)?;
    (states <= MAX_CLOCK_STATES).then_some(states)
}

fn clock_sum(quad: &Quadratic, beta: f64, q: u32, states: u64) -> ExactResult {
    let n = quad.len();
    let (w1, w2) = quad.weights;
    let pi = core::f64::consts::PI;
    let table: Vec<(f64, f64)> = (0..q)
        .map(|k| {
            let theta = 2.0 * pi * f64::from(k) / f64::from(q) - pi;
            let r = crate::config::Rotor::from_angle(theta);
            (r.cos(), r.sin())
        })
        .collect();
    let floor = quad.energy_floor();
    let j = |a: usize, b: usize| quad.couplings[a * n + b];

    // Odometer over digits; fields are updated incrementally.
    let mut digits = vec![0usize; n];
    let mut hx: Vec<f64> = vec![0.0; n];
    let mut hy: Vec<f64> = vec![0.0; n];
    for a in 0..n {
        hx[a] = quad.fixed[a].0;
        hy[a] = quad.fixed[a].1;
        for b in 0..n {
            hx[a] += w1 * j(a, b) * table[0].0;
            hy[a] += w2 * j(a, b) * table[0].1;
        }
    }
    let mut energy = 0.0;
    for a in 0..n {
        let (c, s) = table[0];
        energy -= quad.fixed[a].0 * c + quad.fixed[a].1 * s;
        for b in a + 1..n {
            energy -= j(a, b) * (w1 * c * c + w2 * s * s);
        }
    }
    let mut z = 0.0;
    let mut e_acc = 0.0;
    let mut sin_acc = vec![0.0; n];
    let mut cos_acc = vec![0.0; n];
    for step in 0..states {
        let w = libm::exp(-beta * (energy - floor));
        z += w;
        e_acc += w * energy;
        for a in 0..n {
            let (c, s) = table[digits[a]];
            sin_acc[a] += w * s;
            cos_acc[a] += w * c;
        }
        if step + 1 == states {
            break;
        }
        let mut k = 0;
        loop {
            let old = table[digits[k]];
            digits[k] = (digits[k] + 1) % q as usize;
            let new = table[digits[k]];
            let (dc, ds) = (new.0 - old.0, new.1 - old.1);
            energy -= hx[k] * dc + hy[k] * ds;
            for a in 0..n {
                if a != k {
                    hx[a] += w1 * j(a, k) * dc;
                    hy[a] += w2 * j(a, k) * ds;
                }
            }
            if digits[k] != 0 {
                break;
            }
            k += 1;
        }
    }
    let ln_partition = libm::log(z) - beta * floor + (n as f64) * -libm::log(f64::from(q));
    ExactResult {
        ln_partition,
        partition_value: libm::exp(ln_partition),
        mean_energy: e_acc / z,
        states,
        sites: quad
            .sites
            .iter()
            .enumerate()
            .map(|(a, &site)| SiteMarginal {
                site,
                mean: sin_acc[a] / z,
                mean_cos: cos_acc[a] / z,
                prob_plus: None,
            })
            .collect(),
        discretization_shift: None,
    }
}

/// Inverse critical temperature `ln(1 + √2) / 2` of the square-lattice
/// nearest-neighbour Ising model with unit coupling.
pub fn onsager_critical_beta() -> f64 {
    0.5 * libm::log(1.0 + core::f64::consts::SQRT_2)
}

/// Spontaneous magnetisation `(1 - sinh(2β)^-4)^(1/8)` above the critical
/// coupling, zero below.
pub fn onsager_reference(beta: f64) -> f64 {
    if beta <= onsager_critical_beta() {
        return 0.0;
    }
    let s = libm::sinh(2.0 * beta);
    libm::pow(1.0 - libm::pow(s, -4.0), 0.125)
}
