//! Subcommand planning and execution.
//!
//! Every command is split into [`prepare`], which validates the
//! configuration and derives the full plan without sampling, and
//! [`Plan::run`], which does the work and renders result payloads. Chain
//! jobs run on the current rayon pool; results are gathered in job order so
//! the payloads do not depend on the number of workers.

use std::path::{Path, PathBuf};

use decim_core::config::homogeneous;
use decim_core::couplings::build_kernel;
use decim_core::decimation::{
    assemble_gap_report, decimate, probe_jobs, run_probe_job, scan_plan, scan_table, ImageCenter,
    NRule, ProbeJob,
};
use decim_core::hamiltonian::{annulus_size, energy_difference_bound};
use decim_core::oracle::{
    clock_quadrature_rotator, enumerate_ising, onsager_reference, ExactResult, MAX_CLOCK_STATES,
    MAX_ISING_SITES,
};
use decim_core::rng::derive_seed;
use decim_core::sampler::run_chain;
use decim_core::{
    BoundarySpec, BoxRegion, ChainSpec, CouplingModel, Estimate, Family, GapReport,
    InteractionKernel, Level, Observable, ProbeSpec, SiteSet, SpinConfiguration, SpinKind,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExteriorName, RunConfig};
use crate::error::CliError;
use crate::format::ConfigurationFile;
use crate::output::{
    num, opt_num, Artifact, ANNULUS_HEADER, ENERGY_BOUND_HEADER, MAGNETIZE_HEADER, PROBE_HEADER,
    SCAN_EXTRA_HEADER,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Magnetize,
    Probe,
    Scan,
    Annulus,
    EnergyBound,
    Oracle,
    Decimate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Magnetize => "magnetize",
            Command::Probe => "probe",
            Command::Scan => "scan",
            Command::Annulus => "annulus",
            Command::EnergyBound => "energy-bound",
            Command::Oracle => "oracle",
            Command::Decimate => "decimate",
        }
    }
}

/// Result payloads of one command.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub seeds: Vec<u64>,
    /// Text printed to standard output after the files are written.
    pub stdout: Option<String>,
}

pub struct MagnetizePlan {
    model: CouplingModel,
    kernel: InteractionKernel,
    beta: f64,
    inner: u32,
    core_half_width: u32,
    chain: ChainSpec,
    series: bool,
}

pub struct ProbePlan {
    kernel: InteractionKernel,
    specs: Vec<ProbeSpec>,
    /// Scan plans end with the all-plus control row.
    scan: bool,
    convergence: bool,
}

pub struct AnnulusPlan {
    model: CouplingModel,
    kernel: InteractionKernel,
    inners: Vec<u32>,
    target: f64,
}

pub struct EnergyBoundPlan {
    model: CouplingModel,
    kernel: InteractionKernel,
    inner: u32,
    outer: u64,
}

pub struct OraclePlan {
    model: CouplingModel,
    kernel: InteractionKernel,
    beta: f64,
    inner: u32,
    exterior: ExteriorName,
    q: u32,
    states: f64,
}

pub struct DecimatePlan {
    input: PathBuf,
    config: SpinConfiguration,
}

pub enum Plan {
    Magnetize(MagnetizePlan),
    Probe(ProbePlan),
    Annulus(AnnulusPlan),
    EnergyBound(EnergyBoundPlan),
    Oracle(OraclePlan),
    Decimate(DecimatePlan),
}

fn kernel_for(cfg: &RunConfig) -> Result<(CouplingModel, InteractionKernel), CliError> {
    let model = cfg.coupling_model()?;
    let kernel = build_kernel(&model, cfg.radius()?).map_err(CliError::config)?;
    Ok((model, kernel))
}

fn base_probe(
    cfg: &RunConfig,
    model: CouplingModel,
    inner: u32,
    outer: u32,
) -> Result<ProbeSpec, CliError> {
    let chain = cfg.chain_spec()?;
    let mut spec = ProbeSpec::new(model, cfg.radius()?, cfg.beta()?, inner, outer, chain);
    spec.eps = cfg.eps();
    spec.replicas = cfg.probe.replicas;
    spec.center = cfg.center();
    spec.alternation = cfg.alternation();
    if spec.replicas == 0 {
        return Err(CliError::Config(
            "invalid `probe.replicas`: must be positive".into(),
        ));
    }
    Ok(spec)
}

/// Validates `cfg` for `command` and derives everything short of sampling.
/// Relative input paths resolve against `base_dir`.
pub fn prepare(command: Command, cfg: &RunConfig, base_dir: &Path) -> Result<Plan, CliError> {
    match command {
        Command::Magnetize => {
            let (model, kernel) = kernel_for(cfg)?;
            let inner = cfg.inner()?;
            let core_half_width = cfg.magnetize.core_half_width.unwrap_or(inner / 4);
            if core_half_width > inner {
                return Err(CliError::Config(
                    "invalid `magnetize.core_half_width`: exceeds `geometry.L`".into(),
                ));
            }
            Ok(Plan::Magnetize(MagnetizePlan {
                model,
                kernel,
                beta: cfg.beta()?,
                inner,
                core_half_width,
                chain: cfg.chain_spec()?,
                series: cfg.output.series,
            }))
        }
        Command::Probe => {
            let (model, kernel) = kernel_for(cfg)?;
            let inner = cfg.inner()?;
            let outer = match cfg.geometry.outer {
                Some(n) => u32::try_from(n)
                    .map_err(|_| CliError::Config("invalid `geometry.N`: too large".into()))?,
                None => NRule::Bound {
                    target: cfg.target_c()?,
                }
                .outer(&model, &kernel, inner)
                .map_err(CliError::config)?,
            };
            let spec = base_probe(cfg, model, inner, outer)?;
            spec.validate().map_err(CliError::config)?;
            if let Some(needed) = spec.annulus_shortfall().map_err(CliError::config)? {
                log::warn!(
                    "N = {outer} leaves the boundary energy bound above {}; original window 2N = {} < {needed}",
                    cfg.target_c()?,
                    2 * outer
                );
            }
            let mut specs = vec![spec.clone()];
            if cfg.probe.convergence {
                specs.push(ProbeSpec {
                    outer: 2 * outer,
                    ..spec
                });
            }
            Ok(Plan::Probe(ProbePlan {
                kernel,
                specs,
                scan: false,
                convergence: cfg.probe.convergence,
            }))
        }
        Command::Scan => {
            let (model, kernel) = kernel_for(cfg)?;
            let inners = cfg.inner_list()?;
            let base = base_probe(cfg, model, inners[0], inners[0] + 1)?;
            let specs = scan_plan(&base, &inners, cfg.n_rule()).map_err(CliError::config)?;
            for s in &specs {
                s.validate().map_err(CliError::config)?;
            }
            Ok(Plan::Probe(ProbePlan {
                kernel,
                specs,
                scan: true,
                convergence: false,
            }))
        }
        Command::Annulus => {
            let (model, kernel) = kernel_for(cfg)?;
            Ok(Plan::Annulus(AnnulusPlan {
                model,
                kernel,
                inners: cfg.inner_list()?,
                target: cfg.target_c()?,
            }))
        }
        Command::EnergyBound => {
            let (model, kernel) = kernel_for(cfg)?;
            let inner = cfg.inner()?;
            let outer = cfg
                .geometry
                .outer
                .ok_or_else(|| CliError::Config("missing field `geometry.N`".into()))?;
            if outer <= u64::from(inner) {
                return Err(CliError::Config(
                    "invalid `geometry.N`: must exceed `geometry.L`".into(),
                ));
            }
            Ok(Plan::EnergyBound(EnergyBoundPlan {
                model,
                kernel,
                inner,
                outer,
            }))
        }
        Command::Oracle => {
            let (model, kernel) = kernel_for(cfg)?;
            let inner = cfg.inner()?;
            let sites = BoxRegion::new(inner).len();
            let q = cfg.oracle.q;
            let states = match model.kind() {
                SpinKind::Scalar => {
                    if sites > MAX_ISING_SITES {
                        return Err(CliError::Config(format!(
                            "invalid `geometry.L`: {sites} spins exceed the oracle limit of {MAX_ISING_SITES}"
                        )));
                    }
                    2f64.powi(sites as i32)
                }
                SpinKind::Planar => {
                    let states = f64::from(q).powi(sites as i32);
                    if states > MAX_CLOCK_STATES as f64 {
                        return Err(CliError::Config(format!(
                            "invalid `oracle.q`: {q}^{sites} states exceed the oracle limit of {MAX_CLOCK_STATES}"
                        )));
                    }
                    states
                }
            };
            Ok(Plan::Oracle(OraclePlan {
                model,
                kernel,
                beta: cfg.beta()?,
                inner,
                exterior: cfg.oracle.exterior,
                q,
                states,
            }))
        }
        Command::Decimate => {
            let input = cfg
                .decimate
                .input
                .as_ref()
                .ok_or_else(|| CliError::Config("missing field `decimate.input`".into()))?;
            let input = base_dir.join(input);
            let text = std::fs::read_to_string(&input)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", input.display())))?;
            let config = ConfigurationFile::parse(&text)?;
            Ok(Plan::Decimate(DecimatePlan { input, config }))
        }
    }
}

/// Family-specific parameter columns `(alpha1, alpha2, kappa)`.
fn family_columns(model: &CouplingModel) -> (Option<f64>, Option<f64>, Option<f64>) {
    match model.family() {
        Family::NearestNeighborIsing => (None, None, None),
        Family::AxialIsing { alpha }
        | Family::IsotropicIsing { alpha }
        | Family::IsotropicRotator { alpha } => (Some(alpha), None, None),
        Family::BiAxialIsing {
            alpha_horizontal,
            alpha_vertical,
        } => (Some(alpha_horizontal), Some(alpha_vertical), None),
        Family::AnisotropicRotator { kappa } => (None, None, Some(kappa)),
    }
}

fn model_json(model: &CouplingModel, radius: u32) -> Value {
    let (a1, a2, kappa) = family_columns(model);
    json!({
        "family": model.family().name(),
        "J": model.strength(),
        "alpha1": a1,
        "alpha2": a2,
        "kappa": kappa,
        "radius": radius,
    })
}

#[derive(Serialize)]
struct EstimateJson {
    mean: f64,
    std_error: f64,
    tau_int: f64,
    n_samples: usize,
}

impl From<&Estimate> for EstimateJson {
    fn from(e: &Estimate) -> Self {
        Self {
            mean: e.mean,
            std_error: e.std_error,
            tau_int: e.tau_int,
            n_samples: e.n_samples,
        }
    }
}

fn side_observable(model: &CouplingModel) -> &'static str {
    match model.kind() {
        SpinKind::Scalar => "sigma_0",
        SpinKind::Planar => "sin_theta_0",
    }
}

fn center_name(c: ImageCenter) -> &'static str {
    match c {
        ImageCenter::Alternating => "alternating",
        ImageCenter::AllPlus => "all_plus",
    }
}

fn gap_row(r: &GapReport) -> Vec<String> {
    let p = &r.params;
    let (a1, a2, kappa) = family_columns(&p.model);
    vec![
        p.model.family().name().to_owned(),
        opt_num(a1),
        opt_num(a2),
        opt_num(kappa),
        num(p.model.strength()),
        num(p.beta),
        p.inner.to_string(),
        p.outer.to_string(),
        num(p.eps),
        side_observable(&p.model).to_owned(),
        num(r.m_plus.mean),
        num(r.m_plus.std_error),
        num(r.m_minus.mean),
        num(r.m_minus.std_error),
        num(r.gap),
        num(r.significance),
        p.seed_base.to_string(),
    ]
}

fn gap_json(r: &GapReport) -> Value {
    let p = &r.params;
    json!({
        "model": model_json(&p.model, p.kernel_radius),
        "beta": p.beta,
        "L": p.inner,
        "N": p.outer,
        "eps": p.eps,
        "image": center_name(p.center),
        "side_obs": side_observable(&p.model),
        "m_plus": EstimateJson::from(&r.m_plus),
        "m_minus": EstimateJson::from(&r.m_minus),
        "gap": r.gap,
        "combined_error": r.combined_error(),
        "significance": r.significance,
        "replicas_plus": r.replicas_plus.iter().map(EstimateJson::from).collect::<Vec<_>>(),
        "replicas_minus": r.replicas_minus.iter().map(EstimateJson::from).collect::<Vec<_>>(),
        "seed_base": p.seed_base,
        "seeds": p.seeds,
    })
}

fn exact_json(r: &ExactResult) -> Value {
    json!({
        "ln_partition": r.ln_partition,
        "partition_value": r.partition_value,
        "mean_energy": r.mean_energy,
        "states": r.states,
        "discretization_shift": r.discretization_shift,
        "sites": r.sites.iter().map(|m| json!({
            "x": m.site.x,
            "y": m.site.y,
            "mean": m.mean,
            "mean_cos": m.mean_cos,
            "prob_plus": m.prob_plus,
        })).collect::<Vec<_>>(),
    })
}

/// Runs all probe chains of `specs` on the current pool and assembles one
/// report per `ProbeSpec`.
pub fn run_probes(
    specs: &[ProbeSpec],
    kernel: &InteractionKernel,
) -> Result<Vec<GapReport>, CliError> {
    let jobs: Vec<(usize, ProbeJob)> = specs
        .iter()
        .enumerate()
        .flat_map(|(k, s)| probe_jobs(s).into_iter().map(move |j| (k, j)))
        .collect();
    log::info!("running {} probe chains", jobs.len());
    let results = jobs
        .par_iter()
        .map(|(k, job)| run_probe_job(&specs[*k], kernel, job).map(|e| (*k, *job, e)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::runtime)?;
    specs
        .iter()
        .enumerate()
        .map(|(k, spec)| {
            let mine: Vec<_> = results
                .iter()
                .filter(|(i, _, _)| *i == k)
                .map(|(_, j, e)| (*j, *e))
                .collect();
            assemble_gap_report(spec, &mine).map_err(CliError::runtime)
        })
        .collect()
}

impl Plan {
    /// The derived plan printed by `--dry-run`.
    pub fn describe(&self) -> Value {
        match self {
            Plan::Magnetize(p) => {
                let sites = BoxRegion::new(p.inner).len();
                json!({
                    "command": "magnetize",
                    "model": model_json(&p.model, p.kernel.radius()),
                    "kernel_entries": p.kernel.table_len(),
                    "sites": sites,
                    "chains": 2,
                    "sweeps_per_chain": p.chain.burn_in + p.chain.sweeps,
                    "memory_bytes": memory_estimate(&p.kernel, sites, 2),
                })
            }
            Plan::Probe(p) => {
                let rows: Vec<Value> = p
                    .specs
                    .iter()
                    .map(|s| json!({"L": s.inner, "N": s.outer, "window": 2 * s.outer, "image": center_name(s.center)}))
                    .collect();
                let largest = p.specs.iter().map(|s| s.window().len()).max().unwrap_or(0);
                let chains: usize = p.specs.iter().map(|s| 2 * s.replicas as usize).sum();
                json!({
                    "command": if p.scan { "scan" } else { "probe" },
                    "model": model_json(&p.specs[0].model, p.kernel.radius()),
                    "kernel_entries": p.kernel.table_len(),
                    "rows": rows,
                    "chains": chains,
                    "memory_bytes": memory_estimate(&p.kernel, largest, rayon::current_num_threads()),
                })
            }
            Plan::Annulus(p) => json!({
                "command": "annulus",
                "model": model_json(&p.model, p.kernel.radius()),
                "kernel_entries": p.kernel.table_len(),
                "L": p.inners,
                "target_C": p.target,
            }),
            Plan::EnergyBound(p) => json!({
                "command": "energy-bound",
                "model": model_json(&p.model, p.kernel.radius()),
                "kernel_entries": p.kernel.table_len(),
                "L": p.inner,
                "N": p.outer,
            }),
            Plan::Oracle(p) => json!({
                "command": "oracle",
                "model": model_json(&p.model, p.kernel.radius()),
                "sites": BoxRegion::new(p.inner).len(),
                "states": p.states,
            }),
            Plan::Decimate(p) => json!({
                "command": "decimate",
                "input": p.input,
                "half_width": p.config.window().half_width(),
                "image_half_width": p.config.window().half_width() / 2,
            }),
        }
    }

    /// Seeds the plan will use, in job order.
    pub fn seeds(&self) -> Vec<u64> {
        match self {
            Plan::Magnetize(p) => vec![derive_seed(p.chain.seed, 0), derive_seed(p.chain.seed, 1)],
            Plan::Probe(p) => p
                .specs
                .iter()
                .flat_map(probe_jobs)
                .map(|j| j.seed)
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn run(&self, csv: bool, json: bool) -> Result<Outcome, CliError> {
        let seeds = self.seeds();
        let mut artifacts = Vec::new();
        let mut stdout = None;
        match self {
            Plan::Magnetize(p) => {
                let window = BoxRegion::new(p.inner);
                let core = SiteSet::from_predicate(window, |s| s.sup_norm() <= p.core_half_width);
                let runs = [Level::Plus, Level::Minus]
                    .par_iter()
                    .zip(seeds.par_iter())
                    .map(|(&level, &seed)| {
                        let init = homogeneous(window, p.model.kind(), level);
                        run_chain(
                            &init,
                            &BoundarySpec::homogeneous(level),
                            &p.model,
                            &p.kernel,
                            p.beta,
                            &p.chain.with_seed(seed),
                            &[Observable::MeanSpin(core.clone())],
                        )
                    })
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(CliError::runtime)?;
                let (plus, minus) = (&runs[0].estimates[0], &runs[1].estimates[0]);
                let (a1, a2, kappa) = family_columns(&p.model);
                if csv {
                    let rows: Vec<Vec<String>> =
                        [("plus", plus, seeds[0]), ("minus", minus, seeds[1])]
                            .iter()
                            .map(|(side, e, seed)| {
                                vec![
                                    p.model.family().name().to_owned(),
                                    opt_num(a1),
                                    opt_num(a2),
                                    opt_num(kappa),
                                    num(p.model.strength()),
                                    num(p.beta),
                                    p.inner.to_string(),
                                    p.core_half_width.to_string(),
                                    (*side).to_owned(),
                                    num(e.mean),
                                    num(e.std_error),
                                    num(e.tau_int),
                                    e.n_samples.to_string(),
                                    seed.to_string(),
                                ]
                            })
                            .collect();
                    artifacts.push(Artifact::csv("magnetize.csv", &MAGNETIZE_HEADER, &rows)?);
                }
                if json {
                    let onsager = (p.model.family() == Family::NearestNeighborIsing)
                        .then(|| onsager_reference(p.beta * p.model.strength()));
                    artifacts.push(Artifact::json(
                        "magnetize.json",
                        &json!({
                            "model": model_json(&p.model, p.kernel.radius()),
                            "beta": p.beta,
                            "L": p.inner,
                            "core_half_width": p.core_half_width,
                            "plus": EstimateJson::from(plus),
                            "minus": EstimateJson::from(minus),
                            "difference": {
                                "mean": plus.mean - minus.mean,
                                "std_error": plus.std_error.hypot(minus.std_error),
                            },
                            "acceptance": [runs[0].acceptance, runs[1].acceptance],
                            "onsager_reference": onsager,
                            "seeds": seeds,
                        }),
                    )?);
                }
                if p.series {
                    let rows: Vec<Vec<String>> = runs[0].series[0]
                        .iter()
                        .zip(&runs[1].series[0])
                        .enumerate()
                        .map(|(t, (a, b))| vec![t.to_string(), num(*a), num(*b)])
                        .collect();
                    artifacts.push(Artifact::csv(
                        "magnetize_series.csv",
                        &["sample", "plus", "minus"],
                        &rows,
                    )?);
                }
            }
            Plan::Probe(p) => {
                let reports = run_probes(&p.specs, &p.kernel)?;
                if p.scan {
                    let table = scan_table(reports);
                    if csv {
                        let header: Vec<&str> = PROBE_HEADER
                            .iter()
                            .chain(&SCAN_EXTRA_HEADER)
                            .copied()
                            .collect();
                        let rows: Vec<Vec<String>> = table
                            .rows
                            .iter()
                            .map(|r| {
                                let mut row = gap_row(r);
                                let halved = r.params.center == ImageCenter::Alternating
                                    && table.halving.iter().any(|&(_, l)| l == r.params.inner);
                                row.push(center_name(r.params.center).to_owned());
                                row.push(halved.to_string());
                                row
                            })
                            .collect();
                        artifacts.push(Artifact::csv("scan.csv", &header, &rows)?);
                    }
                    if json {
                        artifacts.push(Artifact::json(
                            "scan.json",
                            &json!({
                                "rows": table.rows.iter().map(gap_json).collect::<Vec<_>>(),
                                "halving": table.halving,
                            }),
                        )?);
                    }
                } else {
                    if csv {
                        let rows: Vec<Vec<String>> = reports.iter().map(gap_row).collect();
                        artifacts.push(Artifact::csv("probe.csv", &PROBE_HEADER, &rows)?);
                    }
                    if json {
                        let mut v = json!({ "report": gap_json(&reports[0]) });
                        if p.convergence {
                            v["convergence"] = json!({
                                "at_2N": gap_json(&reports[1]),
                                "shift": reports[1].gap - reports[0].gap,
                            });
                        }
                        artifacts.push(Artifact::json("probe.json", &v)?);
                    }
                }
            }
            Plan::Annulus(p) => {
                let (a1, a2, _) = family_columns(&p.model);
                let schedules = p
                    .inners
                    .iter()
                    .map(|&l| annulus_size(&p.model, &p.kernel, l, p.target))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(CliError::runtime)?;
                if csv {
                    let rows: Vec<Vec<String>> = schedules
                        .iter()
                        .map(|s| {
                            vec![
                                p.model.family().name().to_owned(),
                                opt_num(a1),
                                opt_num(a2),
                                s.inner.to_string(),
                                num(p.target),
                                s.outer.to_string(),
                                num(s.bound),
                                num(s.asymptotic_exponent),
                            ]
                        })
                        .collect();
                    artifacts.push(Artifact::csv("annulus.csv", &ANNULUS_HEADER, &rows)?);
                }
                if json {
                    let rows: Vec<Value> = schedules
                        .iter()
                        .map(|s| {
                            json!({
                                "L": s.inner,
                                "N": s.outer,
                                "bound_C": s.bound,
                                "alpha_eff": s.alpha_eff,
                                "asymptotic_exponent": s.asymptotic_exponent,
                            })
                        })
                        .collect();
                    artifacts.push(Artifact::json(
                        "annulus.json",
                        &json!({
                            "model": model_json(&p.model, p.kernel.radius()),
                            "target_C": p.target,
                            "rows": rows,
                        }),
                    )?);
                }
            }
            Plan::EnergyBound(p) => {
                let bound = energy_difference_bound(&p.model, &p.kernel, p.inner, p.outer)
                    .map_err(CliError::runtime)?;
                let (a1, a2, _) = family_columns(&p.model);
                if csv {
                    let row = vec![
                        p.model.family().name().to_owned(),
                        opt_num(a1),
                        opt_num(a2),
                        p.inner.to_string(),
                        p.outer.to_string(),
                        num(bound),
                    ];
                    artifacts.push(Artifact::csv(
                        "energy_bound.csv",
                        &ENERGY_BOUND_HEADER,
                        &[row],
                    )?);
                }
                if json {
                    artifacts.push(Artifact::json(
                        "energy_bound.json",
                        &json!({
                            "model": model_json(&p.model, p.kernel.radius()),
                            "L": p.inner,
                            "N": p.outer,
                            "bound_C": bound,
                        }),
                    )?);
                }
            }
            Plan::Oracle(p) => {
                let window = BoxRegion::new(p.inner);
                let config = homogeneous(window, p.model.kind(), Level::Plus);
                let bc = match p.exterior {
                    ExteriorName::Free => BoundarySpec::free(),
                    ExteriorName::Plus => BoundarySpec::homogeneous(Level::Plus),
                    ExteriorName::Minus => BoundarySpec::homogeneous(Level::Minus),
                };
                let result = match p.model.kind() {
                    SpinKind::Scalar => enumerate_ising(&config, &bc, &p.model, &p.kernel, p.beta),
                    SpinKind::Planar => {
                        clock_quadrature_rotator(&config, &bc, &p.model, &p.kernel, p.beta, p.q)
                    }
                }
                .map_err(CliError::runtime)?;
                let mut v = json!({
                    "model": model_json(&p.model, p.kernel.radius()),
                    "beta": p.beta,
                    "L": p.inner,
                    "exterior": p.exterior,
                    "q": (p.model.kind() == SpinKind::Planar).then_some(p.q),
                });
                v["result"] = exact_json(&result);
                let text = serde_json::to_string_pretty(&v).map_err(CliError::runtime)?;
                if json {
                    artifacts.push(Artifact::json("oracle.json", &v)?);
                }
                stdout = Some(text);
            }
            Plan::Decimate(p) => {
                let image = decimate(&p.config);
                artifacts.push(Artifact::json(
                    "decimated.json",
                    &ConfigurationFile::from_configuration(&image),
                )?);
            }
        }
        Ok(Outcome {
            artifacts,
            seeds,
            stdout,
        })
    }
}

/// Rough resident size: kernel table plus per-chain state.
fn memory_estimate(kernel: &InteractionKernel, sites: usize, chains: usize) -> usize {
    kernel.table_len() * 8 + chains * sites * 24
}
