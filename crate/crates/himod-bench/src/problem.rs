//! Builds the HiMod discretization a config describes, and the reduced models on top.

use anyhow::{Context, Result};
use himod::adr::{assemble_adr, benchmark_space, AdrProblemSpec};
use himod::affine::AffineSystem;
use himod::geometry::DomainMap;
use himod::rom::{
    collect_snapshots, collect_stokes_snapshots, greedy_offline, greedy_offline_stokes, pod_extract, sample_training_set,
    AdrGreedy, Cutoff, GreedyOptions, PodSpectrum, ReducedAffine, ReducedBasis, ReducedSaddle, ResponseMatrix,
    StokesGreedy, StokesSnapshots, TrainingSet,
};
use himod::space::{HiModSpace, InnerProductMatrix, NormTag};
use himod::stokes::{assemble_stokes, SaddleAffineSystem, StokesProblemSpec, StokesSpace};
use himod::Execution;

use crate::config::{ExperimentConfig, ProblemKind};

pub struct AdrModel {
    pub space: HiModSpace,
    pub sys: AffineSystem,
    pub x: InnerProductMatrix,
}

pub struct StokesModel {
    pub space: StokesSpace,
    pub sys: SaddleAffineSystem,
    pub xu: InnerProductMatrix,
    pub xp: InnerProductMatrix,
}

pub enum Model {
    Adr(AdrModel),
    Stokes(StokesModel),
}

impl Model {
    pub fn build(c: &ExperimentConfig) -> Result<Self> {
        Ok(match c.problem {
            ProblemKind::Adr => {
                let map = DomainMap::adr_benchmark(c.length, c.amplitude)?;
                let space = benchmark_space(map, c.elements, c.modes, c.nu_ref, c.rho)?;
                let spec = AdrProblemSpec { robin: c.rho, ..AdrProblemSpec::benchmark() };
                spec.validate_domain(&c.domain)?;
                let sys = assemble_adr(&space, &spec).context("assembling the ADR system")?;
                let x = InnerProductMatrix::assemble(&space, NormTag::H1)?;
                Model::Adr(AdrModel { space, sys, x })
            }
            ProblemKind::Stokes => {
                let map = DomainMap::stokes_benchmark(c.length, c.height)?;
                let space = StokesSpace::new(map, c.elements, c.modes_velocity, c.modes_pressure)?;
                let spec = StokesProblemSpec::benchmark();
                spec.validate_domain(&c.domain)?;
                let sys = assemble_stokes(&space, &spec).context("assembling the Stokes system")?;
                let xu = space.velocity_inner_product(NormTag::H1)?;
                let xp = space.pressure_inner_product()?;
                Model::Stokes(StokesModel { space, sys, xu, xp })
            }
        })
    }
}

pub fn training_set(c: &ExperimentConfig, m: usize) -> Result<TrainingSet> {
    Ok(sample_training_set(&c.domain, m, c.training_seed)?)
}

pub fn testing_set(c: &ExperimentConfig) -> Result<TrainingSet> {
    Ok(sample_training_set(&c.domain, c.testing_size, c.testing_seed)?)
}

pub fn pod_cutoff(c: &ExperimentConfig) -> Cutoff {
    match c.energy {
        Some(eps) => Cutoff::Energy(eps),
        None => Cutoff::Fixed(c.n),
    }
}

pub fn greedy_options(c: &ExperimentConfig, n_max: usize, exec: Execution) -> GreedyOptions {
    GreedyOptions { n_max, eta_bar: c.eta_bar, seed: c.greedy_seed, exec }
}

/// HiPOD offline for a scalar problem: snapshots, spectrum, basis and reduced operators.
pub struct AdrPod {
    pub snapshots: ResponseMatrix,
    pub spectrum: PodSpectrum,
    pub reduced: ReducedAffine,
}

pub fn adr_pod(m: &AdrModel, set: &TrainingSet, cutoff: Cutoff, exec: Execution) -> Result<AdrPod> {
    let snapshots = collect_snapshots(&m.sys, set, exec)?;
    let (basis, spectrum) = pod_extract(&snapshots, &m.x, cutoff, exec)?;
    let reduced = ReducedAffine::project(&m.sys, &basis)?;
    Ok(AdrPod { snapshots, spectrum, reduced })
}

pub fn adr_greedy(m: &AdrModel, set: &TrainingSet, opts: &GreedyOptions) -> Result<AdrGreedy> {
    Ok(greedy_offline(&m.sys, &m.x, set, opts)?)
}

/// Segregated HiPOD for Stokes: velocity, supremizer and pressure bases from separate
/// correlation matrices.
pub struct StokesPod {
    pub snapshots: StokesSnapshots,
    pub velocity: (ReducedBasis, PodSpectrum),
    pub supremizer: (ReducedBasis, PodSpectrum),
    pub pressure: (ReducedBasis, PodSpectrum),
}

impl StokesPod {
    /// Reduced saddle model on the leading `n_u` velocity, `n_s` supremizer and `n_p`
    /// pressure modes.
    pub fn reduced(&self, m: &StokesModel, n_u: usize, n_s: usize, n_p: usize) -> Result<ReducedSaddle> {
        Ok(ReducedSaddle::project(
            &m.sys,
            &[&self.velocity.0.truncate(n_u), &self.supremizer.0.truncate(n_s)],
            &self.pressure.0.truncate(n_p),
        )?)
    }
}

pub fn stokes_pod(m: &StokesModel, set: &TrainingSet, cutoff: Cutoff, exec: Execution) -> Result<StokesPod> {
    let snapshots = collect_stokes_snapshots(&m.sys, &m.xu, set, exec)?;
    let velocity = pod_extract(&snapshots.velocity, &m.xu, cutoff, exec)?;
    let supremizer = pod_extract(&snapshots.supremizer, &m.xu, cutoff, exec)?;
    let pressure = pod_extract(&snapshots.pressure, &m.xp, cutoff, exec)?;
    Ok(StokesPod { snapshots, velocity, supremizer, pressure })
}

pub fn stokes_greedy(m: &StokesModel, set: &TrainingSet, opts: &GreedyOptions) -> Result<StokesGreedy> {
    Ok(greedy_offline_stokes(&m.sys, &m.xu, &m.xp, set, opts)?)
}
