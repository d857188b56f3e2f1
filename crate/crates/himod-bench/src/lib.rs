//! Experiment driver for the `himod` library: eigenvalue decay, error against N, online
//! speedups, offline cost against M, inf-sup sweeps and field exports, all written as
//! versioned CSV plus a plain-text summary.

pub mod config;
pub mod experiments;
pub mod problem;
pub mod timing;

use anyhow::Result;

pub use config::{ExperimentConfig, Method, ProblemKind};
pub use problem::Model;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    EigDecay,
    ErrorVsN,
    Speedup,
    OfflineCost,
    InfsupSweep,
    FieldExport,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::EigDecay,
        Experiment::ErrorVsN,
        Experiment::Speedup,
        Experiment::OfflineCost,
        Experiment::InfsupSweep,
        Experiment::FieldExport,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::EigDecay => "eig-decay",
            Experiment::ErrorVsN => "error-vs-n",
            Experiment::Speedup => "speedup",
            Experiment::OfflineCost => "offline-cost",
            Experiment::InfsupSweep => "infsup-sweep",
            Experiment::FieldExport => "field-export",
        }
    }

    pub fn applies_to(self, problem: ProblemKind) -> bool {
        self != Experiment::InfsupSweep || problem == ProblemKind::Stokes
    }

    pub fn run(self, c: &ExperimentConfig, model: &Model, summary: &mut experiments::Summary) -> Result<()> {
        match self {
            Experiment::EigDecay => experiments::eig_decay(c, model, summary).map(drop),
            Experiment::ErrorVsN => experiments::error_vs_n(c, model, summary).map(drop),
            Experiment::Speedup => experiments::speedup(c, model, summary).map(drop),
            Experiment::OfflineCost => experiments::offline_cost(c, model, summary).map(drop),
            Experiment::InfsupSweep => experiments::infsup_sweep(c, model, summary).map(drop),
            Experiment::FieldExport => experiments::field_export(c, model, summary).map(drop),
        }
    }
}

/// Builds the model, runs the experiments in order and writes `summary.txt`. A failing
/// stage is recorded in the summary before the error is returned; CSVs written by earlier
/// stages stay on disk. Experiments that do not apply to the problem are skipped, unless
/// one was asked for on its own.
pub fn run(c: &ExperimentConfig, which: &[Experiment]) -> Result<experiments::Summary> {
    if let [e] = which {
        if !e.applies_to(c.problem) {
            anyhow::bail!("{} does not apply to the {:?} problem", e.name(), c.problem);
        }
    }
    std::fs::create_dir_all(&c.out)?;
    let mut summary = vec![experiments::describe(c)];
    let result = (|| {
        let started = std::time::Instant::now();
        let model = Model::build(c)?;
        summary.push(format!("setup: {:.2} s", started.elapsed().as_secs_f64()));
        for &e in which {
            if !e.applies_to(c.problem) {
                summary.push(format!("{}: skipped for this problem", e.name()));
                continue;
            }
            let t = std::time::Instant::now();
            e.run(c, &model, &mut summary).map_err(|err| err.context(format!("experiment {}", e.name())))?;
            log::info!("{} done in {:.2} s", e.name(), t.elapsed().as_secs_f64());
        }
        Ok(())
    })();
    if let Err(err) = &result {
        summary.push(format!("error: {err:#}"));
    }
    std::fs::write(c.out.join("summary.txt"), summary.join("\n") + "\n")?;
    result.map(|_| summary)
}
