//! Second-level reductions on top of a HiMod discretization: POD of snapshot sets (HiPOD)
//! and the residual-driven greedy (HiRB), sharing one projection layer.

pub mod greedy;
pub mod pod;
pub mod reduced;
pub mod training;

pub use greedy::{
    greedy_offline, greedy_offline_stokes, residual_dual_norm, stokes_residual_dual_norm, AdrEstimator,
    AdrGreedy, GreedyLog, GreedyOptions, GreedyRecord, StokesEstimator, StokesGreedy, StopReason,
};
pub use pod::{collect_snapshots, collect_stokes_snapshots, pod_extract, Cutoff, PodSpectrum, ResponseMatrix, StokesSnapshots};
pub use reduced::{ReducedAffine, ReducedBasis, ReducedSaddle, Role};
pub use training::{sample_training_set, TrainingSet};
