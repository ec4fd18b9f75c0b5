//! Replicated simulations: decay-law checks, survival sweeps and critical
//! value bisection, star invasion, and oriented percolation.
//!
//! Replica `r` of experiment `e` always draws from
//! `rng.replica(e, r)`, replicas run on the rayon pool and results are folded
//! in replica order, so every output is a function of the master seed and the
//! configuration alone.

mod decay;
mod invasion;
mod percolation;
mod stats;
mod survival;

pub use decay::{verify_decay, write_decay_csv, DecayConfig, DecayReport, DecayRow, DEFAULT_EVENT_BUDGET};
pub use invasion::{check_invasion, invasion_indicators, InvasionReport};
pub use percolation::{oriented_percolation, PercolationField};
pub use stats::{mean_se, wilson_interval, MeanSe, Z95};
pub use survival::{
    bisect_critical, estimate_survival, survival_indicators, sweep_phase_grid, BisectConfig, CriticalOutcome,
    Direction, SurvivalEstimate, SurvivalSetup, SweepRow, SweepTable,
};

/// Experiment ids mixed into replica seeds.
pub mod ids {
    pub const DECAY: u64 = 1;
    pub const SURVIVAL: u64 = 2;
    pub const INVASION: u64 = 3;
    pub const PERCOLATION: u64 = 4;
    pub const PATHS: u64 = 5;
    pub const COUPLING: u64 = 6;
    pub const SIMULATE: u64 = 7;
}
