//! Quantum tunnelling hysteresis in two self-trapping models: the two-site
//! nonlinear Hubbard dimer and the nonlinear Schrödinger particle in a box.

pub mod annealer;
pub mod dimer;
pub mod error;
pub mod hysteresis;
pub mod sweep;
pub mod wavefunction;

pub use error::{Error, Result};
pub use annealer::{anneal, convergence_check, AnnealSchedule, ConvergenceReport, ProposalWidth, Refinable, Solution};
pub use dimer::{bias_sweep, spinodal_thresholds, DimerAmplitudes, DimerParams, DimerSweepConfig, DimerSweepTrace};
pub use hysteresis::{
    beta_scan, bifurcation_scan, extract_thresholds, run_cycle, CalibrationRecord, CycleExperiment, CycleSchedule,
    LoopSummary, Side, SweepTrace,
};
pub use sweep::Direction;
pub use wavefunction::{BoxSpec, EnergyModel, FourierCoefficients};
