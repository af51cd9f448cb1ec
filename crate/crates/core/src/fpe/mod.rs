//! Grid densities and the Fokker-Planck solver.

pub mod density;
pub mod rhs;
pub mod solver;

pub use density::{build_grid, DensityGrid};
pub use rhs::{fp_rhs, fp_rhs_box, fp_rhs_ito, fp_rhs_pointwise, fp_rhs_strat, FpOperator};
pub use solver::{evolve, evolve_with, step, Evolution, FpSolver, Scheme, SolverConfig, StepStats};
