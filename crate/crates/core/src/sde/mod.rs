//! Path simulation of Itô and Stratonovich SDEs in chart coordinates.

pub mod ensemble;
pub mod noise;
pub mod step;

pub use ensemble::{
    density_from_ensemble, expected_histogram_l1, simulate_ensemble, step_plan, weighted_density, InitialCondition,
    PathEnsemble,
};
pub use noise::{NoiseStream, ParticleNoise};
pub use step::{step_detailed, step_ito_em, step_strat_heun, BridgeContext, StepOutcome};
