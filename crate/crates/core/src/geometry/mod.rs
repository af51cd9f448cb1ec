//! Charts, frames, fields and intrinsic operators.

pub mod chart;
pub mod field;
pub mod frame;
pub mod grid;
pub mod ops;

pub use chart::{metric_data, wrap_angle, Chart, ChartPoint, MetricData, DEFAULT_POLE_EPS};
pub use field::{analytic, constant, sampled, DriftPreset, FieldSpec, Scalar, ScalarField, VectorField};
pub use frame::LocalFrame;
pub use grid::GridShape;
pub use ops::{
    covariant_derivative, diffusion_tensor, divergence_tensor, divergence_tensor_sphere_diag, divergence_vf, hessian,
    lie_derivative, quadrature_ibp_residual, tensor_ibp_residual, DiffusionTensor, WeightedDiffusion,
};
