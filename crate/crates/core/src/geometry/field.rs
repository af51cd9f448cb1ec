//! Scalar and vector fields on a chart.
//!
//! Vector fields are always given by their components in the orthonormal
//! frame `(E_theta, E_phi)`. Fields built from jet closures are analytic;
//! fields built from plain `f64` closures get second-order central finite
//! differences with step [`H_FD`].

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geometry::chart::ChartPoint;
use crate::jet::Jet;

/// Finite-difference step (radians) for fields without analytic partials.
pub const H_FD: f64 = 1e-5;

/// Jet of a plain function by central differences.
pub fn finite_difference_jet(f: impl Fn(f64, f64) -> f64, p: ChartPoint, h: f64) -> Jet {
    let (t, q) = (p.theta, p.phi);
    let c = f(t, q);
    let tp = f(t + h, q);
    let tm = f(t - h, q);
    let pp = f(t, q + h);
    let pm = f(t, q - h);
    let cross = (f(t + h, q + h) - f(t + h, q - h) - f(t - h, q + h) + f(t - h, q - h)) / (4.0 * h * h);
    Jet {
        v: c,
        d: [(tp - tm) / (2.0 * h), (pp - pm) / (2.0 * h)],
        dd: [
            [(tp - 2.0 * c + tm) / (h * h), cross],
            [cross, (pp - 2.0 * c + pm) / (h * h)],
        ],
    }
}

pub trait ScalarField: Send + Sync {
    fn value(&self, p: ChartPoint) -> f64;

    fn jet(&self, p: ChartPoint) -> Jet {
        finite_difference_jet(|t, q| self.value(ChartPoint::new(t, q)), p, H_FD)
    }

    fn is_analytic(&self) -> bool {
        false
    }
}

/// Shared scalar field handle.
pub type Scalar = Arc<dyn ScalarField>;

struct AnalyticScalar<F>(F);

impl<F> ScalarField for AnalyticScalar<F>
where
    F: Fn(Jet, Jet) -> Jet + Send + Sync,
{
    fn value(&self, p: ChartPoint) -> f64 {
        (self.0)(Jet::constant(p.theta), Jet::constant(p.phi)).v
    }

    fn jet(&self, p: ChartPoint) -> Jet {
        let (t, q) = Jet::coords(p.theta, p.phi);
        (self.0)(t, q)
    }

    fn is_analytic(&self) -> bool {
        true
    }
}

struct SampledScalar<F>(F);

impl<F> ScalarField for SampledScalar<F>
where
    F: Fn(f64, f64) -> f64 + Send + Sync,
{
    fn value(&self, p: ChartPoint) -> f64 {
        (self.0)(p.theta, p.phi)
    }
}

/// Scalar field with exact derivatives, written as a closure over jets.
pub fn analytic(f: impl Fn(Jet, Jet) -> Jet + Send + Sync + 'static) -> Scalar {
    Arc::new(AnalyticScalar(f))
}

/// Scalar field differentiated by finite differences.
pub fn sampled(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Scalar {
    Arc::new(SampledScalar(f))
}

pub fn constant(c: f64) -> Scalar {
    analytic(move |_, _| Jet::constant(c))
}

pub trait VectorField: Send + Sync {
    /// Frame components `(X^theta, X^phi)`.
    fn components(&self, p: ChartPoint) -> [f64; 2];

    fn jet(&self, p: ChartPoint) -> [Jet; 2] {
        [0, 1].map(|i| finite_difference_jet(|t, q| self.components(ChartPoint::new(t, q))[i], p, H_FD))
    }

    /// `Some` when the frame components do not depend on the point.
    fn constant_components(&self) -> Option<[f64; 2]> {
        None
    }

    fn is_analytic(&self) -> bool {
        false
    }
}

/// A vector field given by frame components; cheap to clone.
#[derive(Clone)]
pub struct FieldSpec(Arc<dyn VectorField>);

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.constant_components() {
            Some(c) => write!(f, "FieldSpec(const {:?})", c),
            None => write!(f, "FieldSpec(..)"),
        }
    }
}

struct ConstantField([f64; 2]);

impl VectorField for ConstantField {
    fn components(&self, _: ChartPoint) -> [f64; 2] {
        self.0
    }
    fn jet(&self, _: ChartPoint) -> [Jet; 2] {
        self.0.map(Jet::constant)
    }
    fn constant_components(&self) -> Option<[f64; 2]> {
        Some(self.0)
    }
    fn is_analytic(&self) -> bool {
        true
    }
}

struct AnalyticField<F>(F);

impl<F> VectorField for AnalyticField<F>
where
    F: Fn(Jet, Jet) -> [Jet; 2] + Send + Sync,
{
    fn components(&self, p: ChartPoint) -> [f64; 2] {
        (self.0)(Jet::constant(p.theta), Jet::constant(p.phi)).map(|j| j.v)
    }
    fn jet(&self, p: ChartPoint) -> [Jet; 2] {
        let (t, q) = Jet::coords(p.theta, p.phi);
        (self.0)(t, q)
    }
    fn is_analytic(&self) -> bool {
        true
    }
}

struct SampledField<F>(F);

impl<F> VectorField for SampledField<F>
where
    F: Fn(f64, f64) -> [f64; 2] + Send + Sync,
{
    fn components(&self, p: ChartPoint) -> [f64; 2] {
        (self.0)(p.theta, p.phi)
    }
}

struct ScaledField {
    inner: FieldSpec,
    scale: f64,
}

impl VectorField for ScaledField {
    fn components(&self, p: ChartPoint) -> [f64; 2] {
        self.inner.components(p).map(|c| c * self.scale)
    }
    fn jet(&self, p: ChartPoint) -> [Jet; 2] {
        self.inner.jet(p).map(|c| c * self.scale)
    }
    fn constant_components(&self) -> Option<[f64; 2]> {
        self.inner.constant_components().map(|c| c.map(|x| x * self.scale))
    }
    fn is_analytic(&self) -> bool {
        self.inner.is_analytic()
    }
}

impl FieldSpec {
    pub fn new(field: impl VectorField + 'static) -> Self {
        FieldSpec(Arc::new(field))
    }

    pub fn constant(x_theta: f64, x_phi: f64) -> Self {
        FieldSpec::new(ConstantField([x_theta, x_phi]))
    }

    pub fn zero() -> Self {
        FieldSpec::constant(0.0, 0.0)
    }

    /// The frame vector `E_theta` (`axis = 0`) or `E_phi` (`axis = 1`).
    pub fn frame_vector(axis: usize) -> Self {
        let mut c = [0.0; 2];
        c[axis] = 1.0;
        FieldSpec::new(ConstantField(c))
    }

    pub fn analytic(f: impl Fn(Jet, Jet) -> [Jet; 2] + Send + Sync + 'static) -> Self {
        FieldSpec::new(AnalyticField(f))
    }

    pub fn sampled(f: impl Fn(f64, f64) -> [f64; 2] + Send + Sync + 'static) -> Self {
        FieldSpec::new(SampledField(f))
    }

    pub fn scaled(&self, scale: f64) -> Self {
        FieldSpec::new(ScaledField {
            inner: self.clone(),
            scale,
        })
    }

    pub fn components(&self, p: ChartPoint) -> [f64; 2] {
        self.0.components(p)
    }

    pub fn jet(&self, p: ChartPoint) -> [Jet; 2] {
        self.0.jet(p)
    }

    pub fn constant_components(&self) -> Option<[f64; 2]> {
        self.0.constant_components()
    }

    pub fn is_analytic(&self) -> bool {
        self.0.is_analytic()
    }

    pub fn is_zero(&self) -> bool {
        self.constant_components() == Some([0.0, 0.0])
    }
}

/// Drift built from a handful of closed-form terms:
///
/// `X^theta = theta_const + cot_theta * cot(theta)`,
/// `X^phi = phi_const + rotation * sin(theta)`.
///
/// `cot_theta = 0.5` with unit noise is the Stratonovich drift of Brownian
/// motion on the sphere; `rotation = w` is rigid rotation about the z axis
/// at angular rate `w`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriftPreset {
    pub theta_const: f64,
    pub phi_const: f64,
    pub cot_theta: f64,
    pub rotation: f64,
}

impl DriftPreset {
    pub fn constant(x_theta: f64, x_phi: f64) -> Self {
        DriftPreset {
            theta_const: x_theta,
            phi_const: x_phi,
            ..Default::default()
        }
    }

    pub fn brownian_strat() -> Self {
        DriftPreset {
            cot_theta: 0.5,
            ..Default::default()
        }
    }

    pub fn rotation(omega: f64) -> Self {
        DriftPreset {
            rotation: omega,
            ..Default::default()
        }
    }

    pub fn field(&self) -> FieldSpec {
        if self.cot_theta == 0.0 && self.rotation == 0.0 {
            return FieldSpec::constant(self.theta_const, self.phi_const);
        }
        let s = *self;
        FieldSpec::analytic(move |t, _| {
            [
                t.cot() * s.cot_theta + s.theta_const,
                t.sin() * s.rotation + s.phi_const,
            ]
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampled_jet_approximates_analytic() {
        let a = analytic(|t, p| t.sin() * p.cos());
        let s = sampled(|t, p| t.sin() * p.cos());
        let x = ChartPoint::new(1.0, 0.5);
        let (ja, js) = (a.jet(x), s.jet(x));
        assert!((ja.d[0] - js.d[0]).abs() < 1e-9);
        assert!((ja.dd[0][1] - js.dd[0][1]).abs() < 1e-5);
        assert!(a.is_analytic() && !s.is_analytic());
    }

    #[test]
    fn preset_collapses_to_constant() {
        assert_eq!(
            DriftPreset::constant(0.3, 0.2).field().constant_components(),
            Some([0.3, 0.2])
        );
        let b = DriftPreset::brownian_strat().field();
        assert!(b.constant_components().is_none());
        let x = ChartPoint::new(0.7, 0.0);
        assert!((b.components(x)[0] - 0.5 / 0.7f64.tan()).abs() < 1e-15);
    }
}
