//! Intrinsic differential operators evaluated pointwise.
//!
//! Inputs and outputs are frame components. Every operator checks the pole
//! band of the chart before evaluating anything.

use std::sync::Arc;

use crate::error::Result;
use crate::geometry::chart::{Chart, ChartPoint};
use crate::geometry::field::{FieldSpec, Scalar, ScalarField, VectorField};
use crate::geometry::frame::LocalFrame;
use crate::geometry::grid::GridShape;
use crate::jet::Jet;

fn frame_at(chart: &Chart, p: ChartPoint) -> Result<LocalFrame> {
    chart.check(p)?;
    Ok(LocalFrame::at(chart, p))
}

/// Frame components of `nabla_X Y` at `p`.
pub fn covariant_derivative(chart: &Chart, x: &FieldSpec, y: &FieldSpec, p: ChartPoint) -> Result<[f64; 2]> {
    let fr = frame_at(chart, p)?;
    Ok(fr.cov(&x.jet(p), &y.jet(p)).map(|j| j.v))
}

/// `X[f] = df(X)`.
pub fn lie_derivative(chart: &Chart, f: &dyn ScalarField, x: &FieldSpec, p: ChartPoint) -> Result<f64> {
    let fr = frame_at(chart, p)?;
    Ok(fr.lie(&x.jet(p), &f.jet(p)).v)
}

pub fn divergence_vf(chart: &Chart, x: &FieldSpec, p: ChartPoint) -> Result<f64> {
    let fr = frame_at(chart, p)?;
    Ok(fr.div(&x.jet(p)).v)
}

/// Symmetric frame components `Hess_f(E_a, E_b)`.
pub fn hessian(chart: &Chart, f: &dyn ScalarField, p: ChartPoint) -> Result<[[f64; 2]; 2]> {
    let fr = frame_at(chart, p)?;
    Ok(fr.hess(&f.jet(p)))
}

/// Diffusion tensor `D = sum_i sigma_i (x) sigma_i` in frame components.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffusionTensor {
    pub d: [[f64; 2]; 2],
    pub num_channels: usize,
}

impl DiffusionTensor {
    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let [[a, b], [_, c]] = self.d;
        let mean = 0.5 * (a + c);
        let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        [mean - r, mean + r]
    }

    /// `D : H = D^{ab} H_{ab}`.
    pub fn contract(&self, h: &[[f64; 2]; 2]) -> f64 {
        let mut s = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                s += self.d[a][b] * h[a][b];
            }
        }
        s
    }

    /// `alpha^T D alpha` for covector components `alpha`.
    pub fn quadratic_form(&self, alpha: [f64; 2]) -> f64 {
        let mut s = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                s += alpha[a] * self.d[a][b] * alpha[b];
            }
        }
        s
    }
}

/// Diffusion tensor of the given noise fields at `p`.
pub fn diffusion_tensor(sigmas: &[FieldSpec], p: ChartPoint) -> DiffusionTensor {
    let mut d = [[0.0; 2]; 2];
    for s in sigmas {
        let c = s.components(p);
        for a in 0..2 {
            for b in 0..2 {
                d[a][b] += c[a] * c[b];
            }
        }
    }
    DiffusionTensor {
        d,
        num_channels: sigmas.len(),
    }
}

/// Frame components of `w D` as jets.
pub(crate) fn weighted_tensor_jets(weight: Jet, sigma_jets: &[[Jet; 2]]) -> [[Jet; 2]; 2] {
    let mut t = [[Jet::constant(0.0); 2]; 2];
    for s in sigma_jets {
        for a in 0..2 {
            for b in 0..2 {
                t[a][b] += s[a] * s[b];
            }
        }
    }
    for row in t.iter_mut() {
        for e in row.iter_mut() {
            *e = *e * weight;
        }
    }
    t
}

/// The `(2,0)` field `w D` for a scalar weight `w` and noise fields `sigma_i`.
#[derive(Clone, Copy)]
pub struct WeightedDiffusion<'a> {
    pub weight: &'a dyn ScalarField,
    pub sigmas: &'a [FieldSpec],
}

/// `V = div(w D)`, frame components of the resulting vector field.
pub fn divergence_tensor(chart: &Chart, wd: &WeightedDiffusion<'_>, p: ChartPoint) -> Result<[f64; 2]> {
    let fr = frame_at(chart, p)?;
    let sj: Vec<[Jet; 2]> = wd.sigmas.iter().map(|s| s.jet(p)).collect();
    let t = weighted_tensor_jets(wd.weight.jet(p), &sj);
    Ok(fr.div_tensor(&t).map(|j| j.v))
}

/// Closed form of `div(p D)` on the sphere for `D = diag(s_theta^2, s_phi^2)`:
/// `V^theta = s_theta^2 dp/dtheta + p cot(theta) (s_theta^2 - s_phi^2)`,
/// `V^phi = s_phi^2 / sin(theta) dp/dphi`.
pub fn divergence_tensor_sphere_diag(p: &Jet, sigma_theta: f64, sigma_phi: f64, theta: f64) -> [f64; 2] {
    let (st, sp) = (sigma_theta * sigma_theta, sigma_phi * sigma_phi);
    let (s, c) = theta.sin_cos();
    [st * p.d[0] + p.v * (c / s) * (st - sp), sp / s * p.d[1]]
}

/// Vector field `w X`.
pub struct ProductField {
    pub weight: Scalar,
    pub field: FieldSpec,
}

impl VectorField for ProductField {
    fn components(&self, p: ChartPoint) -> [f64; 2] {
        let w = self.weight.value(p);
        self.field.components(p).map(|c| c * w)
    }
    fn jet(&self, p: ChartPoint) -> [Jet; 2] {
        let w = self.weight.jet(p);
        self.field.jet(p).map(|c| c * w)
    }
    fn is_analytic(&self) -> bool {
        self.weight.is_analytic() && self.field.is_analytic()
    }
}

/// Vector field `div(w D)`. Its jets carry exact first derivatives when the
/// weight and noise fields are analytic, which is all an outer divergence
/// needs.
pub struct InnerDivergence {
    pub chart: Chart,
    pub weight: Scalar,
    pub sigmas: Vec<FieldSpec>,
}

impl VectorField for InnerDivergence {
    fn components(&self, p: ChartPoint) -> [f64; 2] {
        self.jet(p).map(|j| j.v)
    }
    fn jet(&self, p: ChartPoint) -> [Jet; 2] {
        let fr = LocalFrame::at(&self.chart, p);
        let sj: Vec<[Jet; 2]> = self.sigmas.iter().map(|s| s.jet(p)).collect();
        fr.div_tensor(&weighted_tensor_jets(self.weight.jet(p), &sj))
    }
    fn is_analytic(&self) -> bool {
        self.weight.is_analytic() && self.sigmas.iter().all(|s| s.is_analytic())
    }
}

/// `|<p, X[q]> + <div(p X), q>|` by midpoint quadrature on `grid`.
///
/// Vanishes in the continuum on a closed manifold; on the grid it measures
/// quadrature error.
pub fn quadrature_ibp_residual(grid: &GridShape, p: &Scalar, q: &Scalar, x: &FieldSpec) -> Result<f64> {
    let chart = grid.chart();
    let px = FieldSpec::new(ProductField {
        weight: p.clone(),
        field: x.clone(),
    });
    let mut vals = Vec::with_capacity(grid.len());
    for j in 0..grid.n_theta {
        for k in 0..grid.n_phi {
            let c = grid.center(j, k);
            let lhs = p.value(c) * lie_derivative(&chart, q.as_ref(), x, c)?;
            let rhs = divergence_vf(&chart, &px, c)? * q.value(c);
            vals.push(lhs + rhs);
        }
    }
    Ok(grid.integrate(&vals).abs())
}

/// `|<p D, Hess q> - <div(div(p D)), q>|` by midpoint quadrature on `grid`.
pub fn tensor_ibp_residual(grid: &GridShape, p: &Scalar, sigmas: &[FieldSpec], q: &Scalar) -> Result<f64> {
    let chart = grid.chart();
    let v = FieldSpec::new(InnerDivergence {
        chart,
        weight: p.clone(),
        sigmas: sigmas.to_vec(),
    });
    let mut vals = Vec::with_capacity(grid.len());
    for j in 0..grid.n_theta {
        for k in 0..grid.n_phi {
            let c = grid.center(j, k);
            let d = diffusion_tensor(sigmas, c);
            let pairing = p.value(c) * d.contract(&hessian(&chart, q.as_ref(), c)?);
            vals.push(pairing - divergence_vf(&chart, &v, c)? * q.value(c));
        }
    }
    Ok(grid.integrate(&vals).abs())
}

/// Convenience handle for a product field.
pub fn product_field(weight: Scalar, field: FieldSpec) -> FieldSpec {
    FieldSpec::new(ProductField { weight, field })
}

/// Convenience handle for `div(w D)` as a field.
pub fn inner_divergence_field(chart: Chart, weight: Scalar, sigmas: Vec<FieldSpec>) -> FieldSpec {
    FieldSpec::new(InnerDivergence { chart, weight, sigmas })
}

#[allow(dead_code)]
fn _assert_send_sync() {
    fn f<T: Send + Sync>() {}
    f::<Arc<InnerDivergence>>();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::field::{analytic, constant, sampled};
    use std::f64::consts::PI;

    fn sphere() -> Chart {
        Chart::sphere()
    }

    #[test]
    fn covariant_derivatives_of_the_frame() {
        let e_t = FieldSpec::frame_vector(0);
        let e_p = FieldSpec::frame_vector(1);
        let v = covariant_derivative(&sphere(), &e_p, &e_p, ChartPoint::new(PI / 4.0, 1.0)).unwrap();
        assert!((v[0] + 1.0).abs() < 1e-14 && v[1].abs() < 1e-15);
        for &t in &[0.2, 1.0, 2.5] {
            let v = covariant_derivative(&sphere(), &e_t, &e_t, ChartPoint::new(t, 0.3)).unwrap();
            assert_eq!(v, [0.0, 0.0]);
        }
    }

    #[test]
    fn torus_covariant_derivative_is_directional_derivative() {
        let x = FieldSpec::constant(0.7, -0.2);
        let y = FieldSpec::analytic(|t, p| [t.sin() * p.cos(), (t + p * 2.0).cos()]);
        let c = ChartPoint::new(1.2, 0.4);
        let v = covariant_derivative(&Chart::torus(), &x, &y, c).unwrap();
        let e0 = 0.7 * 1.2f64.cos() * 0.4f64.cos() - 0.2 * (-(1.2f64.sin()) * 0.4f64.sin());
        let e1 = -(2.0f64.sin()) * 0.7 + -(2.0f64.sin()) * 2.0 * -0.2;
        assert!((v[0] - e0).abs() < 1e-14 && (v[1] - e1).abs() < 1e-14);
    }

    #[test]
    fn lie_derivative_examples() {
        let f = analytic(|t, _| t.cos());
        let e_t = FieldSpec::frame_vector(0);
        let e_p = FieldSpec::frame_vector(1);
        let c = ChartPoint::new(0.8, 0.1);
        assert!((lie_derivative(&sphere(), f.as_ref(), &e_t, c).unwrap() + 0.8f64.sin()).abs() < 1e-15);
        assert_eq!(lie_derivative(&sphere(), f.as_ref(), &e_p, c).unwrap(), 0.0);
        let g = analytic(|t, p| t.sin() * p.sin());
        let v = lie_derivative(&sphere(), g.as_ref(), &e_p, ChartPoint::new(PI / 2.0, 0.0)).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn divergence_examples() {
        for &t in &[0.3, 1.0, 2.0] {
            let c = ChartPoint::new(t, 0.5);
            let d = divergence_vf(&sphere(), &FieldSpec::frame_vector(0), c).unwrap();
            assert!((d - t.cos() / t.sin()).abs() < 1e-14);
            assert_eq!(divergence_vf(&sphere(), &FieldSpec::frame_vector(1), c).unwrap(), 0.0);
            assert_eq!(divergence_vf(&sphere(), &FieldSpec::zero(), c).unwrap(), 0.0);
        }
    }

    #[test]
    fn divergence_matches_closed_form_for_general_field() {
        let x = FieldSpec::analytic(|t, p| [t.sin() * p.cos() * 2.0, (t * p).cos()]);
        let c = ChartPoint::new(1.1, 0.7);
        let (t, p) = (c.theta, c.phi);
        // (1/sin) d/dtheta(sin X^t) + (1/sin) dX^p/dphi
        let expected = (2.0 * (2.0 * t).sin() * p.cos()) / t.sin() - t * (t * p).sin() / t.sin();
        assert!((divergence_vf(&sphere(), &x, c).unwrap() - expected).abs() < 1e-13);
    }

    #[test]
    fn hessian_examples() {
        let c = ChartPoint::new(0.9, 2.0);
        assert_eq!(hessian(&sphere(), constant(3.0).as_ref(), c).unwrap(), [[0.0; 2]; 2]);
        let h = hessian(&sphere(), analytic(|t, _| t.cos()).as_ref(), c).unwrap();
        assert!((h[0][0] + 0.9f64.cos()).abs() < 1e-14);
        assert!((h[1][1] + 0.9f64.cos()).abs() < 1e-14);
        assert!(h[0][1].abs() < 1e-15);
        let f = analytic(|t, p| t.sin() * p.cos());
        let h = hessian(&sphere(), f.as_ref(), ChartPoint::new(PI / 3.0, PI / 4.0)).unwrap();
        assert_eq!(h[0][1], h[1][0]);
    }

    #[test]
    fn hessian_off_diagonal_matches_component_formula() {
        let f = analytic(|t, p| (t * 2.0).sin() * (p * 3.0).sin());
        let (t, p) = (0.7, 0.4);
        let h = hessian(&sphere(), f.as_ref(), ChartPoint::new(t, p)).unwrap();
        let f_tp = 2.0 * (2.0 * t).cos() * 3.0 * (3.0 * p).cos();
        let f_p = (2.0 * t).sin() * 3.0 * (3.0 * p).cos();
        let expected = f_tp / t.sin() - (t.cos() / t.sin()) / t.sin() * f_p;
        assert!((h[0][1] - expected).abs() < 1e-12);
        let f_pp = -9.0 * (2.0 * t).sin() * (3.0 * p).sin();
        let f_t = 2.0 * (2.0 * t).cos() * (3.0 * p).sin();
        let expected = f_pp / (t.sin() * t.sin()) + t.cos() / t.sin() * f_t;
        assert!((h[1][1] - expected).abs() < 1e-12);
    }

    #[test]
    fn finite_difference_hessian_is_close() {
        let c = ChartPoint::new(1.3, 0.2);
        let a = hessian(&sphere(), analytic(|t, p| t.sin() * p.cos()).as_ref(), c).unwrap();
        let s = hessian(&sphere(), sampled(|t, p| t.sin() * p.cos()).as_ref(), c).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((a[i][j] - s[i][j]).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn diffusion_tensor_examples() {
        let c = ChartPoint::new(1.0, 1.0);
        let d = diffusion_tensor(&[FieldSpec::constant(0.5, 0.0), FieldSpec::constant(0.0, 0.8)], c);
        assert_eq!(d.d, [[0.25, 0.0], [0.0, 0.8 * 0.8]]);
        assert_eq!(d.num_channels, 2);
        let d = diffusion_tensor(&[FieldSpec::frame_vector(0)], c);
        assert_eq!(d.d, [[1.0, 0.0], [0.0, 0.0]]);
        assert_eq!(d.eigenvalues(), [0.0, 1.0]);
        let d = diffusion_tensor(&[FieldSpec::constant(1.0, 1.0)], c);
        assert_eq!(d.d, [[1.0, 1.0], [1.0, 1.0]]);
        let ev = d.eigenvalues();
        assert!(ev[0].abs() < 1e-15 && (ev[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn divergence_tensor_examples() {
        let c = ChartPoint::new(0.6, 0.3);
        let iso = [FieldSpec::constant(0.7, 0.0), FieldSpec::constant(0.0, 0.7)];
        let one = constant(1.0);
        let v = divergence_tensor(
            &sphere(),
            &WeightedDiffusion {
                weight: one.as_ref(),
                sigmas: &iso,
            },
            c,
        )
        .unwrap();
        assert!(v[0].abs() < 1e-15 && v[1].abs() < 1e-15);

        let aniso = [FieldSpec::constant(1.0, 0.0), FieldSpec::constant(0.0, 0.0)];
        let v = divergence_tensor(
            &sphere(),
            &WeightedDiffusion {
                weight: one.as_ref(),
                sigmas: &aniso,
            },
            c,
        )
        .unwrap();
        assert!((v[0] - 0.6f64.cos() / 0.6f64.sin()).abs() < 1e-14 && v[1] == 0.0);

        let unit = [FieldSpec::frame_vector(0), FieldSpec::frame_vector(1)];
        let p = analytic(|t, _| t.cos());
        let v = divergence_tensor(
            &sphere(),
            &WeightedDiffusion {
                weight: p.as_ref(),
                sigmas: &unit,
            },
            c,
        )
        .unwrap();
        assert!((v[0] + 0.6f64.sin()).abs() < 1e-15 && v[1].abs() < 1e-15);
    }

    #[test]
    fn generic_tensor_divergence_agrees_with_sphere_closed_form() {
        let p = analytic(|t, q| (t.cos() * 0.5 + 1.0) * (q.sin() * t.sin() * 0.3 + 1.0));
        let sig = [FieldSpec::constant(0.5, 0.0), FieldSpec::constant(0.0, 0.8)];
        for &(t, q) in &[(0.2, 0.1), (1.0, 2.0), (2.9, 5.0)] {
            let c = ChartPoint::new(t, q);
            let g = divergence_tensor(
                &sphere(),
                &WeightedDiffusion {
                    weight: p.as_ref(),
                    sigmas: &sig,
                },
                c,
            )
            .unwrap();
            let f = divergence_tensor_sphere_diag(&p.jet(c), 0.5, 0.8, t);
            assert!((g[0] - f[0]).abs() < 1e-13 && (g[1] - f[1]).abs() < 1e-13);
        }
    }

    #[test]
    fn pole_band_errors_propagate() {
        let c = Chart::Sphere { pole_eps: 0.01 };
        let p = ChartPoint::new(0.001, 0.0);
        assert!(divergence_vf(&c, &FieldSpec::zero(), p).is_err());
        assert!(hessian(&c, constant(1.0).as_ref(), p).is_err());
    }
}
