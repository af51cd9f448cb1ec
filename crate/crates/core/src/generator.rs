//! Generators of Stratonovich and Itô diffusions and the drift conversion
//! between the two conventions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpe::{fp_rhs, DensityGrid};
use crate::geometry::{
    diffusion_tensor, Chart, ChartPoint, DiffusionTensor, FieldSpec, GridShape, LocalFrame, Scalar, ScalarField,
    VectorField,
};
use crate::jet::Jet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    #[serde(alias = "strat")]
    Stratonovich,
    Ito,
}

impl Convention {
    pub fn name(self) -> &'static str {
        match self {
            Convention::Stratonovich => "stratonovich",
            Convention::Ito => "ito",
        }
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A diffusion `dx = X dt + sum_i sigma_i dW_i` in one of the two
/// conventions. The drift is `X` for Stratonovich specs and `X~` for Itô.
#[derive(Clone, Debug)]
pub struct SdeSpec {
    pub chart: Chart,
    pub convention: Convention,
    pub drift: FieldSpec,
    pub sigmas: Vec<FieldSpec>,
}

impl SdeSpec {
    pub fn new(chart: Chart, convention: Convention, drift: FieldSpec, sigmas: Vec<FieldSpec>) -> Self {
        SdeSpec {
            chart,
            convention,
            drift,
            sigmas,
        }
    }

    pub fn stratonovich(chart: Chart, drift: FieldSpec, sigmas: Vec<FieldSpec>) -> Self {
        SdeSpec::new(chart, Convention::Stratonovich, drift, sigmas)
    }

    pub fn ito(chart: Chart, drift: FieldSpec, sigmas: Vec<FieldSpec>) -> Self {
        SdeSpec::new(chart, Convention::Ito, drift, sigmas)
    }

    /// Two channels `sigma_theta E_theta` and `sigma_phi E_phi`.
    pub fn frame_aligned(
        chart: Chart,
        convention: Convention,
        drift: FieldSpec,
        sigma_theta: f64,
        sigma_phi: f64,
    ) -> Self {
        let sigmas = vec![
            FieldSpec::constant(sigma_theta, 0.0),
            FieldSpec::constant(0.0, sigma_phi),
        ];
        SdeSpec::new(chart, convention, drift, sigmas)
    }

    /// Brownian motion on the sphere written as a Stratonovich SDE:
    /// `X = 1/2 cot(theta) E_theta`, `sigma_i = E_i`.
    pub fn brownian_strat() -> Self {
        let drift = FieldSpec::analytic(|t, _| [t.cot() * 0.5, Jet::constant(0.0)]);
        SdeSpec::frame_aligned(Chart::sphere(), Convention::Stratonovich, drift, 1.0, 1.0)
    }

    /// Brownian motion on the sphere as an Itô SDE: zero drift, `sigma_i = E_i`.
    pub fn brownian_ito() -> Self {
        SdeSpec::frame_aligned(Chart::sphere(), Convention::Ito, FieldSpec::zero(), 1.0, 1.0)
    }

    pub fn diffusion(&self, p: ChartPoint) -> DiffusionTensor {
        diffusion_tensor(&self.sigmas, p)
    }

    /// `Some([sigma_theta^2, sigma_phi^2])` when every channel has constant
    /// frame components and the diffusion tensor is diagonal.
    pub fn constant_diagonal(&self) -> Option<[f64; 2]> {
        let mut d = [[0.0; 2]; 2];
        for s in &self.sigmas {
            let c = s.constant_components()?;
            for a in 0..2 {
                for b in 0..2 {
                    d[a][b] += c[a] * c[b];
                }
            }
        }
        (d[0][1] == 0.0).then_some([d[0][0], d[1][1]])
    }

    pub fn expect(&self, convention: Convention) -> Result<()> {
        if self.convention != convention {
            return Err(Error::ConventionMismatch {
                expected: convention.name(),
                found: self.convention.name(),
            });
        }
        Ok(())
    }

    pub fn is_analytic(&self) -> bool {
        self.drift.is_analytic() && self.sigmas.iter().all(|s| s.is_analytic())
    }
}

/// `X + c/2 sum_i nabla_{sigma_i} sigma_i`, with `c = +1` or `-1`.
///
/// Values and first derivatives of the jets are exact for analytic inputs.
struct CorrectedDrift {
    chart: Chart,
    base: FieldSpec,
    sigmas: Vec<FieldSpec>,
    sign: f64,
    /// `(sum sigma^theta sigma^phi, sum (sigma^phi)^2)` for constant noise.
    constant_moments: Option<[f64; 2]>,
}

impl VectorField for CorrectedDrift {
    fn components(&self, p: ChartPoint) -> [f64; 2] {
        match self.constant_moments {
            // nabla_{E_phi} E_theta = (a'/a) E_phi, nabla_{E_phi} E_phi = -(a'/a) E_theta.
            Some([tp, pp]) => {
                let [a, da, _] = self.chart.warp_values(p.theta);
                let x = self.base.components(p);
                let k = 0.5 * self.sign * da / a;
                [x[0] - k * pp, x[1] + k * tp]
            }
            None => self.jet(p).map(|j| j.v),
        }
    }

    fn jet(&self, p: ChartPoint) -> [Jet; 2] {
        let fr = LocalFrame::at(&self.chart, p);
        let mut out = self.base.jet(p);
        for s in &self.sigmas {
            let sj = s.jet(p);
            let c = fr.cov(&sj, &sj);
            for i in 0..2 {
                out[i] += c[i] * (0.5 * self.sign);
            }
        }
        out
    }

    fn is_analytic(&self) -> bool {
        self.base.is_analytic() && self.sigmas.iter().all(|s| s.is_analytic())
    }
}

fn convert(spec: &SdeSpec, sign: f64, to: Convention) -> SdeSpec {
    let drift = if spec.sigmas.is_empty() || spec.chart == Chart::FlatTorus && all_constant(&spec.sigmas) {
        spec.drift.clone()
    } else {
        let constant_moments = spec.sigmas.iter().try_fold([0.0; 2], |m, s| {
            s.constant_components()
                .map(|c| [m[0] + c[0] * c[1], m[1] + c[1] * c[1]])
        });
        FieldSpec::new(CorrectedDrift {
            chart: spec.chart,
            base: spec.drift.clone(),
            sigmas: spec.sigmas.clone(),
            sign,
            constant_moments,
        })
    };
    SdeSpec::new(spec.chart, to, drift, spec.sigmas.clone())
}

fn all_constant(sigmas: &[FieldSpec]) -> bool {
    sigmas.iter().all(|s| s.constant_components().is_some())
}

/// Itô form of a Stratonovich spec: `X~ = X + 1/2 sum_i nabla_{sigma_i} sigma_i`.
pub fn strat_to_ito(spec: &SdeSpec) -> SdeSpec {
    convert(spec, 1.0, Convention::Ito)
}

/// Stratonovich form of an Itô spec: `X = X~ - 1/2 sum_i nabla_{sigma_i} sigma_i`.
pub fn ito_to_strat(spec: &SdeSpec) -> SdeSpec {
    convert(spec, -1.0, Convention::Stratonovich)
}

/// `(A f)(p) = X[f] + 1/2 sum_i sigma_i[sigma_i[f]]`.
pub fn apply_generator_strat(spec: &SdeSpec, f: &dyn ScalarField, p: ChartPoint) -> Result<f64> {
    spec.expect(Convention::Stratonovich)?;
    spec.chart.check(p)?;
    let fr = LocalFrame::at(&spec.chart, p);
    let fj = f.jet(p);
    let mut out = fr.lie(&spec.drift.jet(p), &fj).v;
    for s in &spec.sigmas {
        let sj = s.jet(p);
        let inner = fr.lie(&sj, &fj);
        out += 0.5 * fr.lie(&sj, &inner).v;
    }
    Ok(out)
}

/// `(A f)(p) = X~[f] + 1/2 D : Hess f`.
pub fn apply_generator_ito(spec: &SdeSpec, f: &dyn ScalarField, p: ChartPoint) -> Result<f64> {
    spec.expect(Convention::Ito)?;
    spec.chart.check(p)?;
    let fr = LocalFrame::at(&spec.chart, p);
    let fj = f.jet(p);
    let drift = fr.lie(&spec.drift.jet(p), &fj).v;
    Ok(drift + 0.5 * spec.diffusion(p).contract(&fr.hess(&fj)))
}

/// Generator in whichever convention the spec is written.
pub fn apply_generator(spec: &SdeSpec, f: &dyn ScalarField, p: ChartPoint) -> Result<f64> {
    match spec.convention {
        Convention::Stratonovich => apply_generator_strat(spec, f, p),
        Convention::Ito => apply_generator_ito(spec, f, p),
    }
}

/// `|<p, A q> - <A* p, q>|` with `A* p` the grid Fokker-Planck right-hand
/// side and `A q` evaluated pointwise at cell centres.
pub fn adjoint_residual(grid: &GridShape, spec: &SdeSpec, p: &Scalar, q: &Scalar) -> Result<f64> {
    let chart = grid.chart();
    let mut local = spec.clone();
    local.chart = chart;
    let density = DensityGrid::from_fn(*grid, |c| p.value(c));
    let rhs = fp_rhs(&density, &local)?;
    let mut vals = Vec::with_capacity(grid.len());
    for j in 0..grid.n_theta {
        for k in 0..grid.n_phi {
            let c = grid.center(j, k);
            let i = grid.index(j, k);
            let aq = apply_generator(&local, q.as_ref(), c)?;
            vals.push(density.values[i] * aq - rhs.values[i] * q.value(c));
        }
    }
    Ok(grid.integrate(&vals).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{analytic, constant};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    type Exact = fn(f64, f64) -> f64;

    fn l1_family() -> Vec<(Scalar, Exact)> {
        vec![
            (analytic(|t, _| t.cos()), |t, _| t.cos()),
            (analytic(|t, p| t.sin() * p.cos()), |t, p| t.sin() * p.cos()),
            (analytic(|t, p| t.sin() * p.sin()), |t, p| t.sin() * p.sin()),
        ]
    }

    fn random_point(rng: &mut ChaCha8Rng) -> ChartPoint {
        ChartPoint::new(rng.random_range(0.05..PI - 0.05), rng.random_range(0.0..2.0 * PI))
    }

    #[test]
    fn brownian_generators_are_half_laplacian() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (s, i) = (SdeSpec::brownian_strat(), SdeSpec::brownian_ito());
        for _ in 0..200 {
            let c = random_point(&mut rng);
            for (f, exact) in l1_family() {
                let want = -exact(c.theta, c.phi);
                assert!((apply_generator_strat(&s, f.as_ref(), c).unwrap() - want).abs() < 1e-10);
                assert!((apply_generator_ito(&i, f.as_ref(), c).unwrap() - want).abs() < 1e-10);
            }
            assert_eq!(apply_generator_strat(&s, constant(2.0).as_ref(), c).unwrap(), 0.0);
        }
    }

    #[test]
    fn trivial_generators() {
        let c = ChartPoint::new(PI / 2.0, 0.0);
        let zero = SdeSpec::stratonovich(Chart::sphere(), FieldSpec::zero(), vec![]);
        let f = analytic(|t, p| t.sin() * p.sin());
        assert_eq!(apply_generator_strat(&zero, f.as_ref(), c).unwrap(), 0.0);
        let rot = SdeSpec::stratonovich(Chart::sphere(), FieldSpec::frame_vector(1), vec![]);
        assert!((apply_generator_strat(&rot, f.as_ref(), c).unwrap() - 1.0).abs() < 1e-15);
        let ito0 = SdeSpec::ito(Chart::sphere(), FieldSpec::zero(), vec![FieldSpec::zero()]);
        assert_eq!(apply_generator_ito(&ito0, f.as_ref(), c).unwrap(), 0.0);
    }

    #[test]
    fn convention_mismatch_is_an_error() {
        let f = constant(1.0);
        let c = ChartPoint::new(1.0, 1.0);
        assert!(matches!(
            apply_generator_ito(&SdeSpec::brownian_strat(), f.as_ref(), c),
            Err(Error::ConventionMismatch { expected: "ito", .. })
        ));
        assert!(apply_generator_strat(&SdeSpec::brownian_ito(), f.as_ref(), c).is_err());
    }

    #[test]
    fn conversion_examples() {
        let s = SdeSpec::frame_aligned(
            Chart::sphere(),
            Convention::Stratonovich,
            FieldSpec::constant(0.3, 0.2),
            0.5,
            0.8,
        );
        let i = strat_to_ito(&s);
        for &t in &[0.3, 1.2, 2.7] {
            let c = ChartPoint::new(t, 0.4);
            let x = i.drift.components(c);
            assert!((x[0] - (0.3 - 0.5 * 0.64 * t.cos() / t.sin())).abs() < 1e-14);
            assert!((x[1] - 0.2).abs() < 1e-15);
        }
        let b = strat_to_ito(&SdeSpec::brownian_strat());
        let back = ito_to_strat(&SdeSpec::brownian_ito());
        for &t in &[0.3, 1.2, 2.7] {
            let c = ChartPoint::new(t, 1.0);
            let x = b.drift.components(c);
            assert!(x[0].abs() < 1e-14 && x[1].abs() < 1e-15);
            let x = back.drift.components(c);
            assert!((x[0] - 0.5 * t.cos() / t.sin()).abs() < 1e-14);
        }
        let quiet = SdeSpec::stratonovich(Chart::sphere(), FieldSpec::constant(1.0, 2.0), vec![]);
        assert_eq!(strat_to_ito(&quiet).drift.constant_components(), Some([1.0, 2.0]));
    }

    #[test]
    fn constant_noise_values_match_jets() {
        let s = SdeSpec::stratonovich(
            Chart::sphere(),
            FieldSpec::constant(0.1, -0.4),
            vec![FieldSpec::constant(0.5, 0.3), FieldSpec::constant(-0.2, 0.8)],
        );
        let i = strat_to_ito(&s);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let c = random_point(&mut rng);
            let (v, j) = (i.drift.components(c), i.drift.jet(c));
            assert!((v[0] - j[0].v).abs() < 1e-13 && (v[1] - j[1].v).abs() < 1e-13);
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let drift = FieldSpec::constant(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let sigmas = (0..3)
                .map(|_| FieldSpec::constant(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let s = SdeSpec::ito(Chart::sphere(), drift.clone(), sigmas);
            let r = strat_to_ito(&ito_to_strat(&s));
            let c = random_point(&mut rng);
            let (a, b) = (drift.components(c), r.drift.components(c));
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn generator_equivalence_with_varying_fields() {
        let s = SdeSpec::stratonovich(
            Chart::sphere(),
            FieldSpec::analytic(|t, p| [t.cos() * p.sin() * 0.4, t.sin() * 0.3 + 0.1]),
            vec![
                FieldSpec::analytic(|t, p| [p.cos() * 0.5 + 0.2, t.sin() * 0.3]),
                FieldSpec::analytic(|t, _| [t.cos() * 0.2, Jet::constant(0.8)]),
            ],
        );
        let i = strat_to_ito(&s);
        let f = analytic(|t, p| (t.cos() * 2.0 + p.sin() * t.sin()).exp() * 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let c = random_point(&mut rng);
            let a = apply_generator_strat(&s, f.as_ref(), c).unwrap();
            let b = apply_generator_ito(&i, f.as_ref(), c).unwrap();
            assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn generator_is_linear() {
        let s = SdeSpec::frame_aligned(
            Chart::sphere(),
            Convention::Stratonovich,
            FieldSpec::constant(0.3, 0.2),
            0.5,
            0.8,
        );
        let f = analytic(|t, p| t.cos() * p.cos());
        let g = analytic(|t, p| t.sin() * (p * 2.0).sin());
        let h = analytic(|t, p| t.cos() * p.cos() * 2.0 - t.sin() * (p * 2.0).sin() * 3.0);
        let c = ChartPoint::new(1.1, 0.3);
        let af = apply_generator_strat(&s, f.as_ref(), c).unwrap();
        let ag = apply_generator_strat(&s, g.as_ref(), c).unwrap();
        let ah = apply_generator_strat(&s, h.as_ref(), c).unwrap();
        assert!((ah - (2.0 * af - 3.0 * ag)).abs() < 1e-12);
    }

    #[test]
    fn constant_diagonal_detection() {
        let s = SdeSpec::brownian_ito();
        assert_eq!(s.constant_diagonal(), Some([1.0, 1.0]));
        let mixed = SdeSpec::ito(Chart::sphere(), FieldSpec::zero(), vec![FieldSpec::constant(1.0, 1.0)]);
        assert_eq!(mixed.constant_diagonal(), None);
    }
}
