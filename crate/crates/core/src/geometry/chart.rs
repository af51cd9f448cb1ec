//! Charts, chart points and pointwise metric data.
//!
//! Both charts are warped products `ds^2 = dtheta^2 + a(theta)^2 dphi^2`:
//! the unit sphere in co-latitude/longitude (`a = sin`) and the flat torus
//! `[0, 2pi)^2` (`a = 1`). Christoffel symbols are computed from the metric
//! jets by the Levi-Civita formula, so nothing below is sphere specific.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::jet::Jet;

/// Default width of the excluded band around each pole for chart points.
pub const DEFAULT_POLE_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Chart {
    /// Unit two-sphere, `theta` in `(0, pi)` reflected through the poles,
    /// `phi` periodic.
    Sphere { pole_eps: f64 },
    /// Flat torus, both coordinates periodic on `[0, 2pi)`.
    FlatTorus,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChartPoint {
    pub theta: f64,
    pub phi: f64,
}

impl ChartPoint {
    pub const fn new(theta: f64, phi: f64) -> Self {
        ChartPoint { theta, phi }
    }

    pub fn is_finite(&self) -> bool {
        self.theta.is_finite() && self.phi.is_finite()
    }

    /// Unit vector of the sphere embedding `(cos phi sin theta, sin phi sin theta, cos theta)`.
    pub fn to_unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [cp * st, sp * st, ct]
    }

    /// Inverse of [`ChartPoint::to_unit_vector`]; the input need not be normalised.
    pub fn from_vector(v: [f64; 3]) -> Self {
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let theta = (v[2] / r).clamp(-1.0, 1.0).acos();
        ChartPoint {
            theta,
            phi: wrap_angle(v[1].atan2(v[0])),
        }
    }
}

/// Reduce an angle to `[0, 2pi)`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Metric, Levi-Civita connection and orthonormal frame at a point.
///
/// `christoffel[k][i][j]` is `Gamma^k_{ij}`; `frame[a][i]` is the `i`-th
/// coordinate component of `E_a`; `coframe[a][i]` the `i`-th component of `E^a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricData {
    pub g: [[f64; 2]; 2],
    pub christoffel: [[[f64; 2]; 2]; 2],
    pub frame: [[f64; 2]; 2],
    pub coframe: [[f64; 2]; 2],
}

impl Chart {
    pub fn sphere() -> Self {
        Chart::Sphere {
            pole_eps: DEFAULT_POLE_EPS,
        }
    }

    pub fn torus() -> Self {
        Chart::FlatTorus
    }

    pub fn name(&self) -> &'static str {
        match self {
            Chart::Sphere { .. } => "sphere",
            Chart::FlatTorus => "torus",
        }
    }

    pub fn dim(&self) -> usize {
        2
    }

    pub fn pole_eps(&self) -> f64 {
        match self {
            Chart::Sphere { pole_eps } => *pole_eps,
            Chart::FlatTorus => 0.0,
        }
    }

    pub fn with_pole_eps(self, eps: f64) -> Self {
        match self {
            Chart::Sphere { .. } => Chart::Sphere { pole_eps: eps },
            t => t,
        }
    }

    /// Length of the theta coordinate range.
    pub fn theta_extent(&self) -> f64 {
        match self {
            Chart::Sphere { .. } => PI,
            Chart::FlatTorus => TAU,
        }
    }

    pub fn theta_periodic(&self) -> bool {
        matches!(self, Chart::FlatTorus)
    }

    /// Surface area of the manifold.
    pub fn total_area(&self) -> f64 {
        match self {
            Chart::Sphere { .. } => 4.0 * PI,
            Chart::FlatTorus => TAU * TAU,
        }
    }

    /// Warp function `a(theta)` of the line element, as a jet.
    pub fn warp(&self, theta: Jet) -> Jet {
        match self {
            Chart::Sphere { .. } => theta.sin(),
            Chart::FlatTorus => Jet::constant(1.0),
        }
    }

    /// `(a, a', a'')` at `theta`.
    pub fn warp_values(&self, theta: f64) -> [f64; 3] {
        match self {
            Chart::Sphere { .. } => {
                let (s, c) = theta.sin_cos();
                [s, c, -s]
            }
            Chart::FlatTorus => [1.0, 0.0, 0.0],
        }
    }

    /// Fails with [`Error::PoleProximity`] inside the pole exclusion band.
    pub fn check(&self, p: ChartPoint) -> Result<()> {
        if let Chart::Sphere { pole_eps } = *self {
            if !(p.theta >= pole_eps && p.theta <= PI - pole_eps) {
                return Err(Error::PoleProximity {
                    theta: p.theta,
                    eps: pole_eps,
                });
            }
        }
        Ok(())
    }

    pub fn wrap(&self, p: ChartPoint) -> ChartPoint {
        self.wrap_counting(p).0
    }

    /// Wrap a point back into the coordinate ranges and report how many
    /// times the path passed through a pole.
    ///
    /// On the sphere `theta` is continued along the meridian great circle:
    /// each pole crossing reflects `theta` and shifts `phi` by `pi`. The
    /// result is clamped into the pole exclusion band.
    pub fn wrap_counting(&self, p: ChartPoint) -> (ChartPoint, u32) {
        match *self {
            Chart::Sphere { pole_eps } => {
                let n = (p.theta / PI).floor();
                let r = p.theta - n * PI;
                let odd = (n as i64).rem_euclid(2) == 1;
                let theta = if odd { PI - r } else { r };
                let phi = if odd { p.phi + PI } else { p.phi };
                let theta = theta.clamp(pole_eps, PI - pole_eps);
                (
                    ChartPoint {
                        theta,
                        phi: wrap_angle(phi),
                    },
                    n.abs() as u32,
                )
            }
            Chart::FlatTorus => (
                ChartPoint {
                    theta: wrap_angle(p.theta),
                    phi: wrap_angle(p.phi),
                },
                0,
            ),
        }
    }

    pub fn contains(&self, p: ChartPoint) -> bool {
        let phi_ok = (0.0..TAU).contains(&p.phi);
        match *self {
            Chart::Sphere { pole_eps } => phi_ok && p.theta >= pole_eps && p.theta <= PI - pole_eps,
            Chart::FlatTorus => phi_ok && (0.0..TAU).contains(&p.theta),
        }
    }

    /// Metric components as jets in the coordinates.
    pub fn metric_jet(&self, p: ChartPoint) -> [[Jet; 2]; 2] {
        let a = self.warp(Jet::var(p.theta, 0));
        [[Jet::constant(1.0), Jet::constant(0.0)], [Jet::constant(0.0), a * a]]
    }

    /// Metric data at `p`; errors inside the pole band.
    pub fn metric_data(&self, p: ChartPoint) -> Result<MetricData> {
        self.check(p)?;
        let frame = crate::geometry::frame::LocalFrame::at(self, p);
        let val2 = |m: &[[Jet; 2]; 2]| {
            let mut out = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    out[i][j] = m[i][j].v;
                }
            }
            out
        };
        let mut christoffel = [[[0.0; 2]; 2]; 2];
        for (k, ck) in christoffel.iter_mut().enumerate() {
            for (i, ci) in ck.iter_mut().enumerate() {
                for (j, e) in ci.iter_mut().enumerate() {
                    *e = frame.christoffel[k][i][j].v;
                }
            }
        }
        Ok(MetricData {
            g: val2(&frame.metric),
            christoffel,
            frame: val2(&frame.frame),
            coframe: val2(&frame.coframe),
        })
    }
}

/// Free-function form of [`Chart::metric_data`].
pub fn metric_data(chart: &Chart, p: ChartPoint) -> Result<MetricData> {
    chart.metric_data(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_metric_at_pi_over_3() {
        let m = metric_data(&Chart::sphere(), ChartPoint::new(PI / 3.0, 0.4)).unwrap();
        assert!((m.g[1][1] - 0.75).abs() < 1e-15);
        assert_eq!(m.g[0][1], 0.0);
        assert!((m.christoffel[1][0][1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(m.christoffel[1][0][1], m.christoffel[1][1][0]);
        assert!((m.christoffel[0][1][1] + (PI / 3.0).sin() * (PI / 3.0).cos()).abs() < 1e-15);
    }

    #[test]
    fn sphere_equator_gamma_theta_phiphi_vanishes() {
        let m = metric_data(&Chart::sphere(), ChartPoint::new(PI / 2.0, 1.0)).unwrap();
        assert!(m.christoffel[0][1][1].abs() < 1e-16);
    }

    #[test]
    fn torus_is_flat() {
        let m = metric_data(&Chart::torus(), ChartPoint::new(1.3, 5.0)).unwrap();
        assert_eq!(m.g, [[1.0, 0.0], [0.0, 1.0]]);
        assert!(m.christoffel.iter().flatten().flatten().all(|&x| x == 0.0));
        assert_eq!(m.frame, [[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn pole_proximity_is_reported() {
        let c = Chart::Sphere { pole_eps: 1e-3 };
        assert!(matches!(
            c.metric_data(ChartPoint::new(5e-4, 0.0)),
            Err(Error::PoleProximity { .. })
        ));
        assert!(c.metric_data(ChartPoint::new(PI - 5e-4, 0.0)).is_err());
        assert!(c.metric_data(ChartPoint::new(2e-3, 0.0)).is_ok());
    }

    #[test]
    fn pole_crossing_reflects_and_shifts_phi() {
        let (q, n) = Chart::sphere().wrap_counting(ChartPoint::new(-0.05, 0.3));
        assert!((q.theta - 0.05).abs() < 1e-15);
        assert!((q.phi - (0.3 + PI)).abs() < 1e-15);
        assert_eq!(n, 1);
        let (q, n) = Chart::sphere().wrap_counting(ChartPoint::new(PI + 0.1, 4.0));
        assert!((q.theta - (PI - 0.1)).abs() < 1e-14);
        assert!((q.phi - (4.0 + PI - TAU)).abs() < 1e-14);
        assert_eq!(n, 1);
    }

    #[test]
    fn unit_vector_round_trip() {
        let p = ChartPoint::new(1.1, 5.9);
        let q = ChartPoint::from_vector(p.to_unit_vector());
        assert!((p.theta - q.theta).abs() < 1e-14 && (p.phi - q.phi).abs() < 1e-14);
    }
}
