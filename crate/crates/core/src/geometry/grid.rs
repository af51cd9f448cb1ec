//! Cell-centred latitude/longitude grids and their midpoint quadrature.

use crate::error::{Error, Result};
use crate::geometry::chart::{Chart, ChartPoint};

/// Cell-centred grid: `theta_j = (j + 1/2) dtheta`, `phi_k = k dphi`,
/// quadrature weights `w_j = a(theta_j) dtheta dphi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridShape {
    chart: Chart,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl GridShape {
    pub fn new(chart: Chart, n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < 8 || n_phi < 8 {
            return Err(Error::GridTooSmall { n_theta, n_phi });
        }
        let mut shape = GridShape { chart, n_theta, n_phi };
        // Grid evaluations never come closer than half a cell to a pole.
        shape.chart = chart.with_pole_eps(0.5 * shape.d_theta() * (1.0 - 1e-12));
        Ok(shape)
    }

    pub fn sphere(n_theta: usize, n_phi: usize) -> Result<Self> {
        GridShape::new(Chart::sphere(), n_theta, n_phi)
    }

    pub fn torus(n_theta: usize, n_phi: usize) -> Result<Self> {
        GridShape::new(Chart::torus(), n_theta, n_phi)
    }

    /// The chart, with its pole band set to half a cell.
    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn d_theta(&self) -> f64 {
        self.chart.theta_extent() / self.n_theta as f64
    }

    pub fn d_phi(&self) -> f64 {
        std::f64::consts::TAU / self.n_phi as f64
    }

    pub fn theta(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.d_theta()
    }

    pub fn phi(&self, k: usize) -> f64 {
        k as f64 * self.d_phi()
    }

    /// Theta of face `f`, between cells `f - 1` and `f`.
    pub fn theta_face(&self, f: usize) -> f64 {
        f as f64 * self.d_theta()
    }

    /// Phi of the face between cells `k` and `k + 1`.
    pub fn phi_face(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.d_phi()
    }

    pub fn center(&self, j: usize, k: usize) -> ChartPoint {
        ChartPoint::new(self.theta(j), self.phi(k))
    }

    pub fn weight(&self, j: usize) -> f64 {
        self.chart.warp_values(self.theta(j))[0] * self.d_theta() * self.d_phi()
    }

    /// Row weights, one per theta index.
    pub fn row_weights(&self) -> Vec<f64> {
        (0..self.n_theta).map(|j| self.weight(j)).collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.row_weights().iter().sum::<f64>() * self.n_phi as f64
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, j: usize, k: usize) -> usize {
        j * self.n_phi + k
    }

    /// Cell containing a wrapped point.
    pub fn cell_of(&self, p: ChartPoint) -> (usize, usize) {
        let j = ((p.theta / self.d_theta()).floor() as isize).clamp(0, self.n_theta as isize - 1);
        let k = ((p.phi / self.d_phi() + 0.5).floor() as isize).rem_euclid(self.n_phi as isize);
        (j as usize, k as usize)
    }

    /// Sample a scalar function at every cell centre, row-major.
    pub fn sample(&self, f: impl Fn(ChartPoint) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for j in 0..self.n_theta {
            for k in 0..self.n_phi {
                out.push(f(self.center(j, k)));
            }
        }
        out
    }

    /// Midpoint quadrature of row-major cell values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let mut s = 0.0;
        for j in 0..self.n_theta {
            let row: f64 = values[j * self.n_phi..(j + 1) * self.n_phi].iter().sum();
            s += row * self.weight(j);
        }
        s
    }
}
