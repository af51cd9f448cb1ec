//! Densities sampled at cell centres of a [`GridShape`].

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Chart, ChartPoint, GridShape};
use crate::io::atomic_write;

#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid {
    pub shape: GridShape,
    /// Row-major by theta, then phi.
    pub values: Vec<f64>,
}

/// Uniform probability density on a `n_theta x n_phi` sphere grid.
pub fn build_grid(n_theta: usize, n_phi: usize) -> Result<DensityGrid> {
    Ok(DensityGrid::uniform(GridShape::sphere(n_theta, n_phi)?))
}

impl DensityGrid {
    pub fn zeros(shape: GridShape) -> Self {
        DensityGrid {
            shape,
            values: vec![0.0; shape.len()],
        }
    }

    /// `1 / area` in every cell.
    pub fn uniform(shape: GridShape) -> Self {
        DensityGrid {
            shape,
            values: vec![1.0 / shape.chart().total_area(); shape.len()],
        }
    }

    pub fn from_fn(shape: GridShape, f: impl Fn(ChartPoint) -> f64) -> Self {
        DensityGrid {
            shape,
            values: shape.sample(f),
        }
    }

    pub fn from_values(shape: GridShape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                shape.n_theta,
                shape.n_phi
            )));
        }
        Ok(DensityGrid { shape, values })
    }

    pub fn n_theta(&self) -> usize {
        self.shape.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.shape.n_phi
    }

    /// Quadrature weight of every cell, row-major.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.values.len());
        for j in 0..self.n_theta() {
            let wj = self.shape.weight(j);
            w.extend(std::iter::repeat_n(wj, self.n_phi()));
        }
        w
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[self.shape.index(j, k)]
    }

    pub fn mass(&self) -> f64 {
        self.shape.integrate(&self.values)
    }

    /// Scale to unit mass; returns the mass before scaling.
    pub fn normalize(&mut self) -> Result<f64> {
        let m = self.mass();
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::DegenerateUpdate { normalizer: m });
        }
        let r = 1.0 / m;
        self.values.iter_mut().for_each(|v| *v *= r);
        Ok(m)
    }

    fn check_shape(&self, other: &DensityGrid) -> Result<()> {
        if self.shape.n_theta != other.shape.n_theta || self.shape.n_phi != other.shape.n_phi {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.n_theta(),
                self.n_phi(),
                other.n_theta(),
                other.n_phi()
            )));
        }
        Ok(())
    }

    /// `<p, q> = sum p q w`.
    pub fn inner_product(&self, other: &DensityGrid) -> Result<f64> {
        self.check_shape(other)?;
        let prod: Vec<f64> = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(self.shape.integrate(&prod))
    }

    /// `sum |p - q| w`.
    pub fn l1_distance(&self, other: &DensityGrid) -> Result<f64> {
        self.check_shape(other)?;
        let d: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .collect();
        Ok(self.shape.integrate(&d))
    }

    pub fn linf_distance(&self, other: &DensityGrid) -> Result<f64> {
        self.check_shape(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs())))
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `-sum p ln p w`, with `0 ln 0 = 0`.
    pub fn entropy(&self) -> f64 {
        let v: Vec<f64> = self
            .values
            .iter()
            .map(|&p| if p > 0.0 { -p * p.ln() } else { 0.0 })
            .collect();
        self.shape.integrate(&v)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// CSV text with header `theta,phi,p` and 17 significant digits.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::with_capacity(self.values.len() * 72);
        s.push_str("theta,phi,p\n");
        for j in 0..self.n_theta() {
            for k in 0..self.n_phi() {
                let c = self.shape.center(j, k);
                let _ = writeln!(s, "{:.16e},{:.16e},{:.16e}", c.theta, c.phi, self.get(j, k));
            }
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        atomic_write(path, self.to_csv_string().as_bytes())
    }

    /// Read a grid CSV; the grid size is inferred from the rows.
    pub fn read_csv(path: &Path, chart: Chart) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let mut rows: Vec<[f64; 3]> = Vec::new();
        for rec in rdr.deserialize() {
            let (t, p, v): (f64, f64, f64) = rec?;
            rows.push([t, p, v]);
        }
        let first = rows
            .first()
            .ok_or_else(|| Error::ShapeMismatch("empty grid file".into()))?[0];
        let n_phi = rows.iter().take_while(|r| r[0] == first).count();
        if n_phi == 0 || !rows.len().is_multiple_of(n_phi) {
            return Err(Error::ShapeMismatch(format!("{} rows are not a full grid", rows.len())));
        }
        let shape = GridShape::new(chart, rows.len() / n_phi, n_phi)?;
        for (i, r) in rows.iter().enumerate() {
            let c = shape.center(i / n_phi, i % n_phi);
            if (c.theta - r[0]).abs() > 1e-9 || (c.phi - r[1]).abs() > 1e-9 {
                return Err(Error::ShapeMismatch(format!(
                    "row {i} at ({}, {}) is not the cell centre ({}, {})",
                    r[0], r[1], c.theta, c.phi
                )));
            }
        }
        DensityGrid::from_values(shape, rows.into_iter().map(|r| r[2]).collect())
    }
}
