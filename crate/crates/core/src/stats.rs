//! Sample statistics: binning, two-sample chi-square, directional moments.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::fpe::DensityGrid;
use crate::geometry::ChartPoint;

/// Equal-area sphere bins: `bands` slabs of equal `cos(theta)` width times
/// `sectors` longitude sectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EqualAreaBins {
    pub bands: usize,
    pub sectors: usize,
}

impl EqualAreaBins {
    pub fn len(&self) -> usize {
        self.bands * self.sectors
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bin(&self, p: ChartPoint) -> usize {
        let z = p.theta.cos();
        let b = (((1.0 - z) * 0.5 * self.bands as f64) as usize).min(self.bands - 1);
        let s = ((p.phi / std::f64::consts::TAU * self.sectors as f64) as usize).min(self.sectors - 1);
        b * self.sectors + s
    }

    pub fn counts(&self, points: &[ChartPoint]) -> Vec<u64> {
        let mut c = vec![0; self.len()];
        for p in points {
            c[self.bin(*p)] += 1;
        }
        c
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Bins left after pooling sparse ones.
    pub bins: usize,
}

impl ChiSquareTest {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }

    pub fn critical_value(&self, alpha: f64) -> f64 {
        ChiSquared::new(self.dof as f64)
            .map(|d| d.inverse_cdf(1.0 - alpha))
            .unwrap_or(f64::NAN)
    }
}

/// Two-sample chi-square homogeneity test on paired bin counts.
///
/// Bins whose pooled count is below `min_count` are merged into a single
/// bin before the statistic is formed.
pub fn chi_square_two_sample(a: &[u64], b: &[u64], min_count: u64) -> Result<ChiSquareTest> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!("{} vs {} bins", a.len(), b.len())));
    }
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        if x + y >= min_count {
            pairs.push((x as f64, y as f64));
        } else {
            pooled.0 += x as f64;
            pooled.1 += y as f64;
        }
    }
    if pooled.0 + pooled.1 > 0.0 {
        pairs.push(pooled);
    }
    let (na, nb): (f64, f64) = pairs.iter().fold((0.0, 0.0), |s, p| (s.0 + p.0, s.1 + p.1));
    if pairs.len() < 2 || na == 0.0 || nb == 0.0 {
        return Err(Error::InvalidConfig(
            "chi-square test needs two non-empty samples and two bins".into(),
        ));
    }
    let (ra, rb) = ((nb / na).sqrt(), (na / nb).sqrt());
    let statistic: f64 = pairs
        .iter()
        .filter(|p| p.0 + p.1 > 0.0)
        .map(|&(x, y)| (ra * x - rb * y).powi(2) / (x + y))
        .sum();
    let dof = pairs.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value: 1.0 - dist.cdf(statistic),
        bins: pairs.len(),
    })
}

/// Weighted resultant vector `sum w x / sum w` of sphere points.
pub fn resultant(points: &[ChartPoint], weights: Option<&[f64]>) -> [f64; 3] {
    let mut m = [0.0; 3];
    let mut total = 0.0;
    for (i, p) in points.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        let x = p.to_unit_vector();
        for a in 0..3 {
            m[a] += w * x[a];
        }
        total += w;
    }
    m.map(|v| v / total)
}

/// Resultant vector `int x p dmu` of a grid density.
pub fn density_resultant(d: &DensityGrid) -> [f64; 3] {
    let mut m = [0.0; 3];
    for j in 0..d.n_theta() {
        let w = d.shape.weight(j);
        for k in 0..d.n_phi() {
            let x = d.shape.center(j, k).to_unit_vector();
            let p = d.get(j, k) * w;
            for a in 0..3 {
                m[a] += p * x[a];
            }
        }
    }
    m
}

pub fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Angle between two directions, in degrees.
pub fn angle_deg(a: [f64; 3], b: [f64; 3]) -> f64 {
    let c = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) / (norm(a) * norm(b));
    c.clamp(-1.0, 1.0).acos().to_degrees()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpe::build_grid;
    use std::f64::consts::PI;

    #[test]
    fn equal_area_bins_cover_the_sphere() {
        let b = EqualAreaBins { bands: 4, sectors: 8 };
        assert_eq!(b.bin(ChartPoint::new(0.0, 0.0)), 0);
        assert_eq!(b.bin(ChartPoint::new(PI, 6.27)), 31);
        assert_eq!(b.bin(ChartPoint::new(PI / 2.0 + 1e-3, 0.1)), 16);
    }

    #[test]
    fn identical_samples_are_not_rejected() {
        let a = vec![100, 200, 300, 2, 1];
        let t = chi_square_two_sample(&a, &a, 5).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.bins, 4);
        assert!(!t.rejects(0.01));
    }

    #[test]
    fn shifted_samples_are_rejected() {
        let a = vec![1000, 1000, 1000, 1000];
        let b = vec![1200, 800, 1000, 1000];
        let t = chi_square_two_sample(&a, &b, 5).unwrap();
        assert!(t.rejects(0.01));
        assert!((t.critical_value(0.01) - 11.344866730144373).abs() < 1e-6);
    }

    #[test]
    fn uniform_density_has_zero_resultant() {
        let d = build_grid(32, 64).unwrap();
        assert!(norm(density_resultant(&d)) < 1e-12);
        assert!((angle_deg([1.0, 0.0, 0.0], [0.0, 2.0, 0.0]) - 90.0).abs() < 1e-12);
    }
}
