//! Particle ensembles, initial samplers and histogram densities.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpe::DensityGrid;
use crate::generator::SdeSpec;
use crate::geometry::{wrap_angle, Chart, ChartPoint, GridShape};
use crate::io::atomic_write;
use crate::sde::noise::{NoiseStream, ParticleNoise};
use crate::sde::step::{step_detailed, BridgeContext};

/// Initial particle distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    Point {
        theta: f64,
        phi: f64,
    },
    /// Uniform with respect to the area form.
    Uniform,
    /// Von Mises-Fisher on the sphere, `p ~ exp(kappa x . mean)`.
    VonMisesFisher {
        kappa: f64,
        mean: [f64; 3],
    },
    /// Sampled from a grid density, uniformly by area inside each cell.
    #[serde(skip)]
    Grid(DensityGrid),
}

impl InitialCondition {
    /// Draw `n` points; deterministic in `seed`.
    pub fn sample(&self, chart: Chart, n: usize, seed: u64) -> Result<Vec<ChartPoint>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::MAX >> 1);
        match self {
            InitialCondition::Point { theta, phi } => {
                let p = ChartPoint::new(*theta, *phi);
                chart.check(p)?;
                Ok(vec![chart.wrap(p); n])
            }
            InitialCondition::Uniform => Ok((0..n)
                .map(|_| match chart {
                    Chart::Sphere { .. } => {
                        let z: f64 = rng.random_range(-1.0..1.0);
                        chart.wrap(ChartPoint::new(z.acos(), rng.random_range(0.0..std::f64::consts::TAU)))
                    }
                    Chart::FlatTorus => ChartPoint::new(
                        rng.random_range(0.0..std::f64::consts::TAU),
                        rng.random_range(0.0..std::f64::consts::TAU),
                    ),
                })
                .collect()),
            InitialCondition::VonMisesFisher { kappa, mean } => {
                if !matches!(chart, Chart::Sphere { .. }) {
                    return Err(Error::InvalidConfig("von Mises-Fisher needs the sphere".into()));
                }
                Ok((0..n)
                    .map(|_| chart.wrap(sample_vmf(&mut rng, *kappa, *mean)))
                    .collect())
            }
            InitialCondition::Grid(d) => sample_grid(d, n, &mut rng),
        }
    }
}

/// Wood's algorithm on the two-sphere.
fn sample_vmf(rng: &mut ChaCha8Rng, kappa: f64, mean: [f64; 3]) -> ChartPoint {
    let u: f64 = rng.random();
    let w = if kappa > 0.0 {
        1.0 + (u + (1.0 - u) * (-2.0 * kappa).exp()).ln() / kappa
    } else {
        2.0 * u - 1.0
    };
    let w = w.clamp(-1.0, 1.0);
    let ang: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - w * w).sqrt();
    let local = [r * ang.cos(), r * ang.sin(), w];
    // Rotate the north pole onto `mean`.
    let m = ChartPoint::from_vector(mean);
    let (st, ct) = m.theta.sin_cos();
    let (sp, cp) = m.phi.sin_cos();
    let x = [
        ct * cp * local[0] - sp * local[1] + st * cp * local[2],
        ct * sp * local[0] + cp * local[1] + st * sp * local[2],
        -st * local[0] + ct * local[2],
    ];
    ChartPoint::from_vector(x)
}

fn sample_grid(d: &DensityGrid, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<ChartPoint>> {
    let shape = d.shape;
    let w = d.weights();
    let mut cdf = Vec::with_capacity(w.len());
    let mut acc = 0.0;
    for (p, w) in d.values.iter().zip(&w) {
        acc += p.max(0.0) * w;
        cdf.push(acc);
    }
    if !(acc > 0.0) {
        return Err(Error::InvalidConfig("initial density has no mass".into()));
    }
    let chart = shape.chart();
    let (h, dp) = (shape.d_theta(), shape.d_phi());
    Ok((0..n)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            let i = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
            let (j, k) = (i / shape.n_phi, i % shape.n_phi);
            let theta = match chart {
                Chart::Sphere { .. } => {
                    let (c0, c1) = ((j as f64 * h).cos(), ((j + 1) as f64 * h).cos());
                    (c0 + rng.random::<f64>() * (c1 - c0)).acos()
                }
                Chart::FlatTorus => (j as f64 + rng.random::<f64>()) * h,
            };
            let phi = shape.phi(k) + (rng.random::<f64>() - 0.5) * dp;
            chart.wrap(ChartPoint::new(theta, wrap_angle(phi)))
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathEnsemble {
    pub particles: Vec<ChartPoint>,
    pub t: f64,
    /// Pole crossings per particle.
    pub pole_crossings: Vec<u32>,
    /// Steps taken so far; later steps continue the noise counter.
    pub steps: u64,
    pub subdivisions: u64,
}

impl PathEnsemble {
    pub fn new(particles: Vec<ChartPoint>) -> Self {
        let n = particles.len();
        PathEnsemble {
            particles,
            t: 0.0,
            pole_crossings: vec![0; n],
            steps: 0,
            subdivisions: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Advance every particle by `n_steps` steps of size `dt`.
    pub fn advance(&mut self, spec: &SdeSpec, dt: f64, n_steps: u64, stream: &NoiseStream) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::InvalidConfig("dt must be positive".into()));
        }
        let m = spec.sigmas.len();
        let mut dw = vec![0.0; m];
        let noisy = m > 0;
        for (i, (p, crossings)) in self
            .particles
            .iter_mut()
            .zip(self.pole_crossings.iter_mut())
            .enumerate()
        {
            let mut noise = ParticleNoise::new(stream, i as u64, self.steps);
            for s in 0..n_steps {
                if noisy {
                    noise.next(dt, &mut dw);
                }
                let bridge = BridgeContext {
                    stream,
                    particle: i as u64,
                    step: self.steps + s,
                };
                let out = step_detailed(*p, spec, dt, &dw, Some(bridge))?;
                *p = out.point;
                *crossings += out.pole_crossings;
                self.subdivisions += out.subdivisions as u64;
            }
        }
        self.steps += n_steps;
        self.t += dt * n_steps as f64;
        Ok(())
    }

    /// CSV text with header `particle_id,theta,phi`.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::with_capacity(self.len() * 56);
        s.push_str("particle_id,theta,phi\n");
        for (i, p) in self.particles.iter().enumerate() {
            let _ = writeln!(s, "{i},{:.16e},{:.16e}", p.theta, p.phi);
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        atomic_write(path, self.to_csv_string().as_bytes())
    }
}

/// Number of steps and step size covering `t_final` with steps no larger than `dt`.
pub fn step_plan(dt: f64, t_final: f64) -> (u64, f64) {
    if t_final <= 0.0 {
        return (0, dt);
    }
    let n = (t_final / dt - 1e-9).ceil().max(1.0) as u64;
    (n, t_final / n as f64)
}

/// Simulate `n_particles` paths from `init` up to `t_final`.
pub fn simulate_ensemble(
    n_particles: usize,
    spec: &SdeSpec,
    dt: f64,
    t_final: f64,
    seed: u64,
    init: &InitialCondition,
) -> Result<PathEnsemble> {
    if n_particles == 0 {
        return Err(Error::InvalidConfig("need at least one particle".into()));
    }
    if !(dt > 0.0 && t_final >= 0.0) {
        return Err(Error::InvalidConfig(
            "dt must be positive and t_final non-negative".into(),
        ));
    }
    let mut ens = PathEnsemble::new(init.sample(spec.chart, n_particles, seed)?);
    let (n, h) = step_plan(dt, t_final);
    ens.advance(spec, h, n, &NoiseStream::new(seed, spec.sigmas.len()))?;
    ens.t = t_final;
    Ok(ens)
}

/// Histogram estimate: `count / (N w_jk)` per cell.
pub fn density_from_ensemble(ens: &PathEnsemble, shape: GridShape) -> DensityGrid {
    weighted_density(&ens.particles, None, shape)
}

/// Histogram with optional particle weights (normalised internally).
pub fn weighted_density(points: &[ChartPoint], weights: Option<&[f64]>, shape: GridShape) -> DensityGrid {
    let mut out = DensityGrid::zeros(shape);
    let total: f64 = weights.map_or(points.len() as f64, |w| w.iter().sum());
    if total <= 0.0 {
        return out;
    }
    for (i, p) in points.iter().enumerate() {
        let (j, k) = shape.cell_of(*p);
        out.values[shape.index(j, k)] += weights.map_or(1.0, |w| w[i]);
    }
    for j in 0..shape.n_theta {
        let r = 1.0 / (total * shape.weight(j));
        for v in &mut out.values[j * shape.n_phi..(j + 1) * shape.n_phi] {
            *v *= r;
        }
    }
    out
}

/// Expected L1 distance between a histogram of `n` samples and the density
/// it estimates: `sqrt(2 / (pi n)) sum sqrt(p w)` (normal approximation).
pub fn expected_histogram_l1(density: &DensityGrid, n: usize) -> f64 {
    let w = density.weights();
    let s: f64 = density
        .values
        .iter()
        .zip(&w)
        .map(|(p, w)| (p.max(0.0) * w).sqrt())
        .sum();
    (2.0 / (std::f64::consts::PI * n as f64)).sqrt() * s
}
