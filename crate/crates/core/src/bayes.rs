//! Grid Bayes filter on the sphere and a bootstrap particle filter oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpe::{evolve, DensityGrid, SolverConfig};
use crate::generator::SdeSpec;
use crate::geometry::{ChartPoint, GridShape};
use crate::sde::{step_plan, weighted_density, InitialCondition, NoiseStream, PathEnsemble};
use crate::stats::{density_resultant, resultant};

/// Normalisers at or below this are treated as a vanishing evidence.
pub const MIN_NORMALIZER: f64 = 1e-300;
/// Particle filters fail below this effective sample size.
pub const MIN_ESS: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LikelihoodSpec {
    Uniform,
    /// `p(z | x) ~ exp(kappa (x . z - 1))`.
    VonMisesFisher {
        kappa: f64,
        direction: [f64; 3],
    },
    /// Values at cell centres, row-major.
    Grid {
        values: Vec<f64>,
    },
}

impl LikelihoodSpec {
    pub fn von_mises_fisher(kappa: f64, direction: [f64; 3]) -> Self {
        LikelihoodSpec::VonMisesFisher { kappa, direction }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LikelihoodSpec::Uniform => Ok(()),
            LikelihoodSpec::VonMisesFisher { kappa, direction } => {
                let n = crate::stats::norm(*direction);
                if (n - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidConfig(format!(
                        "measurement direction has norm {n}, expected 1"
                    )));
                }
                if !(kappa.is_finite() && *kappa >= 0.0) {
                    return Err(Error::InvalidConfig("kappa must be finite and non-negative".into()));
                }
                Ok(())
            }
            LikelihoodSpec::Grid { values } => {
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::InvalidConfig(
                        "grid likelihood must be finite and non-negative".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Likelihood at a point. Grid likelihoods need the cell lookup of
    /// [`LikelihoodSpec::on_grid`] and are evaluated through it.
    pub fn eval(&self, p: ChartPoint, shape: GridShape) -> f64 {
        match self {
            LikelihoodSpec::Uniform => 1.0,
            LikelihoodSpec::VonMisesFisher { kappa, direction } => {
                let x = p.to_unit_vector();
                let dot = x[0] * direction[0] + x[1] * direction[1] + x[2] * direction[2];
                (kappa * (dot - 1.0)).exp()
            }
            LikelihoodSpec::Grid { values } => {
                let (j, k) = shape.cell_of(p);
                values[shape.index(j, k)]
            }
        }
    }

    pub fn on_grid(&self, shape: GridShape) -> Result<Vec<f64>> {
        self.validate()?;
        match self {
            LikelihoodSpec::Grid { values } if values.len() != shape.len() => Err(Error::ShapeMismatch(format!(
                "{} likelihood values for {} cells",
                values.len(),
                shape.len()
            ))),
            LikelihoodSpec::Grid { values } => Ok(values.clone()),
            _ => Ok(shape.sample(|c| self.eval(c, shape))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub t: f64,
    pub likelihood: LikelihoodSpec,
}

#[derive(Clone, Debug)]
pub struct FilterState {
    pub density: DensityGrid,
    pub t: f64,
    pub history: Vec<(f64, DensityGrid)>,
    /// Mass found before each renormalisation after prediction.
    pub predict_masses: Vec<f64>,
    /// Evidence `<prior, likelihood>` of each update.
    pub normalizers: Vec<f64>,
    pub keep_history: bool,
}

impl FilterState {
    pub fn new(density: DensityGrid) -> Self {
        FilterState {
            density,
            t: 0.0,
            history: Vec::new(),
            predict_masses: Vec::new(),
            normalizers: Vec::new(),
            keep_history: false,
        }
    }

    fn record(&mut self) {
        if self.keep_history {
            self.history.push((self.t, self.density.clone()));
        }
    }
}

/// Propagate the density through the Fokker-Planck equation for `dt_total`.
pub fn predict(state: &FilterState, spec: &SdeSpec, dt_total: f64, config: &SolverConfig) -> Result<FilterState> {
    let mut next = state.clone();
    if dt_total <= 0.0 {
        return Ok(next);
    }
    let cfg = SolverConfig {
        t_final: dt_total,
        snapshots: Vec::new(),
        ..config.clone()
    };
    let ev = evolve(&state.density, spec, &cfg)?;
    next.density = ev.final_density().clone();
    next.predict_masses.push(next.density.normalize()?);
    next.t += dt_total;
    next.record();
    Ok(next)
}

/// Bayes rule on the grid: `prior * likelihood / <prior, likelihood>`.
pub fn update(state: &FilterState, lik: &LikelihoodSpec) -> Result<FilterState> {
    let l = lik.on_grid(state.density.shape)?;
    let mut next = state.clone();
    for (p, l) in next.density.values.iter_mut().zip(&l) {
        *p *= l;
    }
    let z = next.density.mass();
    if !(z > MIN_NORMALIZER) {
        return Err(Error::DegenerateUpdate { normalizer: z });
    }
    let r = 1.0 / z;
    next.density.values.iter_mut().for_each(|v| *v *= r);
    next.normalizers.push(z);
    next.record();
    Ok(next)
}

#[derive(Clone, Debug)]
pub struct FilterSnapshot {
    pub t: f64,
    pub prior: DensityGrid,
    pub posterior: DensityGrid,
    /// Mass before renormalisation at the end of the prediction.
    pub predict_mass: f64,
    /// Evidence of the update, 1 when there was none.
    pub normalizer: f64,
}

fn check_schedule(schedule: &[Measurement]) -> Result<()> {
    if schedule.iter().any(|m| !(m.t >= 0.0 && m.t.is_finite())) {
        return Err(Error::InvalidConfig(
            "measurement times must be finite and non-negative".into(),
        ));
    }
    if schedule.windows(2).any(|w| w[1].t <= w[0].t) {
        return Err(Error::InvalidConfig(
            "measurement times must be strictly increasing".into(),
        ));
    }
    schedule.iter().try_for_each(|m| m.likelihood.validate())
}

/// Alternate prediction and update over the schedule. With an empty
/// schedule the density is predicted over `config.t_final`.
pub fn run_filter(
    p0: &DensityGrid,
    spec: &SdeSpec,
    schedule: &[Measurement],
    config: &SolverConfig,
) -> Result<Vec<FilterSnapshot>> {
    check_schedule(schedule)?;
    let mut state = FilterState::new(p0.clone());
    let mut out = Vec::with_capacity(schedule.len().max(1));
    if schedule.is_empty() {
        let s = predict(&state, spec, config.t_final, config)?;
        out.push(FilterSnapshot {
            t: s.t,
            prior: s.density.clone(),
            predict_mass: s.predict_masses.last().copied().unwrap_or(1.0),
            posterior: s.density,
            normalizer: 1.0,
        });
        return Ok(out);
    }
    for m in schedule {
        let before = state.predict_masses.len();
        state = predict(&state, spec, m.t - state.t, config)?;
        let predict_mass = if state.predict_masses.len() > before {
            state.predict_masses[before]
        } else {
            1.0
        };
        let prior = state.density.clone();
        state = update(&state, &m.likelihood)?;
        out.push(FilterSnapshot {
            t: m.t,
            prior,
            posterior: state.density.clone(),
            predict_mass,
            normalizer: *state.normalizers.last().expect("update records its normaliser"),
        });
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ParticleSnapshot {
    pub t: f64,
    /// Weighted histogram of the posterior, before resampling.
    pub density: DensityGrid,
    pub mean: [f64; 3],
    pub ess: f64,
}

#[derive(Clone, Debug)]
pub struct ParticleFilterConfig {
    pub n_particles: usize,
    pub dt: f64,
    pub seed: u64,
    pub shape: GridShape,
}

/// Bootstrap particle filter: propagate, weight by the likelihood,
/// histogram, then resample systematically.
pub fn particle_filter_oracle(
    config: &ParticleFilterConfig,
    spec: &SdeSpec,
    init: &InitialCondition,
    schedule: &[Measurement],
) -> Result<Vec<ParticleSnapshot>> {
    check_schedule(schedule)?;
    let n = config.n_particles;
    if n == 0 {
        return Err(Error::InvalidConfig("need at least one particle".into()));
    }
    let stream = NoiseStream::new(config.seed, spec.sigmas.len());
    let mut ens = PathEnsemble::new(init.sample(spec.chart, n, config.seed)?);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream((u64::MAX >> 1) - 1);
    let mut out = Vec::with_capacity(schedule.len());
    for m in schedule {
        let (steps, h) = step_plan(config.dt, m.t - ens.t);
        if steps > 0 {
            let t_target = m.t;
            ens.advance(spec, h, steps, &stream)?;
            ens.t = t_target;
        }
        let mut w: Vec<f64> = ens
            .particles
            .iter()
            .map(|p| m.likelihood.eval(*p, config.shape))
            .collect();
        let total: f64 = w.iter().sum();
        if !(total > 0.0) {
            return Err(Error::WeightCollapse { ess: 0.0 });
        }
        w.iter_mut().for_each(|x| *x /= total);
        let ess = 1.0 / w.iter().map(|x| x * x).sum::<f64>();
        if ess < MIN_ESS {
            return Err(Error::WeightCollapse { ess });
        }
        out.push(ParticleSnapshot {
            t: m.t,
            density: weighted_density(&ens.particles, Some(&w), config.shape),
            mean: resultant(&ens.particles, Some(&w)),
            ess,
        });
        ens.particles = systematic_resample(&ens.particles, &w, rng.random());
    }
    Ok(out)
}

/// Systematic resampling with offset `u` in `[0, 1)`.
pub fn systematic_resample(points: &[ChartPoint], weights: &[f64], u: f64) -> Vec<ChartPoint> {
    let n = points.len();
    let mut out = Vec::with_capacity(n);
    let mut cum = weights[0];
    let mut i = 0;
    for k in 0..n {
        let target = (k as f64 + u) / n as f64;
        while cum < target && i + 1 < n {
            i += 1;
            cum += weights[i];
        }
        out.push(points[i]);
    }
    out
}

/// Mean direction of a grid density as a unit vector.
pub fn mean_direction(d: &DensityGrid) -> [f64; 3] {
    let m = density_resultant(d);
    let r = crate::stats::norm(m);
    m.map(|x| x / r)
}

/// Length of the resultant vector, a concentration measure in `[0, 1]`.
pub fn resultant_length(d: &DensityGrid) -> f64 {
    crate::stats::norm(density_resultant(d))
}

/// Grid density of a von Mises-Fisher distribution, normalised on the grid.
pub fn vmf_density(shape: GridShape, kappa: f64, mean: [f64; 3]) -> Result<DensityGrid> {
    let lik = LikelihoodSpec::von_mises_fisher(kappa, mean);
    let mut d = DensityGrid::from_values(shape, lik.on_grid(shape)?)?;
    d.normalize()?;
    Ok(d)
}
