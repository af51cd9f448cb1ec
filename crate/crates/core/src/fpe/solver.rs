//! Explicit RK4 time stepping of the grid Fokker-Planck equation.
//!
//! When the operator has constant phi diffusion, the stiff part
//! `s_p / (2 a_j^2) d_phi^2` of every row is integrated exactly in Fourier
//! space (Lawson's integrating-factor RK4); the step size is then limited by
//! theta diffusion and advection only.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpe::density::DensityGrid;
use crate::fpe::rhs::FpOperator;
use crate::generator::SdeSpec;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Rk4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub scheme: Scheme,
    /// Fixed step; `None` picks `cfl_safety` times the stability limit.
    pub dt: Option<f64>,
    pub cfl_safety: f64,
    pub t_final: f64,
    /// Extra output times in `(0, t_final]`.
    pub snapshots: Vec<f64>,
    /// Integrate constant phi diffusion exactly.
    pub integrating_factor: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            scheme: Scheme::Rk4,
            dt: None,
            cfl_safety: 0.25,
            t_final: 1.0,
            snapshots: Vec::new(),
            integrating_factor: true,
        }
    }
}

impl SolverConfig {
    pub fn with_t_final(t_final: f64) -> Self {
        SolverConfig {
            t_final,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return bad("t_final must be finite and non-negative");
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad("cfl_safety must lie in (0, 1]");
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad("dt must be positive");
            }
        }
        if self.snapshots.iter().any(|&t| !(t > 0.0 && t <= self.t_final)) {
            return bad("snapshot times must lie in (0, t_final]");
        }
        Ok(())
    }
}

/// Per-step bookkeeping.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepStats {
    pub clipped_mass: f64,
    pub clipped_cells: usize,
}

/// Exact phi-diffusion propagators, one row at a time.
struct PhiPropagator {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// `exp(lambda_m dt / 2) / n` and `exp(lambda_m dt) / n` per row and mode.
    half: Vec<f64>,
    full: Vec<f64>,
    buf: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl PhiPropagator {
    fn new(op: &FpOperator, s_phi: f64, dt: f64) -> Self {
        let shape = op.shape();
        let n = shape.n_phi;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let dp = shape.d_phi();
        let mut half = Vec::with_capacity(shape.len());
        let mut full = Vec::with_capacity(shape.len());
        for &a in op.cell_warp() {
            for m in 0..n {
                let s = (std::f64::consts::PI * m as f64 / n as f64).sin();
                let lambda = -2.0 * s_phi / (a * a * dp * dp) * s * s;
                half.push((0.5 * lambda * dt).exp() / n as f64);
                full.push((lambda * dt).exp() / n as f64);
            }
        }
        let scratch = vec![Complex::default(); fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len())];
        PhiPropagator {
            n,
            fwd,
            inv,
            half,
            full,
            buf: vec![Complex::default(); n],
            scratch,
        }
    }

    /// Apply the half-step (`full = false`) or full-step propagator in place.
    fn apply(&mut self, v: &mut [f64], full: bool) {
        let n = self.n;
        let table = if full { &self.full } else { &self.half };
        for (j, row) in v.chunks_mut(n).enumerate() {
            for (b, &x) in self.buf.iter_mut().zip(row.iter()) {
                *b = Complex::new(x, 0.0);
            }
            self.fwd.process_with_scratch(&mut self.buf, &mut self.scratch);
            for (b, &e) in self.buf.iter_mut().zip(&table[j * n..(j + 1) * n]) {
                *b *= e;
            }
            self.inv.process_with_scratch(&mut self.buf, &mut self.scratch);
            for (x, b) in row.iter_mut().zip(&self.buf) {
                *x = b.re;
            }
        }
    }
}

/// A Fokker-Planck operator bound to a step size.
pub struct FpSolver {
    op: FpOperator,
    dt: f64,
    /// Step the phi propagator tables were built for.
    prop_dt: f64,
    limit: f64,
    prop: Option<PhiPropagator>,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl FpSolver {
    pub fn new(op: FpOperator, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        let exact_phi = config.integrating_factor && op.phi_diffusion().is_some();
        let limit = op.stability_limit(exact_phi);
        let dt = match config.dt {
            Some(dt) if dt > limit => return Err(Error::CflViolation { dt, limit }),
            Some(dt) => dt,
            None if limit.is_finite() => config.cfl_safety * limit,
            None => config.t_final.max(f64::MIN_POSITIVE),
        };
        let prop = match op.phi_diffusion() {
            Some(s_phi) if exact_phi && s_phi > 0.0 => Some(PhiPropagator::new(&op, s_phi, dt)),
            _ => None,
        };
        let n = op.shape().len();
        Ok(FpSolver {
            op,
            dt,
            prop_dt: dt,
            limit,
            prop,
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
        })
    }

    pub fn for_spec(density: &DensityGrid, spec: &SdeSpec, config: &SolverConfig) -> Result<Self> {
        FpSolver::new(FpOperator::new(density.shape, spec)?, config)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Stability limit of the explicit part at unit safety factor.
    pub fn stability_limit(&self) -> f64 {
        self.limit
    }

    pub fn operator(&self) -> &FpOperator {
        &self.op
    }

    /// Advance `p` by `dt`, which must not exceed the configured step.
    pub fn step_by(&mut self, p: &mut DensityGrid, dt: f64) -> Result<StepStats> {
        if dt > self.dt * (1.0 + 1e-12) {
            return Err(Error::CflViolation { dt, limit: self.dt });
        }
        if self.prop.is_some() && dt != self.prop_dt {
            let s_phi = self.op.phi_diffusion().unwrap_or(0.0);
            self.prop = Some(PhiPropagator::new(&self.op, s_phi, dt));
            self.prop_dt = dt;
        }
        match self.prop.as_mut() {
            None => rk4(&self.op, &mut p.values, dt, &mut self.k, &mut self.tmp),
            Some(prop) => lawson_rk4(&self.op, prop, &mut p.values, dt, &mut self.k, &mut self.tmp),
        }
        if !p.is_finite() {
            return Err(Error::NonFiniteDensity { step: 0 });
        }
        Ok(clip_negative(p))
    }

    pub fn step(&mut self, p: &mut DensityGrid) -> Result<StepStats> {
        let dt = self.dt;
        self.step_by(p, dt)
    }
}

fn axpy(out: &mut [f64], u: &[f64], h: f64, k: &[f64]) {
    for ((o, &a), &b) in out.iter_mut().zip(u).zip(k) {
        *o = a + h * b;
    }
}

fn rk4(op: &FpOperator, u: &mut [f64], h: f64, k: &mut [Vec<f64>; 4], tmp: &mut [f64]) {
    let [k1, k2, k3, k4] = k;
    op.apply(u, k1);
    axpy(tmp, u, 0.5 * h, k1);
    op.apply(tmp, k2);
    axpy(tmp, u, 0.5 * h, k2);
    op.apply(tmp, k3);
    axpy(tmp, u, h, k3);
    op.apply(tmp, k4);
    for i in 0..u.len() {
        u[i] += h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
    }
}

fn lawson_rk4(
    op: &FpOperator,
    prop: &mut PhiPropagator,
    u: &mut [f64],
    h: f64,
    k: &mut [Vec<f64>; 4],
    tmp: &mut [f64],
) {
    let [k1, k2, k3, k4] = k;
    let n = u.len();
    let mut eu = u.to_vec();
    prop.apply(&mut eu, false);

    op.apply_split(u, k1, false);
    axpy(tmp, u, 0.5 * h, k1);
    prop.apply(tmp, false);
    op.apply_split(tmp, k2, false);
    axpy(tmp, &eu, 0.5 * h, k2);
    op.apply_split(tmp, k3, false);

    // k3 <- E(h/2) k3, then the third stage point E(h) u + h E(h/2) k3.
    prop.apply(k3, false);
    let mut e1u = u.to_vec();
    prop.apply(&mut e1u, true);
    axpy(tmp, &e1u, h, k3);
    op.apply_split(tmp, k4, false);

    // u+ = E(h) u + h/6 (E(h) k1 + 2 E(h/2) (k2 + k3) + k4), with k3 already
    // propagated by half a step.
    prop.apply(k1, true);
    prop.apply(k2, false);
    for i in 0..n {
        u[i] = e1u[i] + h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
    }
}

/// Zero negative cells and rescale the rest so the mass is unchanged.
fn clip_negative(p: &mut DensityGrid) -> StepStats {
    let np = p.n_phi();
    let mut neg = 0.0;
    let mut pos = 0.0;
    let mut cells = 0;
    for j in 0..p.n_theta() {
        let w = p.shape.weight(j);
        for &v in &p.values[j * np..(j + 1) * np] {
            if v < 0.0 {
                neg -= v * w;
                cells += 1;
            } else {
                pos += v * w;
            }
        }
    }
    if cells == 0 {
        return StepStats::default();
    }
    let scale = if pos > 0.0 { (pos - neg) / pos } else { 0.0 };
    for v in p.values.iter_mut() {
        *v = if *v < 0.0 { 0.0 } else { *v * scale };
    }
    StepStats {
        clipped_mass: neg,
        clipped_cells: cells,
    }
}

/// One step of the spec's Fokker-Planck equation.
pub fn step(p: &DensityGrid, spec: &SdeSpec, config: &SolverConfig) -> Result<(DensityGrid, StepStats)> {
    let mut solver = FpSolver::for_spec(p, spec, config)?;
    let mut out = p.clone();
    let stats = solver.step(&mut out)?;
    Ok((out, stats))
}

#[derive(Clone, Debug)]
pub struct Evolution {
    /// `(t, density)` at every requested snapshot time and at `t_final`.
    pub snapshots: Vec<(f64, DensityGrid)>,
    /// `(t, mass)` after every step, starting at `t = 0`.
    pub mass_trace: Vec<(f64, f64)>,
    /// `(t, clipped mass)` for every step that clipped.
    pub clip_trace: Vec<(f64, f64)>,
    pub dt: f64,
    pub steps: usize,
    pub clip_events: usize,
    pub clipped_mass: f64,
}

impl Evolution {
    pub fn final_density(&self) -> &DensityGrid {
        &self.snapshots.last().expect("evolution always has a final snapshot").1
    }
}

/// Integrate from `0` to `config.t_final`, landing exactly on every snapshot time.
pub fn evolve(p0: &DensityGrid, spec: &SdeSpec, config: &SolverConfig) -> Result<Evolution> {
    let mut solver = FpSolver::for_spec(p0, spec, config)?;
    evolve_with(&mut solver, p0, config)
}

pub fn evolve_with(solver: &mut FpSolver, p0: &DensityGrid, config: &SolverConfig) -> Result<Evolution> {
    config.validate()?;
    let mut stops: Vec<f64> = config.snapshots.clone();
    stops.push(config.t_final);
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let dt_max = solver.dt();
    let mut p = p0.clone();
    let mut t = 0.0;
    let mut ev = Evolution {
        snapshots: Vec::with_capacity(stops.len()),
        mass_trace: vec![(0.0, p.mass())],
        clip_trace: Vec::new(),
        dt: dt_max,
        steps: 0,
        clip_events: 0,
        clipped_mass: 0.0,
    };
    for &stop in &stops {
        let span = stop - t;
        if span > 0.0 {
            let n = (span / dt_max).ceil().max(1.0) as usize;
            let dt = span / n as f64;
            for i in 1..=n {
                let stats = solver.step_by(&mut p, dt).map_err(|e| match e {
                    Error::NonFiniteDensity { .. } => Error::NonFiniteDensity { step: ev.steps + 1 },
                    e => e,
                })?;
                ev.steps += 1;
                let now = t + span * i as f64 / n as f64;
                ev.mass_trace.push((now, p.mass()));
                if stats.clipped_cells > 0 {
                    ev.clip_events += 1;
                    ev.clipped_mass += stats.clipped_mass;
                    ev.clip_trace.push((now, stats.clipped_mass));
                }
            }
        }
        t = stop;
        ev.snapshots.push((stop, p.clone()));
    }
    Ok(ev)
}
