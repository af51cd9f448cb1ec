//! One-step integrators in chart coordinates.
//!
//! Frame components are converted to coordinate rates with the warped
//! metric: `theta' = c^theta`, `phi' = c^phi / a(theta)`. The Itô step adds
//! the Christoffel drift `-1/2 Gamma^k_ij u^i u^j` of the coordinate noise
//! `u`, which on a warped chart is
//! `+1/2 (a'/a) sum (sigma^phi)^2` in theta and
//! `-(a'/a^2) sum sigma^theta sigma^phi` in phi.
//!
//! Steps whose theta displacement exceeds `pi/4` are halved (up to
//! [`MAX_SUBDIVISION`] levels), splitting the Brownian increment with a
//! bridge sample.

use std::f64::consts::FRAC_PI_4;

use crate::error::{Error, Result};
use crate::generator::{Convention, SdeSpec};
use crate::geometry::ChartPoint;
use crate::sde::noise::{NoiseStream, BRIDGE_NODES};

pub const MAX_SUBDIVISION: u32 = 8;

/// Bridge sampling context for subdivided steps.
#[derive(Clone, Copy, Debug)]
pub struct BridgeContext<'a> {
    pub stream: &'a NoiseStream,
    pub particle: u64,
    pub step: u64,
}

/// Outcome of one (possibly subdivided) step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub point: ChartPoint,
    pub pole_crossings: u32,
    pub subdivisions: u32,
}

/// Coordinate rates at a possibly unwrapped point: drift and one column per
/// channel. `ito` adds the Christoffel drift.
fn rates(spec: &SdeSpec, p: ChartPoint, ito: bool, sig: &mut [[f64; 2]]) -> [f64; 2] {
    let (w, flips) = spec.chart.wrap_counting(p);
    let sign = if flips % 2 == 1 { -1.0 } else { 1.0 };
    let [a, da, _] = spec.chart.warp_values(w.theta);
    let x = spec.drift.components(w);
    let mut drift = [sign * x[0], x[1] / a];
    let (mut spp, mut stp) = (0.0, 0.0);
    for (s, out) in spec.sigmas.iter().zip(sig.iter_mut()) {
        let c = s.components(w);
        *out = [sign * c[0], c[1] / a];
        spp += c[1] * c[1];
        stp += c[0] * c[1];
    }
    if ito {
        drift[0] += sign * 0.5 * da / a * spp;
        drift[1] -= da / (a * a) * stp;
    }
    drift
}

fn finish(spec: &SdeSpec, p: ChartPoint) -> Result<(ChartPoint, u32)> {
    if !p.is_finite() {
        return Err(Error::NonFiniteState {
            theta: p.theta,
            phi: p.phi,
        });
    }
    Ok(spec.chart.wrap_counting(p))
}

/// Channel scratch on the stack for the common small channel counts.
const STACK_CHANNELS: usize = 8;

fn with_scratch<R>(m: usize, f: impl FnOnce(&mut [[f64; 2]], &mut [[f64; 2]]) -> R) -> R {
    if m <= STACK_CHANNELS {
        let mut a = [[0.0; 2]; STACK_CHANNELS];
        let mut b = [[0.0; 2]; STACK_CHANNELS];
        f(&mut a[..m], &mut b[..m])
    } else {
        f(&mut vec![[0.0; 2]; m], &mut vec![[0.0; 2]; m])
    }
}

fn raw_step(spec: &SdeSpec, p: ChartPoint, dt: f64, dw: &[f64]) -> ChartPoint {
    with_scratch(spec.sigmas.len(), |s1, sig| raw_step_in(spec, p, dt, dw, s1, sig))
}

fn raw_step_in(
    spec: &SdeSpec,
    p: ChartPoint,
    dt: f64,
    dw: &[f64],
    s1: &mut [[f64; 2]],
    sig: &mut [[f64; 2]],
) -> ChartPoint {
    let m = spec.sigmas.len();
    match spec.convention {
        Convention::Ito => {
            let d = rates(spec, p, true, &mut sig[..m]);
            let mut q = [p.theta + d[0] * dt, p.phi + d[1] * dt];
            for (s, w) in sig[..m].iter().zip(dw) {
                q[0] += s[0] * w;
                q[1] += s[1] * w;
            }
            ChartPoint::new(q[0], q[1])
        }
        Convention::Stratonovich => {
            let d1 = rates(spec, p, false, s1);
            let mut pred = [p.theta + d1[0] * dt, p.phi + d1[1] * dt];
            for (s, w) in s1.iter().zip(dw) {
                pred[0] += s[0] * w;
                pred[1] += s[1] * w;
            }
            let d2 = rates(spec, ChartPoint::new(pred[0], pred[1]), false, &mut sig[..m]);
            let mut q = [p.theta + 0.5 * (d1[0] + d2[0]) * dt, p.phi + 0.5 * (d1[1] + d2[1]) * dt];
            for ((a, b), w) in s1.iter().zip(sig[..m].iter()).zip(dw) {
                q[0] += 0.5 * (a[0] + b[0]) * w;
                q[1] += 0.5 * (a[1] + b[1]) * w;
            }
            ChartPoint::new(q[0], q[1])
        }
    }
}

fn subdivided(
    spec: &SdeSpec,
    p: ChartPoint,
    dt: f64,
    dw: &[f64],
    bridge: Option<BridgeContext<'_>>,
    level: u32,
    node: u64,
    out: &mut StepOutcome,
) -> Result<ChartPoint> {
    let q = raw_step(spec, p, dt, dw);
    let big = !q.is_finite() || (q.theta - p.theta).abs() > FRAC_PI_4;
    if big && level < MAX_SUBDIVISION && (2 * node + 2) < BRIDGE_NODES {
        out.subdivisions += 1;
        let half = 0.5 * dt;
        // Bridge split: W1 = dW/2 + sqrt(dt)/2 Z, W2 = dW - W1.
        let w1: Vec<f64> = dw
            .iter()
            .enumerate()
            .map(|(c, &w)| {
                let z = match bridge {
                    Some(b) => b.stream.bridge_normal(b.particle, b.step, node, c),
                    None => 0.0,
                };
                0.5 * w + 0.5 * dt.sqrt() * z
            })
            .collect();
        let w2: Vec<f64> = dw.iter().zip(&w1).map(|(w, a)| w - a).collect();
        let mid = subdivided(spec, p, half, &w1, bridge, level + 1, 2 * node + 1, out)?;
        let (mid, n) = finish(spec, mid)?;
        out.pole_crossings += n;
        return subdivided(spec, mid, half, &w2, bridge, level + 1, 2 * node + 2, out);
    }
    Ok(q)
}

fn step_with(
    spec: &SdeSpec,
    state: ChartPoint,
    dt: f64,
    dw: &[f64],
    bridge: Option<BridgeContext<'_>>,
) -> Result<StepOutcome> {
    if dw.len() != spec.sigmas.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} increments for {} channels",
            dw.len(),
            spec.sigmas.len()
        )));
    }
    let mut out = StepOutcome {
        point: state,
        pole_crossings: 0,
        subdivisions: 0,
    };
    let q = subdivided(spec, state, dt, dw, bridge, 0, 0, &mut out)?;
    let (q, n) = finish(spec, q)?;
    out.point = q;
    out.pole_crossings += n;
    Ok(out)
}

/// Euler-Maruyama step of an Itô spec; `increments[i]` is `dW_i`.
pub fn step_ito_em(state: ChartPoint, spec: &SdeSpec, dt: f64, increments: &[f64]) -> Result<ChartPoint> {
    spec.expect(Convention::Ito)?;
    Ok(step_with(spec, state, dt, increments, None)?.point)
}

/// Heun predictor-corrector step of a Stratonovich spec.
pub fn step_strat_heun(state: ChartPoint, spec: &SdeSpec, dt: f64, increments: &[f64]) -> Result<ChartPoint> {
    spec.expect(Convention::Stratonovich)?;
    Ok(step_with(spec, state, dt, increments, None)?.point)
}

/// Step with the integrator matching the spec's convention, drawing bridge
/// samples from `bridge` when the step must be subdivided.
pub fn step_detailed(
    state: ChartPoint,
    spec: &SdeSpec,
    dt: f64,
    increments: &[f64],
    bridge: Option<BridgeContext<'_>>,
) -> Result<StepOutcome> {
    step_with(spec, state, dt, increments, bridge)
}
