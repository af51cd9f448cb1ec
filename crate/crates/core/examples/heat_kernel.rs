//! Brownian motion from a north-pole cap: grid solver against the zonal
//! Legendre series of the heat kernel.
//!
//! ```bash
//! cargo run --release --example heat_kernel
//! ```

use std::f64::consts::PI;

use manifold_fpe::bayes::vmf_density;
use manifold_fpe::fpe::{evolve, DensityGrid, SolverConfig};
use manifold_fpe::generator::SdeSpec;
use manifold_fpe::geometry::GridShape;
use manifold_fpe::Result;

const KAPPA: f64 = 10.0;
const L_MAX: usize = 40;

fn legendre(x: f64, out: &mut [f64]) {
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for l in 2..out.len() {
        out[l] = ((2 * l - 1) as f64 * x * out[l - 1] - (l - 1) as f64 * out[l - 2]) / l as f64;
    }
}

/// `<P_l, p0>` for the normalised cap `p0 ~ exp(kappa (cos theta - 1))`.
fn cap_coefficients() -> Vec<f64> {
    let n = 20_000;
    let h = PI / n as f64;
    let norm = KAPPA / (2.0 * PI * (1.0 - (-2.0 * KAPPA).exp()));
    let mut c = vec![0.0; L_MAX + 1];
    let mut pl = vec![0.0; L_MAX + 1];
    for j in 0..n {
        let t = (j as f64 + 0.5) * h;
        legendre(t.cos(), &mut pl);
        let w = 2.0 * PI * t.sin() * h * norm * (KAPPA * (t.cos() - 1.0)).exp();
        c.iter_mut().zip(&pl).for_each(|(c, p)| *c += w * p);
    }
    c
}

fn series(c: &[f64], theta: f64, t: f64) -> f64 {
    let mut pl = vec![0.0; c.len()];
    legendre(theta.cos(), &mut pl);
    (0..c.len())
        .map(|l| (2 * l + 1) as f64 / (4.0 * PI) * (-((l * (l + 1)) as f64) * t / 2.0).exp() * c[l] * pl[l])
        .sum()
}

fn main() -> Result<()> {
    run(64, &[0.25, 0.5, 1.0, 2.0])
}

pub fn run(n_theta: usize, times: &[f64]) -> Result<()> {
    let shape = GridShape::sphere(n_theta, 2 * n_theta)?;
    let p0 = vmf_density(shape, KAPPA, [0.0, 0.0, 1.0])?;
    let c = cap_coefficients();
    let t_final = times.iter().copied().fold(0.0, f64::max);
    let cfg = SolverConfig {
        t_final,
        snapshots: times.to_vec(),
        ..Default::default()
    };
    let ev = evolve(&p0, &SdeSpec::brownian_ito(), &cfg)?;
    println!("{n_theta}x{} grid, dt = {:.3e}, {} steps", 2 * n_theta, ev.dt, ev.steps);
    for (t, d) in &ev.snapshots {
        let exact = DensityGrid::from_fn(shape, |p| series(&c, p.theta, *t));
        println!(
            "t = {t:<5} L1 = {:.3e}  max = {:.3e}  max|p - 1/4pi| = {:.3e}",
            d.l1_distance(&exact)?,
            d.linf_distance(&exact)?,
            d.values.iter().fold(0.0f64, |m, v| m.max((v - 0.25 / PI).abs()))
        );
    }
    Ok(())
}
