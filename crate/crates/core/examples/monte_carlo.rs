//! Ito Euler-Maruyama particles against the grid solver for Brownian motion
//! from a north-pole cap, with the expected histogram noise for each N.
//!
//! ```bash
//! cargo run --release --example monte_carlo
//! ```

use std::time::Instant;

use manifold_fpe::bayes::vmf_density;
use manifold_fpe::fpe::{evolve, SolverConfig};
use manifold_fpe::generator::SdeSpec;
use manifold_fpe::geometry::GridShape;
use manifold_fpe::sde::{density_from_ensemble, expected_histogram_l1, simulate_ensemble, InitialCondition};
use manifold_fpe::Result;

fn main() -> Result<()> {
    run(&[25_000, 100_000, 400_000])
}

pub fn run(counts: &[usize]) -> Result<()> {
    let shape = GridShape::sphere(64, 128)?;
    let spec = SdeSpec::brownian_ito();
    let p0 = vmf_density(shape, 10.0, [0.0, 0.0, 1.0])?;
    let pde = evolve(&p0, &spec, &SolverConfig::with_t_final(1.0))?;
    let target = pde.final_density();
    let init = InitialCondition::VonMisesFisher {
        kappa: 10.0,
        mean: [0.0, 0.0, 1.0],
    };
    let mut prev: Option<(usize, f64)> = None;
    for &n in counts {
        let t0 = Instant::now();
        let ens = simulate_ensemble(n, &spec, 0.005, 1.0, 1, &init)?;
        let hist = density_from_ensemble(&ens, shape);
        let l1 = hist.l1_distance(target)?;
        let slope = prev.map(|(m, e)| (l1 / e).ln() / (n as f64 / m as f64).ln());
        println!(
            "N = {n:>7}  L1 = {l1:.4}  expected {:.4}  slope {}  pole crossings {}  ({:.1?})",
            expected_histogram_l1(target, n),
            slope.map(|s| format!("{s:+.3}")).unwrap_or_else(|| "  -   ".into()),
            ens.pole_crossings.iter().map(|&c| c as u64).sum::<u64>(),
            t0.elapsed()
        );
        prev = Some((n, l1));
    }
    Ok(())
}
