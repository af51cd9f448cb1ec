//! Grid Bayes filter on the sphere against a bootstrap particle filter, on
//! the standard scenario: three kappa = 10 fixes of a static target.
//!
//! ```bash
//! cargo run --release --example bayes_filter
//! ```

use std::path::Path;

use manifold_fpe::bayes::{mean_direction, particle_filter_oracle, resultant_length, run_filter, ParticleFilterConfig};
use manifold_fpe::config::standard_filter_scenario;
use manifold_fpe::stats::{angle_deg, density_resultant};
use manifold_fpe::Result;

fn main() -> Result<()> {
    run(100_000)
}

pub fn run(particles: usize) -> Result<()> {
    let cfg = standard_filter_scenario();
    let shape = cfg.shape()?;
    let spec = cfg.spec()?;
    let p0 = cfg.init.density(shape, Path::new("."))?;
    let schedule = cfg.filter.schedule()?;

    let grid = run_filter(&p0, &spec, &schedule, &cfg.solver)?;
    let pf_cfg = ParticleFilterConfig {
        n_particles: particles,
        dt: cfg.filter.dt,
        seed: cfg.seed,
        shape,
    };
    let init = cfg.init.particles(shape, Path::new("."))?;
    let pf = particle_filter_oracle(&pf_cfg, &spec, &init, &schedule)?;

    println!("    t   prior R  post R     L1     angle   ESS    evidence");
    for (g, o) in grid.iter().zip(&pf) {
        println!(
            "{:5.2}  {:.4}  {:.4}  {:.4}  {:.4}  {:>6.0}  {:.4}",
            g.t,
            resultant_length(&g.prior),
            resultant_length(&g.posterior),
            g.posterior.l1_distance(&o.density)?,
            angle_deg(mean_direction(&g.posterior), o.mean),
            o.ess,
            g.normalizer
        );
    }
    let last = grid.last().expect("three measurements");
    println!("final mean direction {:.5?}", density_resultant(&last.posterior));
    Ok(())
}
