//! Stratonovich Heun paths of a spec against Ito Euler-Maruyama paths of its
//! converted spec, compared with a two-sample chi-square test.
//!
//! ```bash
//! cargo run --release --example convention_paths
//! ```

use manifold_fpe::check::generic_spec;
use manifold_fpe::generator::strat_to_ito;
use manifold_fpe::geometry::Chart;
use manifold_fpe::sde::{simulate_ensemble, InitialCondition};
use manifold_fpe::stats::{chi_square_two_sample, resultant, EqualAreaBins};
use manifold_fpe::Result;

fn main() -> Result<()> {
    run(100_000, 0.002)
}

pub fn run(n: usize, dt: f64) -> Result<()> {
    let s = generic_spec(Chart::sphere());
    let i = strat_to_ito(&s);
    let init = InitialCondition::VonMisesFisher {
        kappa: 5.0,
        mean: [1.0, 0.0, 0.0],
    };
    let a = simulate_ensemble(n, &s, dt, 1.0, 2, &init)?;
    let b = simulate_ensemble(n, &i, dt, 1.0, 3, &init)?;
    let bins = EqualAreaBins { bands: 16, sectors: 8 };
    let test = chi_square_two_sample(&bins.counts(&a.particles), &bins.counts(&b.particles), 5)?;
    println!(
        "chi2 = {:.1}  dof = {}  p = {:.3}  reject at 1%: {}",
        test.statistic,
        test.dof,
        test.p_value,
        test.rejects(0.01)
    );
    let (ma, mb) = (resultant(&a.particles, None), resultant(&b.particles, None));
    println!("mean resultant strat {ma:.4?}  ito {mb:.4?}");
    println!("subdivided steps: strat {}  ito {}", a.subdivisions, b.subdivisions);
    Ok(())
}
