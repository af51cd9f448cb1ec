//! Integration-by-parts, adjointness, and generator identities on a
//! refinement ladder, on the sphere and on the flat torus.
//!
//! ```bash
//! cargo run --release --example identity_checks
//! ```

use manifold_fpe::check::{run_identity_suite, CheckConfig};
use manifold_fpe::geometry::Chart;
use manifold_fpe::Result;

fn main() -> Result<()> {
    run(&[[32, 64], [64, 128], [128, 256]])
}

pub fn run(ladder: &[[usize; 2]]) -> Result<()> {
    let cfg = CheckConfig {
        ladder: ladder.to_vec(),
        ..Default::default()
    };
    let mut ok = true;
    for chart in [Chart::sphere(), Chart::torus()] {
        let report = run_identity_suite(&cfg, chart)?;
        print!("{}", report.table());
        for row in report.rows.iter().filter(|r| !r.levels.is_empty()) {
            let errs: Vec<String> = row.errors.iter().map(|e| format!("{e:.2e}")).collect();
            println!("  {:<26} {}", row.name, errs.join(" -> "));
        }
        ok &= report.passed();
    }
    println!(
        "{}",
        if ok {
            "all identities hold"
        } else {
            "some identities failed"
        }
    );
    Ok(())
}
