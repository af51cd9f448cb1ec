//! Stratonovich and Ito generators of the same diffusion, and the drift
//! conversion between them.
//!
//! ```bash
//! cargo run --release --example generators
//! ```

use manifold_fpe::generator::{apply_generator, ito_to_strat, strat_to_ito, Convention, SdeSpec};
use manifold_fpe::geometry::{analytic, Chart, ChartPoint, FieldSpec};
use manifold_fpe::Result;

fn main() -> Result<()> {
    run(5)
}

pub fn run(n_points: usize) -> Result<()> {
    let s2 = Chart::sphere();
    let pts: Vec<ChartPoint> = (0..n_points)
        .map(|i| ChartPoint::new(0.3 + 2.5 * i as f64 / n_points.max(2) as f64, 0.7 * i as f64))
        .collect();

    // Brownian motion: A f = 1/2 Laplace f, and cos(theta) has eigenvalue -1.
    let f = analytic(|t, _| t.cos());
    for spec in [SdeSpec::brownian_strat(), SdeSpec::brownian_ito()] {
        let worst = pts.iter().try_fold(0.0f64, |m, &p| {
            Ok::<_, manifold_fpe::Error>(m.max((apply_generator(&spec, f.as_ref(), p)? + f.value(p)).abs()))
        })?;
        println!(
            "{:>13} brownian: max |A cos + cos| = {worst:.2e}",
            spec.convention.name()
        );
    }

    // constant frame noise picks up a curvature drift in the Ito form
    let s = SdeSpec::frame_aligned(s2, Convention::Stratonovich, FieldSpec::constant(0.3, 0.2), 0.5, 0.8);
    let i = strat_to_ito(&s);
    for &p in &pts {
        let [xt, xp] = i.drift.components(p);
        let cot = p.theta.tan().recip();
        println!(
            "theta = {:.3}: Ito drift ({xt:+.5}, {xp:+.5})  closed form ({:+.5}, {:+.5})",
            p.theta,
            0.3 - 0.5 * cot * 0.64,
            0.2
        );
    }

    let g = analytic(|t, q| (t.cos() * 2.0).exp() * q.sin());
    let back = ito_to_strat(&i);
    for &p in pts.iter().take(3) {
        let a = apply_generator(&s, g.as_ref(), p)?;
        let b = apply_generator(&i, g.as_ref(), p)?;
        let c = apply_generator(&back, g.as_ref(), p)?;
        println!("A_strat g = {a:+.12}  A_ito g = {b:+.12}  round trip = {c:+.12}");
    }
    Ok(())
}
