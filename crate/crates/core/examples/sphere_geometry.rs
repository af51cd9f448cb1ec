//! Frames, connection, and derivative operators on the unit sphere.
//!
//! ```bash
//! cargo run --release --example sphere_geometry
//! ```

use manifold_fpe::geometry::{
    analytic, covariant_derivative, diffusion_tensor, divergence_vf, hessian, lie_derivative, metric_data,
    quadrature_ibp_residual, Chart, ChartPoint, FieldSpec, GridShape, LocalFrame,
};
use manifold_fpe::Result;

fn main() -> Result<()> {
    run(&[16, 32, 64, 128])
}

pub fn run(ladder: &[usize]) -> Result<()> {
    let s2 = Chart::sphere();
    let p = ChartPoint::new(1.0, 0.5);

    let m = metric_data(&s2, p)?;
    println!("metric at theta = 1: g = {:?}", m.g);
    let fr = LocalFrame::at(&s2, p);
    println!(
        "Gamma^theta_phiphi = {:.6}  (-sin cos = {:.6})",
        m.christoffel[0][1][1],
        -(1f64.sin() * 1f64.cos())
    );
    println!(
        "omega: E_theta part of nabla_Ephi Ephi = {:.6}  (-cot 1 = {:.6})",
        fr.omega[1][1][0].v,
        -1f64.tan().recip()
    );

    let e_theta = FieldSpec::frame_vector(0);
    let e_phi = FieldSpec::frame_vector(1);
    println!("nabla_Ephi Ephi = {:?}", covariant_derivative(&s2, &e_phi, &e_phi, p)?);
    println!("div E_theta = {:.6}", divergence_vf(&s2, &e_theta, p)?);

    let f = analytic(|t, q| t.sin() * q.cos());
    println!(
        "E_theta[sin theta cos phi] = {:.6}",
        lie_derivative(&s2, f.as_ref(), &e_theta, p)?
    );
    let h = hessian(&s2, f.as_ref(), p)?;
    println!(
        "Hess(x) = {h:.6?}  trace = {:.6}  (-2x = {:.6})",
        h[0][0] + h[1][1],
        -2.0 * f.value(p)
    );

    let sig = [e_theta.scaled(0.5), e_phi.scaled(0.8)];
    let d = diffusion_tensor(&sig, p);
    println!("D = {:?}  eigenvalues = {:?}", d.d, d.eigenvalues());

    // <p, X[q]> + <div(pX), q> on a refinement ladder
    let pd = analytic(|t, q| t.cos() * 0.5 + 1.0 + t.sin() * q.cos() * 0.25);
    let q = analytic(|t, q| t.cos() + t.sin() * q.cos());
    let grad_z = FieldSpec::analytic(|t, _| [-t.sin(), manifold_fpe::jet::Jet::constant(0.0)]);
    let mut prev: Option<f64> = None;
    for &n in ladder {
        let g = GridShape::sphere(n, 2 * n)?;
        let r = quadrature_ibp_residual(&g, &pd, &q, &grad_z)?;
        match prev {
            Some(e) => println!("{n:>4}x{:<4} ibp residual {r:.3e}  order {:.2}", 2 * n, (e / r).log2()),
            None => println!("{n:>4}x{:<4} ibp residual {r:.3e}", 2 * n),
        }
        prev = Some(r);
    }
    Ok(())
}
