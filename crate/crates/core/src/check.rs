//! Identity suite: pointwise identities, quadrature residuals under grid
//! refinement, and flat-torus agreement with Euclidean formulas.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpe::{fp_rhs, fp_rhs_ito, fp_rhs_pointwise, fp_rhs_strat, DensityGrid};
use crate::generator::{
    adjoint_residual, apply_generator, apply_generator_ito, apply_generator_strat, strat_to_ito, Convention, SdeSpec,
};
use crate::geometry::{
    analytic, diffusion_tensor, divergence_vf, hessian, lie_derivative, quadrature_ibp_residual, tensor_ibp_residual,
    Chart, ChartPoint, FieldSpec, GridShape, Scalar,
};
use crate::jet::Jet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    /// Grid sizes `[n_theta, n_phi]`, coarse to fine.
    pub ladder: Vec<[usize; 2]>,
    /// Random points for pointwise identities.
    pub points: usize,
    pub seed: u64,
    /// Multiplies every absolute tolerance.
    pub tolerance_scale: f64,
    pub order_min: f64,
    pub order_max: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            ladder: vec![[32, 64], [64, 128], [128, 256]],
            points: 1000,
            seed: 1,
            tolerance_scale: 1.0,
            order_min: 1.8,
            order_max: 2.2,
        }
    }
}

impl CheckConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ladder.len() < 2 {
            return Err(Error::InvalidConfig(
                "refinement ladder needs at least two levels".into(),
            ));
        }
        if self.ladder.windows(2).any(|w| w[1][0] <= w[0][0] || w[1][1] <= w[0][1]) {
            return Err(Error::InvalidConfig(
                "refinement ladder must be strictly increasing".into(),
            ));
        }
        if self.points == 0 {
            return Err(Error::InvalidConfig("points must be positive".into()));
        }
        if !(self.tolerance_scale >= 0.0) || !(self.order_min <= self.order_max) {
            return Err(Error::InvalidConfig("bad tolerance settings".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub chart: String,
    /// Grid labels for refinement rows, empty for pointwise rows.
    pub levels: Vec<String>,
    pub errors: Vec<f64>,
    pub orders: Vec<f64>,
    /// Bound on the finest error.
    pub tolerance: f64,
    pub order_range: Option<[f64; 2]>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub rows: Vec<CheckRow>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> Vec<&CheckRow> {
        self.rows.iter().filter(|r| !r.passed).collect()
    }

    /// One row per check: `name,chart,finest_error,tolerance,min_order,max_order,passed`.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("name,chart,finest_error,tolerance,min_order,max_order,passed\n");
        for r in &self.rows {
            let (lo, hi) = order_span(&r.orders);
            let _ = writeln!(
                s,
                "{},{},{:.16e},{:.16e},{},{},{}",
                r.name,
                r.chart,
                r.errors.last().copied().unwrap_or(0.0),
                r.tolerance,
                fmt_opt(lo),
                fmt_opt(hi),
                r.passed
            );
        }
        s
    }

    pub fn table(&self) -> String {
        let mut s = format!(
            "{:<26} {:<7} {:>11} {:>10} {:>13}  result\n",
            "check", "chart", "error", "tol", "orders"
        );
        for r in &self.rows {
            let orders = if r.orders.is_empty() {
                "-".to_string()
            } else {
                r.orders.iter().map(|o| format!("{o:.2}")).collect::<Vec<_>>().join("/")
            };
            let _ = writeln!(
                s,
                "{:<26} {:<7} {:>11.3e} {:>10.1e} {:>13}  {}",
                r.name,
                r.chart,
                r.errors.last().copied().unwrap_or(0.0),
                r.tolerance,
                orders,
                if r.passed { "PASS" } else { "FAIL" }
            );
        }
        s
    }
}

fn order_span(o: &[f64]) -> (Option<f64>, Option<f64>) {
    if o.is_empty() {
        return (None, None);
    }
    (
        Some(o.iter().copied().fold(f64::INFINITY, f64::min)),
        Some(o.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
    )
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_default()
}

/// Observed orders `log2(e_i / e_{i+1}) / log2(h_i / h_{i+1})` along a ladder.
pub fn observed_orders(errors: &[f64], n_theta: &[usize]) -> Vec<f64> {
    errors
        .windows(2)
        .zip(n_theta.windows(2))
        .map(|(e, n)| (e[0] / e[1]).ln() / (n[1] as f64 / n[0] as f64).ln())
        .collect()
}

/// Generic Stratonovich spec with constant frame noise.
pub fn generic_spec(chart: Chart) -> SdeSpec {
    SdeSpec::frame_aligned(chart, Convention::Stratonovich, FieldSpec::constant(0.3, 0.2), 0.5, 0.8)
}

/// Noise fields built from rotation generators, smooth through the poles.
pub fn smooth_sigmas() -> Vec<FieldSpec> {
    vec![
        FieldSpec::analytic(|t, _| [Jet::constant(0.0), t.sin() * 0.7]),
        FieldSpec::analytic(|t, q| [q.sin() * -0.5, t.cos() * q.cos() * -0.5]),
    ]
}

pub fn smooth_drift() -> FieldSpec {
    FieldSpec::analytic(|t, q| [q.cos() * -0.3, t.cos() * q.sin() * 0.3])
}

/// Density used by the refinement rows.
pub fn test_density() -> Scalar {
    analytic(|t, q| t.cos() * 0.5 + 1.0 + t.sin() * q.cos() * 0.25)
}

pub fn test_function() -> Scalar {
    analytic(|t, q| t.sin() * q.cos())
}

fn function_family() -> Vec<Scalar> {
    vec![
        analytic(|t, _| t.cos()),
        analytic(|t, q| t.sin() * q.cos()),
        analytic(|t, q| (t.cos() * 2.0).exp() * (q * 2.0).sin()),
        analytic(|t, q| t.sin() * t.sin() * (q * 3.0).cos() + t.cos() * 0.3),
    ]
}

struct Suite<'a> {
    cfg: &'a CheckConfig,
    chart: Chart,
    rows: Vec<CheckRow>,
    points: Vec<ChartPoint>,
}

impl Suite<'_> {
    fn pointwise(&mut self, name: &str, tol: f64, err: f64) {
        let tolerance = tol * self.cfg.tolerance_scale;
        self.rows.push(CheckRow {
            name: name.into(),
            chart: self.chart.name().into(),
            levels: Vec::new(),
            errors: vec![err],
            orders: Vec::new(),
            tolerance,
            order_range: None,
            passed: err <= tolerance,
        });
    }

    /// Refinement row; `tol` bounds the finest error, `with_order` adds the order range.
    fn refined(&mut self, name: &str, tol: f64, with_order: bool, f: impl Fn(&GridShape) -> Result<f64>) -> Result<()> {
        let mut errors = Vec::new();
        let mut levels = Vec::new();
        for &[nt, np] in &self.cfg.ladder {
            let g = GridShape::new(self.chart, nt, np)?;
            errors.push(f(&g)?);
            levels.push(format!("{nt}x{np}"));
        }
        let nts: Vec<usize> = self.cfg.ladder.iter().map(|l| l[0]).collect();
        let orders = if with_order {
            observed_orders(&errors, &nts)
        } else {
            Vec::new()
        };
        let tolerance = tol * self.cfg.tolerance_scale;
        let range = [self.cfg.order_min, self.cfg.order_max];
        let ok_orders = orders.iter().all(|o| *o >= range[0] && *o <= range[1]);
        let ok_err = errors.last().is_some_and(|e| *e <= tolerance);
        self.rows.push(CheckRow {
            name: name.into(),
            chart: self.chart.name().into(),
            levels,
            errors,
            orders,
            tolerance,
            order_range: with_order.then_some(range),
            passed: ok_orders && ok_err,
        });
        Ok(())
    }

    fn max_over(&self, f: impl Fn(ChartPoint) -> Result<f64>) -> Result<f64> {
        let mut m: f64 = 0.0;
        for &p in &self.points {
            m = m.max(f(p)?.abs());
        }
        Ok(m)
    }
}

fn random_points(chart: Chart, n: usize, seed: u64) -> Vec<ChartPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = match chart {
        Chart::Sphere { .. } => (0.1, std::f64::consts::PI - 0.1),
        Chart::FlatTorus => (0.0, std::f64::consts::TAU),
    };
    (0..n)
        .map(|_| ChartPoint::new(rng.random_range(lo..hi), rng.random_range(0.0..std::f64::consts::TAU)))
        .collect()
}

/// Run every identity that applies to `chart` across the configured ladder.
pub fn run_identity_suite(cfg: &CheckConfig, chart: Chart) -> Result<CheckReport> {
    cfg.validate()?;
    let mut s = Suite {
        cfg,
        chart,
        rows: Vec::new(),
        points: random_points(chart, cfg.points, cfg.seed),
    };
    match chart {
        Chart::Sphere { .. } => sphere_rows(&mut s)?,
        Chart::FlatTorus => torus_rows(&mut s)?,
    }
    Ok(CheckReport { rows: s.rows })
}

fn sphere_rows(s: &mut Suite<'_>) -> Result<()> {
    let chart = s.chart;
    let mut bs = SdeSpec::brownian_strat();
    bs.chart = chart;
    let mut bi = SdeSpec::brownian_ito();
    bi.chart = chart;
    let eig: Vec<(Scalar, f64)> = vec![
        (analytic(|_, _| Jet::constant(1.0)), 0.0),
        (analytic(|t, _| t.cos()), -1.0),
        (analytic(|t, q| t.sin() * q.cos()), -1.0),
        (analytic(|t, q| t.sin() * q.sin()), -1.0),
    ];
    let e = s.max_over(|p| {
        let mut m: f64 = 0.0;
        for (f, l) in &eig {
            let want = l * f.value(p);
            m = m.max((apply_generator(&bs, f.as_ref(), p)? - want).abs());
            m = m.max((apply_generator(&bi, f.as_ref(), p)? - want).abs());
        }
        Ok(m)
    })?;
    s.pointwise("brownian_reduction", 1e-10, e);

    let specs = [
        generic_spec(chart),
        SdeSpec::stratonovich(chart, smooth_drift(), smooth_sigmas()),
    ];
    let fam = function_family();
    let mut e: f64 = 0.0;
    for spec in &specs {
        let ito = strat_to_ito(spec);
        e = e.max(s.max_over(|p| {
            let mut m: f64 = 0.0;
            for f in &fam {
                let a = apply_generator_strat(spec, f.as_ref(), p)?;
                let b = apply_generator_ito(&ito, f.as_ref(), p)?;
                m = m.max((a - b).abs());
            }
            Ok(m)
        })?);
    }
    s.pointwise("generator_equivalence", 1e-10, e);

    let sig = smooth_sigmas();
    let e = s.max_over(|p| {
        let d = diffusion_tensor(&sig, p);
        let mut m: f64 = 0.0;
        for f in &fam {
            let h = hessian(&chart, f.as_ref(), p)?;
            let by_fields: f64 = sig
                .iter()
                .map(|x| {
                    let v = x.components(p);
                    v[0] * (h[0][0] * v[0] + h[0][1] * v[1]) + v[1] * (h[1][0] * v[0] + h[1][1] * v[1])
                })
                .sum();
            m = m.max((by_fields - d.contract(&h)).abs());
        }
        Ok(m)
    })?;
    s.pointwise("diffusion_hessian", 1e-12, e);

    let p = test_density();
    let mut e: f64 = 0.0;
    for spec in &specs {
        let ito = strat_to_ito(spec);
        e = e.max(s.max_over(|c| Ok(fp_rhs_pointwise(spec, p.as_ref(), c)? - fp_rhs_pointwise(&ito, p.as_ref(), c)?))?);
    }
    s.pointwise("fp_strat_ito_pointwise", 1e-9, e);

    let one = analytic(|_, _| Jet::constant(1.0));
    s.refined("ibp_trivial", 1e-12, false, |g| {
        quadrature_ibp_residual(g, &one, &one, &FieldSpec::frame_vector(1))
    })?;
    let q = test_function();
    let qp = analytic(|t, q| t.cos() + t.sin() * q.cos());
    let p0 = analytic(|t, _| t.cos() * 0.5 + 1.0);
    s.refined("ibp_frame_field", 1e-10, false, |g| {
        quadrature_ibp_residual(g, &p0, &q, &FieldSpec::frame_vector(0))
    })?;
    let grad_z = FieldSpec::analytic(|t, _| [-t.sin(), Jet::constant(0.0)]);
    s.refined("ibp_functions", 1e-3, true, |g| {
        quadrature_ibp_residual(g, &p, &qp, &grad_z)
    })?;
    s.refined("tensor_ibp", 1e-3, true, |g| tensor_ibp_residual(g, &p, &sig, &qp))?;
    let gspec = generic_spec(chart);
    s.refined("adjoint", 1e-4, true, |g| adjoint_residual(g, &gspec, &p, &q))?;
    let gito = strat_to_ito(&gspec);
    s.refined("fp_strat_ito_grid", 1e-2, true, |g| {
        let d = DensityGrid::from_fn(*g, |c| p.value(c));
        let a = fp_rhs_strat(&d, &gspec)?;
        let b = fp_rhs_ito(&d, &gito)?;
        a.l1_distance(&b)
    })?;
    s.refined("flux_sum", 1e-12, false, |g| {
        let d = DensityGrid::from_fn(*g, |c| p.value(c));
        let mut m: f64 = 0.0;
        for spec in &specs {
            m = m.max(fp_rhs(&d, spec)?.mass().abs());
        }
        Ok(m)
    })?;
    Ok(())
}

/// Euclidean `X . grad f + 1/2 D : grad grad f` from jets, with the chart
/// coordinates read as Cartesian ones.
fn euclidean_generator(x: [f64; 2], d: [[f64; 2]; 2], f: &Jet) -> f64 {
    x[0] * f.d[0] + x[1] * f.d[1] + 0.5 * (d[0][0] * f.dd[0][0] + 2.0 * d[0][1] * f.dd[0][1] + d[1][1] * f.dd[1][1])
}

fn torus_rows(s: &mut Suite<'_>) -> Result<()> {
    let chart = s.chart;
    let fam = function_family();
    let (x, st, sp) = ([0.3, -0.2], 0.5, 0.8);
    let d = [[st * st, 0.0], [0.0, sp * sp]];
    let specs = [
        SdeSpec::frame_aligned(chart, Convention::Ito, FieldSpec::constant(x[0], x[1]), st, sp),
        SdeSpec::frame_aligned(chart, Convention::Stratonovich, FieldSpec::constant(x[0], x[1]), st, sp),
    ];
    let e = s.max_over(|p| {
        let mut m: f64 = 0.0;
        for f in &fam {
            let want = euclidean_generator(x, d, &f.jet(p));
            for spec in &specs {
                m = m.max((apply_generator(spec, f.as_ref(), p)? - want).abs());
            }
        }
        Ok(m)
    })?;
    s.pointwise("torus_generator_euclidean", 1e-12, e);

    let v = FieldSpec::analytic(|t, q| [t.sin() * q.cos() + 0.2, (t + q).cos()]);
    let e = s.max_over(|p| {
        let mut m: f64 = 0.0;
        let [vt, vp] = v.jet(p);
        m = m.max((divergence_vf(&chart, &v, p)? - (vt.d[0] + vp.d[1])).abs());
        for f in &fam {
            let j = f.jet(p);
            let vv = [vt.v, vp.v];
            m = m.max((lie_derivative(&chart, f.as_ref(), &v, p)? - (vv[0] * j.d[0] + vv[1] * j.d[1])).abs());
            let h = hessian(&chart, f.as_ref(), p)?;
            m = m.max(
                (h[0][1] - j.dd[0][1])
                    .abs()
                    .max((h[0][0] - j.dd[0][0]).abs())
                    .max((h[1][1] - j.dd[1][1]).abs()),
            );
        }
        Ok(m)
    })?;
    s.pointwise("torus_operators_euclidean", 1e-12, e);

    let p = analytic(|t, q| t.sin() * q.cos() * 0.5 + 1.0 + (t * 2.0).cos() * 0.2);
    let q = analytic(|t, q| (t + q * 2.0).sin());
    s.refined("torus_ibp_euclidean", 1e-12, false, |g| {
        let r = quadrature_ibp_residual(g, &p, &q, &v)?;
        let vals = g.sample(|c| {
            let (pj, qj) = (p.jet(c), q.jet(c));
            let [vt, vp] = v.jet(c);
            let div_pv = (pj * vt).d[0] + (pj * vp).d[1];
            pj.v * (vt.v * qj.d[0] + vp.v * qj.d[1]) + div_pv * qj.v
        });
        Ok((r - g.integrate(&vals).abs()).abs())
    })?;

    let ito = &specs[0];
    s.refined("torus_adjoint_euclidean", 1e-12, false, |g| {
        let r = adjoint_residual(g, ito, &p, &q)?;
        Ok((r - euclidean_adjoint(g, x, d, &p, &q)).abs())
    })?;

    s.refined("torus_fp_order", 5e-3, true, |g| {
        let dens = DensityGrid::from_fn(*g, |c| p.value(c));
        let r = fp_rhs(&dens, ito)?;
        let exact = DensityGrid::from_fn(*g, |c| {
            let j = p.jet(c);
            -(x[0] * j.d[0] + x[1] * j.d[1]) + 0.5 * (d[0][0] * j.dd[0][0] + d[1][1] * j.dd[1][1])
        });
        r.linf_distance(&exact)
    })?;
    Ok(())
}

/// `|<p, A q> - <L_h p, q>|` with `L_h` the centred-difference Euclidean
/// Fokker-Planck operator for constant drift and diagonal diffusion.
fn euclidean_adjoint(g: &GridShape, x: [f64; 2], d: [[f64; 2]; 2], p: &Scalar, q: &Scalar) -> f64 {
    let (nt, np) = (g.n_theta, g.n_phi);
    let (ht, hp) = (g.d_theta(), g.d_phi());
    let pv = g.sample(|c| p.value(c));
    let at = |j: isize, k: isize| pv[g.index(j.rem_euclid(nt as isize) as usize, k.rem_euclid(np as isize) as usize)];
    let mut vals = Vec::with_capacity(g.len());
    for j in 0..nt as isize {
        for k in 0..np as isize {
            let c = g.center(j as usize, k as usize);
            let dt = (at(j + 1, k) - at(j - 1, k)) / (2.0 * ht);
            let dp = (at(j, k + 1) - at(j, k - 1)) / (2.0 * hp);
            let dtt = (at(j + 1, k) - 2.0 * at(j, k) + at(j - 1, k)) / (ht * ht);
            let dpp = (at(j, k + 1) - 2.0 * at(j, k) + at(j, k - 1)) / (hp * hp);
            let lp = -(x[0] * dt + x[1] * dp) + 0.5 * (d[0][0] * dtt + d[1][1] * dpp);
            let aq = euclidean_generator(x, d, &q.jet(c));
            vals.push(at(j, k) * aq - lp * q.value(c));
        }
    }
    g.integrate(&vals).abs()
}
