//! Fokker-Planck right-hand sides.
//!
//! Grid forms are finite-volume: cell `j, k` gains the net flux through its
//! four faces, so the weighted sum of any right-hand side telescopes to
//! zero. Theta fluxes carry the face length `a(theta_f)`; on the sphere the
//! pole faces carry none.
//!
//! With constant, frame-aligned noise the two conventions are differenced
//! as their closed forms. Stratonovich:
//!
//! `a J^theta = a X^theta p - 1/2 s_t d_theta(a p)`,
//!
//! Itô:
//!
//! `a J^theta = a X~^theta p - 1/2 s_t a d_theta p - 1/2 a' p (s_t - s_p)`,
//!
//! and in both `J^phi = X^phi p - s_p / (2a) d_phi p`, where `s_t, s_p` are
//! the diagonal entries of `D`. Anything else goes through the generic flux
//! `J = p u - 1/2 D grad p` with `u = X - 1/2 sum_i (div sigma_i) sigma_i`
//! (Stratonovich) or `u = X~ - 1/2 div D` (Itô).

use crate::error::{Error, Result};
use crate::fpe::density::DensityGrid;
use crate::generator::{Convention, SdeSpec};
use crate::geometry::ops::weighted_tensor_jets;
use crate::geometry::{ChartPoint, GridShape, LocalFrame, ScalarField};
use crate::jet::Jet;

#[derive(Clone, Debug)]
struct FastOp {
    convention: Convention,
    s_theta: f64,
    s_phi: f64,
    /// Drift theta component at theta faces, `(n_theta + 1) x n_phi`.
    u_theta: Vec<f64>,
    /// Drift phi component at phi faces `(theta_j, phi_k + dphi/2)`.
    u_phi: Vec<f64>,
}

#[derive(Clone, Debug)]
struct GenericOp {
    /// Effective velocity and `D` at theta faces: `[u_t, u_p, d_tt, d_tp, d_pp]`.
    theta_faces: Vec<[f64; 5]>,
    phi_faces: Vec<[f64; 5]>,
}

#[derive(Clone, Debug)]
enum Kind {
    Fast(FastOp),
    Generic(GenericOp),
}

/// Cached face coefficients of the grid Fokker-Planck operator of one spec.
#[derive(Clone, Debug)]
pub struct FpOperator {
    shape: GridShape,
    kind: Kind,
    /// `a` and `a'` at theta faces.
    a_face: Vec<f64>,
    da_face: Vec<f64>,
    /// `a` at cell centres.
    a_cell: Vec<f64>,
}

impl FpOperator {
    pub fn new(shape: GridShape, spec: &SdeSpec) -> Result<Self> {
        let chart = shape.chart();
        if std::mem::discriminant(&chart) != std::mem::discriminant(&spec.chart) {
            return Err(Error::InvalidConfig(format!(
                "spec chart {} does not match grid chart {}",
                spec.chart.name(),
                chart.name()
            )));
        }
        let (nt, np) = (shape.n_theta, shape.n_phi);
        let a_face: Vec<f64> = (0..=nt).map(|f| chart.warp_values(shape.theta_face(f))[0]).collect();
        let da_face: Vec<f64> = (0..=nt).map(|f| chart.warp_values(shape.theta_face(f))[1]).collect();
        let a_cell: Vec<f64> = (0..nt).map(|j| chart.warp_values(shape.theta(j))[0]).collect();
        let pole = !chart.theta_periodic();
        let face_live = |f: usize| !(pole && (f == 0 || f == nt));

        let kind = match spec.constant_diagonal() {
            Some([s_theta, s_phi]) => {
                let mut u_theta = vec![0.0; (nt + 1) * np];
                for f in (0..=nt).filter(|&f| face_live(f)) {
                    for k in 0..np {
                        let c = ChartPoint::new(shape.theta_face(f), shape.phi(k));
                        u_theta[f * np + k] = spec.drift.components(c)[0];
                    }
                }
                let mut u_phi = vec![0.0; nt * np];
                for j in 0..nt {
                    for k in 0..np {
                        let c = ChartPoint::new(shape.theta(j), shape.phi_face(k));
                        u_phi[j * np + k] = spec.drift.components(c)[1];
                    }
                }
                Kind::Fast(FastOp {
                    convention: spec.convention,
                    s_theta,
                    s_phi,
                    u_theta,
                    u_phi,
                })
            }
            None => {
                let coeffs = |c: ChartPoint| -> [f64; 5] {
                    let fr = LocalFrame::at(&chart, c);
                    let x = spec.drift.components(c);
                    let sj: Vec<[Jet; 2]> = spec.sigmas.iter().map(|s| s.jet(c)).collect();
                    let corr = match spec.convention {
                        Convention::Stratonovich => {
                            let mut w = [0.0; 2];
                            for s in &sj {
                                let d = fr.div(s).v;
                                w[0] += d * s[0].v;
                                w[1] += d * s[1].v;
                            }
                            w
                        }
                        Convention::Ito => fr
                            .div_tensor(&weighted_tensor_jets(Jet::constant(1.0), &sj))
                            .map(|j| j.v),
                    };
                    let d = spec.diffusion(c).d;
                    [x[0] - 0.5 * corr[0], x[1] - 0.5 * corr[1], d[0][0], d[0][1], d[1][1]]
                };
                let mut theta_faces = vec![[0.0; 5]; (nt + 1) * np];
                for f in (0..=nt).filter(|&f| face_live(f)) {
                    for k in 0..np {
                        theta_faces[f * np + k] = coeffs(ChartPoint::new(shape.theta_face(f), shape.phi(k)));
                    }
                }
                let mut phi_faces = vec![[0.0; 5]; nt * np];
                for j in 0..nt {
                    for k in 0..np {
                        phi_faces[j * np + k] = coeffs(ChartPoint::new(shape.theta(j), shape.phi_face(k)));
                    }
                }
                Kind::Generic(GenericOp { theta_faces, phi_faces })
            }
        };
        Ok(FpOperator {
            shape,
            kind,
            a_face,
            da_face,
            a_cell,
        })
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    /// Constant phi-phi diffusion coefficient when the operator has one.
    /// The phi-diffusion part of the operator is then
    /// `s_p / (2 a_j^2 dphi^2) (p_{k+1} - 2 p_k + p_{k-1})` in every row.
    pub fn phi_diffusion(&self) -> Option<f64> {
        match &self.kind {
            Kind::Fast(op) => Some(op.s_phi),
            Kind::Generic(_) => None,
        }
    }

    pub fn cell_warp(&self) -> &[f64] {
        &self.a_cell
    }

    /// Largest stable explicit step, ignoring phi diffusion if
    /// `phi_diffusion_exact`.
    pub fn stability_limit(&self, phi_diffusion_exact: bool) -> f64 {
        let (nt, np) = (self.shape.n_theta, self.shape.n_phi);
        let (h, dp) = (self.shape.d_theta(), self.shape.d_phi());
        let pole = !self.shape.chart().theta_periodic();
        let mut limit = f64::INFINITY;
        let mut bound = |x: f64| {
            if x > 0.0 && x.is_finite() {
                limit = limit.min(x);
            }
        };
        for f in 0..=nt {
            if pole && (f == 0 || f == nt) {
                continue;
            }
            let curv = (self.da_face[f] / self.a_face[f]).abs();
            for k in 0..np {
                let (speed, dtt) = match &self.kind {
                    Kind::Fast(op) => {
                        let extra = match op.convention {
                            Convention::Stratonovich => 0.5 * curv * op.s_theta,
                            Convention::Ito => 0.5 * curv * (op.s_theta - op.s_phi).abs(),
                        };
                        (op.u_theta[f * np + k].abs() + extra, op.s_theta)
                    }
                    Kind::Generic(op) => {
                        let c = op.theta_faces[f * np + k];
                        (c[0].abs(), c[2] + c[3].abs())
                    }
                };
                bound(h / speed);
                bound(h * h / dtt);
            }
        }
        for j in 0..nt {
            let arc = self.a_cell[j] * dp;
            for k in 0..np {
                let (speed, dpp) = match &self.kind {
                    Kind::Fast(op) => (op.u_phi[j * np + k].abs(), op.s_phi),
                    Kind::Generic(op) => {
                        let c = op.phi_faces[j * np + k];
                        (c[1].abs(), c[4] + c[3].abs())
                    }
                };
                bound(arc / speed);
                if !phi_diffusion_exact {
                    bound(arc * arc / dpp);
                }
            }
        }
        limit
    }

    /// Full right-hand side.
    pub fn apply(&self, p: &[f64], out: &mut [f64]) {
        self.apply_split(p, out, true);
    }

    /// Right-hand side, optionally leaving out the phi-diffusion part
    /// reported by [`FpOperator::phi_diffusion`].
    pub fn apply_split(&self, p: &[f64], out: &mut [f64], with_phi_diffusion: bool) {
        match &self.kind {
            Kind::Fast(op) => self.apply_fast(op, p, out, with_phi_diffusion),
            Kind::Generic(op) => self.apply_generic(op, p, out),
        }
    }

    fn theta_neighbour(&self, j: usize) -> Option<usize> {
        match (j, self.shape.chart().theta_periodic()) {
            (0, true) => Some(self.shape.n_theta - 1),
            (0, false) => None,
            _ => Some(j - 1),
        }
    }

    fn apply_fast(&self, op: &FastOp, p: &[f64], out: &mut [f64], with_phi_diffusion: bool) {
        let (nt, np) = (self.shape.n_theta, self.shape.n_phi);
        let (h, dp) = (self.shape.d_theta(), self.shape.d_phi());
        let mut flux = vec![0.0; (nt + 1) * np];
        for f in 0..nt {
            let Some(jm) = self.theta_neighbour(f) else {
                continue;
            };
            let (af, daf) = (self.a_face[f], self.da_face[f]);
            let (am, aj) = (self.a_cell[jm], self.a_cell[f]);
            let rm = &p[jm * np..(jm + 1) * np];
            let rj = &p[f * np..(f + 1) * np];
            let u = &op.u_theta[f * np..(f + 1) * np];
            let fl = &mut flux[f * np..(f + 1) * np];
            match op.convention {
                Convention::Stratonovich => {
                    let c = 0.5 * op.s_theta / h;
                    for k in 0..np {
                        let pb = 0.5 * (rm[k] + rj[k]);
                        fl[k] = af * u[k] * pb - c * (aj * rj[k] - am * rm[k]);
                    }
                }
                Convention::Ito => {
                    let c = 0.5 * op.s_theta * af / h;
                    let g = 0.5 * daf * (op.s_theta - op.s_phi);
                    for k in 0..np {
                        let pb = 0.5 * (rm[k] + rj[k]);
                        fl[k] = (af * u[k] - g) * pb - c * (rj[k] - rm[k]);
                    }
                }
            }
        }
        if self.shape.chart().theta_periodic() {
            let (head, tail) = flux.split_at_mut(nt * np);
            tail.copy_from_slice(&head[..np]);
        }
        let mut g = vec![0.0; np];
        for j in 0..nt {
            let aj = self.a_cell[j];
            let row = &p[j * np..(j + 1) * np];
            let u = &op.u_phi[j * np..(j + 1) * np];
            let c = if with_phi_diffusion {
                0.5 * op.s_phi / (aj * dp)
            } else {
                0.0
            };
            for k in 0..np {
                let kp = if k + 1 == np { 0 } else { k + 1 };
                g[k] = u[k] * 0.5 * (row[k] + row[kp]) - c * (row[kp] - row[k]);
            }
            let (ith, iph) = (1.0 / (aj * h), 1.0 / (aj * dp));
            let jlo = &flux[j * np..(j + 1) * np];
            let jhi = &flux[(j + 1) * np..(j + 2) * np];
            let o = &mut out[j * np..(j + 1) * np];
            for k in 0..np {
                let km = if k == 0 { np - 1 } else { k - 1 };
                o[k] = -(jhi[k] - jlo[k]) * ith - (g[k] - g[km]) * iph;
            }
        }
    }

    /// Centred theta derivative at a cell, continuing across the poles.
    fn d_theta_cell(&self, p: &[f64], j: usize, k: usize) -> f64 {
        let (nt, np) = (self.shape.n_theta, self.shape.n_phi);
        let h = self.shape.d_theta();
        let periodic = self.shape.chart().theta_periodic();
        let across = |k: usize| (k + np / 2) % np;
        let below = match (j, periodic) {
            (0, true) => Some(p[(nt - 1) * np + k]),
            (0, false) if np % 2 == 0 => Some(p[across(k)]),
            (0, false) => None,
            _ => Some(p[(j - 1) * np + k]),
        };
        let above = match (j + 1 == nt, periodic) {
            (true, true) => Some(p[k]),
            (true, false) if np % 2 == 0 => Some(p[(nt - 1) * np + across(k)]),
            (true, false) => None,
            _ => Some(p[(j + 1) * np + k]),
        };
        let c = p[j * np + k];
        match (below, above) {
            (Some(b), Some(a)) => (a - b) / (2.0 * h),
            (None, Some(a)) => (a - c) / h,
            (Some(b), None) => (c - b) / h,
            (None, None) => 0.0,
        }
    }

    fn apply_generic(&self, op: &GenericOp, p: &[f64], out: &mut [f64]) {
        let (nt, np) = (self.shape.n_theta, self.shape.n_phi);
        let (h, dp) = (self.shape.d_theta(), self.shape.d_phi());
        let dphi_cell = |j: usize, k: usize| {
            let kp = (k + 1) % np;
            let km = (k + np - 1) % np;
            (p[j * np + kp] - p[j * np + km]) / (2.0 * dp)
        };
        let mut flux = vec![0.0; (nt + 1) * np];
        for f in 0..nt {
            let Some(jm) = self.theta_neighbour(f) else {
                continue;
            };
            let af = self.a_face[f];
            for k in 0..np {
                let c = op.theta_faces[f * np + k];
                let (pm, pj) = (p[jm * np + k], p[f * np + k]);
                let e_t = (pj - pm) / h;
                let e_p = 0.5 * (dphi_cell(jm, k) + dphi_cell(f, k)) / af;
                let pb = 0.5 * (pm + pj);
                flux[f * np + k] = af * (pb * c[0] - 0.5 * (c[2] * e_t + c[3] * e_p));
            }
        }
        if self.shape.chart().theta_periodic() {
            let (head, tail) = flux.split_at_mut(nt * np);
            tail.copy_from_slice(&head[..np]);
        }
        let mut g = vec![0.0; np];
        for j in 0..nt {
            let aj = self.a_cell[j];
            for (k, gk) in g.iter_mut().enumerate() {
                let kp = (k + 1) % np;
                let c = op.phi_faces[j * np + k];
                let (p0, p1) = (p[j * np + k], p[j * np + kp]);
                let e_p = (p1 - p0) / (aj * dp);
                let e_t = 0.5 * (self.d_theta_cell(p, j, k) + self.d_theta_cell(p, j, kp));
                *gk = 0.5 * (p0 + p1) * c[1] - 0.5 * (c[3] * e_t + c[4] * e_p);
            }
            for k in 0..np {
                let km = (k + np - 1) % np;
                out[j * np + k] = -(flux[(j + 1) * np + k] - flux[j * np + k]) / (aj * h) - (g[k] - g[km]) / (aj * dp);
            }
        }
    }
}

/// Grid right-hand side for the spec's own convention.
pub fn fp_rhs(p: &DensityGrid, spec: &SdeSpec) -> Result<DensityGrid> {
    let op = FpOperator::new(p.shape, spec)?;
    let mut out = DensityGrid::zeros(p.shape);
    op.apply(&p.values, &mut out.values);
    Ok(out)
}

/// Grid right-hand side of the Stratonovich Fokker-Planck equation.
pub fn fp_rhs_strat(p: &DensityGrid, spec: &SdeSpec) -> Result<DensityGrid> {
    spec.expect(Convention::Stratonovich)?;
    fp_rhs(p, spec)
}

/// Grid right-hand side of the Itô Fokker-Planck equation.
pub fn fp_rhs_ito(p: &DensityGrid, spec: &SdeSpec) -> Result<DensityGrid> {
    spec.expect(Convention::Ito)?;
    fp_rhs(p, spec)
}

/// Intrinsic right-hand side at a point from exact jets of `p`:
/// `-div(p X) + 1/2 sum_i div(div(p sigma_i) sigma_i)` or
/// `-div(p X~) + 1/2 div(div(p D))`.
pub fn fp_rhs_pointwise(spec: &SdeSpec, p: &dyn ScalarField, at: ChartPoint) -> Result<f64> {
    spec.chart.check(at)?;
    let fr = LocalFrame::at(&spec.chart, at);
    let pj = p.jet(at);
    let x = spec.drift.jet(at);
    let mut out = -fr.div(&[pj * x[0], pj * x[1]]).v;
    let sj: Vec<[Jet; 2]> = spec.sigmas.iter().map(|s| s.jet(at)).collect();
    match spec.convention {
        Convention::Stratonovich => {
            for s in &sj {
                let inner = fr.div(&[pj * s[0], pj * s[1]]);
                out += 0.5 * fr.div(&[inner * s[0], inner * s[1]]).v;
            }
        }
        Convention::Ito => {
            let v = fr.div_tensor(&weighted_tensor_jets(pj, &sj));
            out += 0.5 * fr.div(&v).v;
        }
    }
    Ok(out)
}

/// Closed-form right-hand side for constant, frame-aligned noise on a
/// warped chart, evaluated from exact jets of `p` and the drift.
pub fn fp_rhs_box(spec: &SdeSpec, p: &dyn ScalarField, at: ChartPoint) -> Result<f64> {
    spec.chart.check(at)?;
    let [st, sp] = spec
        .constant_diagonal()
        .ok_or_else(|| Error::InvalidConfig("closed form needs constant, frame-aligned noise".into()))?;
    let pj = p.jet(at);
    let a = spec.chart.warp(Jet::var(at.theta, 0));
    let da = a.diff(0);
    let x = spec.drift.jet(at);
    let drift = -((pj * a * x[0]).d[0] + (pj * x[1]).d[1]) / a.v;
    let diff = match spec.convention {
        Convention::Stratonovich => st / (2.0 * a.v) * (pj * a).dd[0][0] + sp / (2.0 * a.v * a.v) * pj.dd[1][1],
        Convention::Ito => {
            let pa = (pj * da).d[0];
            st / (2.0 * a.v) * ((a * pj.diff(0)).d[0] + pa) + sp / (2.0 * a.v) * (pj.dd[1][1] / a.v - pa)
        }
    };
    Ok(drift + diff)
}
