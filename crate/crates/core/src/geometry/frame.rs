//! Orthonormal frame and frame connection at a point, carried as jets.
//!
//! All operators act on frame components. A derivative along `E_a` is
//! `E_a[f] = F[a][i] * d_i f`, and the connection enters through
//! `omega[a][b][c]`, the `E_c` component of `nabla_{E_a} E_b`, which is
//! assembled from the Christoffel symbols and the derivatives of the frame
//! coefficients.

use crate::geometry::chart::{Chart, ChartPoint};
use crate::jet::Jet;

type M2 = [[Jet; 2]; 2];
type T3 = [[[Jet; 2]; 2]; 2];

fn zero() -> Jet {
    Jet::constant(0.0)
}

fn inverse(m: &M2) -> M2 {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let r = det.recip();
    [[m[1][1] * r, -(m[0][1] * r)], [-(m[1][0] * r), m[0][0] * r]]
}

#[derive(Clone, Debug)]
pub struct LocalFrame {
    pub metric: M2,
    pub christoffel: T3,
    /// `frame[a][i]`: coordinate components of `E_a`.
    pub frame: M2,
    /// `coframe[a][i]`: coordinate components of the dual covector `E^a`.
    pub coframe: M2,
    /// `omega[a][b][c]`: `E_c` component of `nabla_{E_a} E_b`.
    pub omega: T3,
}

impl LocalFrame {
    pub fn at(chart: &Chart, p: ChartPoint) -> Self {
        let g = chart.metric_jet(p);
        let ginv = inverse(&g);

        let mut christoffel = [[[zero(); 2]; 2]; 2];
        for (k, ck) in christoffel.iter_mut().enumerate() {
            for (i, ci) in ck.iter_mut().enumerate() {
                for (j, e) in ci.iter_mut().enumerate() {
                    *e = (0..2)
                        .map(|l| ginv[k][l] * (g[l][j].diff(i) + g[l][i].diff(j) - g[i][j].diff(l)))
                        .sum::<Jet>()
                        * 0.5;
                }
            }
        }

        // Gram-Schmidt on the coordinate basis.
        let inner = |u: &[Jet; 2], v: &[Jet; 2]| -> Jet {
            let mut s = zero();
            for i in 0..2 {
                for j in 0..2 {
                    s += g[i][j] * u[i] * v[j];
                }
            }
            s
        };
        let d0 = [Jet::constant(1.0), zero()];
        let n0 = inner(&d0, &d0).sqrt().recip();
        let e0 = [d0[0] * n0, d0[1] * n0];
        let d1 = [zero(), Jet::constant(1.0)];
        let proj = inner(&d1, &e0);
        let u1 = [d1[0] - proj * e0[0], d1[1] - proj * e0[1]];
        let n1 = inner(&u1, &u1).sqrt().recip();
        let e1 = [u1[0] * n1, u1[1] * n1];
        let frame = [e0, e1];

        let ft = [[frame[0][0], frame[1][0]], [frame[0][1], frame[1][1]]];
        let coframe = inverse(&ft);

        let mut omega = [[[zero(); 2]; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                // Coordinate components of nabla_{E_a} E_b.
                let mut w = [zero(); 2];
                for (k, wk) in w.iter_mut().enumerate() {
                    for i in 0..2 {
                        *wk += frame[a][i] * frame[b][k].diff(i);
                        for j in 0..2 {
                            *wk += frame[a][i] * frame[b][j] * christoffel[k][i][j];
                        }
                    }
                }
                for c in 0..2 {
                    omega[a][b][c] = coframe[c][0] * w[0] + coframe[c][1] * w[1];
                }
            }
        }

        LocalFrame {
            metric: g,
            christoffel,
            frame,
            coframe,
            omega,
        }
    }

    /// `E_a[f]`.
    pub fn dir(&self, a: usize, f: &Jet) -> Jet {
        self.frame[a][0] * f.diff(0) + self.frame[a][1] * f.diff(1)
    }

    /// `X[f]` for a field given by frame components.
    pub fn lie(&self, x: &[Jet; 2], f: &Jet) -> Jet {
        x[0] * self.dir(0, f) + x[1] * self.dir(1, f)
    }

    /// Frame components of `nabla_X Y`.
    pub fn cov(&self, x: &[Jet; 2], y: &[Jet; 2]) -> [Jet; 2] {
        let mut out = [zero(); 2];
        for (c, oc) in out.iter_mut().enumerate() {
            *oc = self.lie(x, &y[c]);
            for a in 0..2 {
                for b in 0..2 {
                    *oc += x[a] * y[b] * self.omega[a][b][c];
                }
            }
        }
        out
    }

    /// Divergence as the trace of `Y -> nabla_Y X`.
    pub fn div(&self, x: &[Jet; 2]) -> Jet {
        let mut s = self.dir(0, &x[0]) + self.dir(1, &x[1]);
        for a in 0..2 {
            for b in 0..2 {
                s += x[b] * self.omega[a][b][a];
            }
        }
        s
    }

    /// Frame components `Hess_f(E_a, E_b) = E_a[E_b f] - (nabla_{E_a} E_b)[f]`,
    /// symmetrised.
    pub fn hess(&self, f: &Jet) -> [[f64; 2]; 2] {
        let df = [self.dir(0, f), self.dir(1, f)];
        let mut h = [[0.0; 2]; 2];
        for (a, row) in h.iter_mut().enumerate() {
            for (b, e) in row.iter_mut().enumerate() {
                let mut v = self.dir(a, &df[b]).v;
                for c in 0..2 {
                    v -= self.omega[a][b][c].v * df[c].v;
                }
                *e = v;
            }
        }
        let off = 0.5 * (h[0][1] + h[1][0]);
        h[0][1] = off;
        h[1][0] = off;
        h
    }

    /// Divergence of a `(2,0)` tensor given by frame components
    /// `t[a][b]`, contracting the last slot.
    pub fn div_tensor(&self, t: &M2) -> [Jet; 2] {
        let mut out = [zero(); 2];
        for (x, ox) in out.iter_mut().enumerate() {
            for c in 0..2 {
                *ox += self.dir(c, &t[x][c]);
                for d in 0..2 {
                    *ox += self.omega[c][d][x] * t[d][c];
                    *ox += self.omega[c][d][c] * t[x][d];
                }
            }
        }
        out
    }

    /// Coordinate components of a vector given in the frame.
    pub fn to_coordinates(&self, v: [f64; 2]) -> [f64; 2] {
        [
            v[0] * self.frame[0][0].v + v[1] * self.frame[1][0].v,
            v[0] * self.frame[0][1].v + v[1] * self.frame[1][1].v,
        ]
    }
}
