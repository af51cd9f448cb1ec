//! Second-order forward-mode jets in the two chart coordinates.
//!
//! A [`Jet`] carries a value together with its gradient and Hessian with
//! respect to `(theta, phi)`. Analytic fields are written as closures over
//! jets, so every operator that needs partial derivatives gets them exactly
//! instead of through finite differences.
//!
//! [`Jet::diff`] differentiates a jet once. The result knows its value and
//! gradient but not its Hessian, which is set to `NaN` so that accidental use
//! of an unavailable order shows up immediately.

use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d: [f64; 2],
    pub dd: [[f64; 2]; 2],
}

impl Jet {
    pub const fn constant(v: f64) -> Self {
        Jet {
            v,
            d: [0.0; 2],
            dd: [[0.0; 2]; 2],
        }
    }

    /// Independent variable number `axis` (0 = theta, 1 = phi) with value `v`.
    pub fn var(v: f64, axis: usize) -> Self {
        let mut d = [0.0; 2];
        d[axis] = 1.0;
        Jet {
            v,
            d,
            dd: [[0.0; 2]; 2],
        }
    }

    /// The coordinate pair `(theta, phi)` as seed jets.
    pub fn coords(theta: f64, phi: f64) -> (Jet, Jet) {
        (Jet::var(theta, 0), Jet::var(phi, 1))
    }

    /// Partial derivative along `axis`. The Hessian of the result is unknown.
    pub fn diff(&self, axis: usize) -> Jet {
        Jet {
            v: self.d[axis],
            d: self.dd[axis],
            dd: [[f64::NAN; 2]; 2],
        }
    }

    pub fn has_second_order(&self) -> bool {
        self.dd.iter().flatten().all(|x| !x.is_nan())
    }

    fn chain(&self, f: f64, f1: f64, f2: f64) -> Jet {
        let mut dd = [[0.0; 2]; 2];
        for (i, row) in dd.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = f2 * self.d[i] * self.d[j] + f1 * self.dd[i][j];
            }
        }
        Jet {
            v: f,
            d: [f1 * self.d[0], f1 * self.d[1]],
            dd,
        }
    }

    pub fn sin(self) -> Jet {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Jet {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn exp(self) -> Jet {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn ln(self) -> Jet {
        let r = 1.0 / self.v;
        self.chain(self.v.ln(), r, -r * r)
    }

    pub fn sqrt(self) -> Jet {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }

    pub fn recip(self) -> Jet {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    pub fn powi(self, n: i32) -> Jet {
        match n {
            0 => Jet::constant(1.0),
            1 => self,
            _ => {
                let nf = n as f64;
                self.chain(
                    self.v.powi(n),
                    nf * self.v.powi(n - 1),
                    nf * (nf - 1.0) * self.v.powi(n - 2),
                )
            }
        }
    }

    pub fn tan(self) -> Jet {
        let t = self.v.tan();
        let s = 1.0 + t * t;
        self.chain(t, s, 2.0 * t * s)
    }

    /// `cos/sin`, evaluated directly rather than as a quotient of jets.
    pub fn cot(self) -> Jet {
        let (s, c) = self.v.sin_cos();
        let cot = c / s;
        let csc2 = 1.0 / (s * s);
        self.chain(cot, -csc2, 2.0 * cot * csc2)
    }
}

impl From<f64> for Jet {
    fn from(v: f64) -> Self {
        Jet::constant(v)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut dd = self.dd;
        for i in 0..2 {
            for j in 0..2 {
                dd[i][j] += o.dd[i][j];
            }
        }
        Jet {
            v: self.v + o.v,
            d: [self.d[0] + o.d[0], self.d[1] + o.d[1]],
            dd,
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self * -1.0
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut dd = [[0.0; 2]; 2];
        for (i, row) in dd.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = self.dd[i][j] * o.v + self.d[i] * o.d[j] + o.d[i] * self.d[j] + self.v * o.dd[i][j];
            }
        }
        Jet {
            v: self.v * o.v,
            d: [self.d[0] * o.v + self.v * o.d[0], self.d[1] * o.v + self.v * o.d[1]],
            dd,
        }
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, c: f64) -> Jet {
        self.v += c;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, c: f64) -> Jet {
        self.v -= c;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, c: f64) -> Jet {
        let mut dd = self.dd;
        for row in dd.iter_mut() {
            for e in row.iter_mut() {
                *e *= c;
            }
        }
        Jet {
            v: self.v * c,
            d: [self.d[0] * c, self.d[1] * c],
            dd,
        }
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, c: f64) -> Jet {
        self * (1.0 / c)
    }
}

impl Add<Jet> for f64 {
    type Output = Jet;
    fn add(self, j: Jet) -> Jet {
        j + self
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, j: Jet) -> Jet {
        -j + self
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, j: Jet) -> Jet {
        j * self
    }
}

impl Div<Jet> for f64 {
    type Output = Jet;
    fn div(self, j: Jet) -> Jet {
        j.recip() * self
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, o: Jet) {
        *self = *self + o;
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, o: Jet) {
        *self = *self - o;
    }
}

impl MulAssign<f64> for Jet {
    fn mul_assign(&mut self, c: f64) {
        *self = *self * c;
    }
}

impl std::iter::Sum for Jet {
    fn sum<I: Iterator<Item = Jet>>(iter: I) -> Jet {
        iter.fold(Jet::constant(0.0), |a, b| a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(f: impl Fn(Jet, Jet) -> Jet, t: f64, p: f64) {
        let (jt, jp) = Jet::coords(t, p);
        let j = f(jt, jp);
        let h = 1e-4;
        let val = |a: f64, b: f64| f(Jet::constant(a), Jet::constant(b)).v;
        let dt = (val(t + h, p) - val(t - h, p)) / (2.0 * h);
        let dp = (val(t, p + h) - val(t, p - h)) / (2.0 * h);
        let dtt = (val(t + h, p) - 2.0 * val(t, p) + val(t - h, p)) / (h * h);
        let dtp = (val(t + h, p + h) - val(t + h, p - h) - val(t - h, p + h) + val(t - h, p - h)) / (4.0 * h * h);
        assert!((j.d[0] - dt).abs() < 1e-6 * (1.0 + dt.abs()), "{} vs {}", j.d[0], dt);
        assert!((j.d[1] - dp).abs() < 1e-6 * (1.0 + dp.abs()));
        assert!((j.dd[0][0] - dtt).abs() < 1e-4, "{} vs {}", j.dd[0][0], dtt);
        assert!((j.dd[0][1] - dtp).abs() < 1e-4);
        assert_eq!(j.dd[0][1], j.dd[1][0]);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        fd_check(|t, p| t.sin() * p.cos(), 0.7, 1.3);
        fd_check(|t, p| (t.cos() * 2.0 + p.sin()).exp() / (t + 1.0), 0.4, 2.0);
        fd_check(|t, _| t.cot(), 0.3, 0.0);
        fd_check(|t, p| (t * t + p).sqrt().ln() + t.tan(), 0.5, 0.9);
        fd_check(|t, p| (t.sin() * p).powi(3), 1.1, 0.2);
    }

    #[test]
    fn diff_drops_second_order() {
        let (t, p) = Jet::coords(0.3, 0.4);
        let j = (t * p).sin();
        let dj = j.diff(0);
        assert!(!dj.has_second_order());
        assert!((dj.v - 0.4 * (0.12f64).cos()).abs() < 1e-15);
        assert!(j.has_second_order());
    }
}
