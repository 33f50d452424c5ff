use num_complex::Complex64;
use serde::Serialize;

use super::map::{HenonMap, OrbitJacobian, ShiftMatrix};
use crate::dynamics::{GreenStatus, GreenValue};
use crate::error::{Error, Result};
use crate::poly::{BiPoly, UniPoly, BI_DEGREE_CAP};
use crate::scalar::{CScalar, Ring, XComplex};

const TRAP_EVERY: usize = 16;
const TAIL_STEPS: usize = 64;
/// Callers of [`phi_n`] need `y_locus_guard` above this.
pub const Y_GUARD: f64 = 1e-4;
/// `log2|P_n|` reached before a gradient is read off.
const GRADIENT_LOG2: f64 = 80.0;

type Pt = (Complex64, Complex64);

/// Escape-rate evaluator for `g⁺ = lim log⁺‖f^n‖ / d^n`.
///
/// Escape means entering `V⁺ = {|z| > R, |z| >= |w|}`, where
/// `g⁺ = log|z| + log|c_d|/(d-1)` up to a tail of the same form as in one
/// variable with `Σ_{j<d}|c_j| + |δ|` in place of `Σ_{j<d}|c_j|`.
#[derive(Clone, Debug)]
pub struct HenonGreen {
    map: HenonMap,
    max_iter: usize,
    tol: f64,
}

impl HenonGreen {
    pub fn new(map: HenonMap, max_iter: usize, tol: f64) -> Result<Self> {
        if max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be positive".into()));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidInput("tol must be positive".into()));
        }
        Ok(HenonGreen { map, max_iter, tol })
    }

    /// 500 iterations, tolerance `1e-12`.
    pub fn with_defaults(map: HenonMap) -> Self {
        HenonGreen {
            map,
            max_iter: 500,
            tol: 1e-12,
        }
    }

    pub fn map(&self) -> &HenonMap {
        &self.map
    }

    fn ln_d(&self) -> f64 {
        (self.map.degree() as f64).ln()
    }

    fn log_gamma(&self) -> f64 {
        self.map.leading().norm().ln() / (self.map.degree() - 1) as f64
    }

    fn in_escape_region(&self, z: &XComplex, w: &XComplex) -> bool {
        let lz = z.log2_abs();
        lz > self.map.escape_radius().log2() && lz >= w.log2_abs()
    }

    pub fn green_plus(&self, pt: Pt) -> Result<GreenValue> {
        self.green_plus_value(pt, self.tol)
    }

    pub fn green_plus_value(&self, pt: Pt, tol: f64) -> Result<GreenValue> {
        if !(tol > 0.0) {
            return Err(Error::InvalidInput("tol must be positive".into()));
        }
        if !(pt.0.is_finite() && pt.1.is_finite()) {
            return Err(Error::InvalidInput("non-finite point".into()));
        }
        let h = &self.map;
        let delta = h.delta_x();
        let mut z = XComplex::new(pt.0);
        let mut w = XComplex::new(pt.1);
        let mut recent: Vec<Pt> = Vec::with_capacity(TRAP_EVERY);
        for k in 0..=self.max_iter {
            if self.in_escape_region(&z, &w) {
                return Ok(self.escaped(z, w, k, tol));
            }
            if k > 0 && k % TRAP_EVERY == 0 {
                if let Some(period) = self.try_trap((z.to_c64(), w.to_c64()), &recent) {
                    return Ok(GreenValue {
                        value: 0.0,
                        err: 0.0,
                        upper: 0.0,
                        status: GreenStatus::Trapped { period },
                        iterations: k,
                        tol,
                    });
                }
                recent.clear();
            }
            recent.push((z.to_c64(), w.to_c64()));
            let (pz, _) = h.p_with_derivative_x(&z);
            let next = pz.sub(&delta.mul(&w));
            w = z;
            z = next;
        }
        // g⁺(x) <= log max(|z|, |w|, R) + log max(1, Σ|c_j| + |δ|)/(d-1)
        let d = h.degree() as f64;
        let rho = (z.log2_abs().max(w.log2_abs()) * std::f64::consts::LN_2).max(h.escape_radius().ln());
        let c = (h.lower_mass() + h.leading().norm()).max(1.0).ln() / (d - 1.0);
        let upper = (rho + c) * (-(self.max_iter as f64) * self.ln_d()).exp();
        Ok(GreenValue {
            value: 0.0,
            err: upper,
            upper,
            status: GreenStatus::Undecided,
            iterations: self.max_iter,
            tol,
        })
    }

    fn escaped(&self, mut z: XComplex, mut w: XComplex, mut k: usize, tol: f64) -> GreenValue {
        let h = &self.map;
        let d = h.degree() as f64;
        let ln_d = self.ln_d();
        let log2_ratio = h.lower_mass().log2() - h.leading().norm().log2();
        let shrink = (1.0 - 0.5 / d).ln();
        let round = 2.0 * (d + 3.0) * f64::EPSILON;
        let tail = |z: &XComplex, k: usize| -> f64 {
            let q = (log2_ratio - z.log2_abs()).exp2();
            if q == 0.0 {
                return 0.0;
            }
            (q.ln() - (-q).ln_1p() - shrink - (k + 1) as f64 * ln_d).exp()
        };
        let delta = h.delta_x();
        let mut trunc = tail(&z, k);
        for _ in 0..TAIL_STEPS {
            if trunc + round <= tol {
                break;
            }
            let (pz, _) = h.p_with_derivative_x(&z);
            let next = pz.sub(&delta.mul(&w));
            w = z;
            z = next;
            k += 1;
            trunc = tail(&z, k);
        }
        let base = z.log2_abs() * std::f64::consts::LN_2 + self.log_gamma();
        let value = base * (-(k as f64) * ln_d).exp();
        GreenValue {
            value,
            err: trunc + round * (1.0 + value),
            upper: value + trunc,
            status: GreenStatus::Escaped,
            iterations: k,
            tol,
        }
    }

    fn try_trap(&self, c: Pt, recent: &[Pt]) -> Option<usize> {
        let d = self.map.degree();
        let scale = c.0.norm().max(c.1.norm()).max(1.0);
        let mut period = 1;
        let mut deg = d;
        while deg <= BI_DEGREE_CAP && period <= recent.len() {
            let back = recent[recent.len() - period];
            let close = (c.0 - back.0).norm().max((c.1 - back.1).norm()) <= 1e-3 * scale;
            if close && self.invariant_polydisk(c, period) {
                return Some(period);
            }
            period += 1;
            deg *= d;
        }
        None
    }

    /// Looks for `{c + V y : |y_1|, |y_2| <= r}` mapped into itself by
    /// `f^p`, where `V` diagonalises the linear part of `f^p` at `c`.
    fn invariant_polydisk(&self, c: Pt, period: usize) -> bool {
        let Some(taylor) = self.taylor(c, period) else {
            return false;
        };
        let lin = |poly: &BiPoly<XComplex>, i: usize, j: usize| poly.coeff(i, j).map_or(Complex64::new(0.0, 0.0), |x| x.to_c64());
        let [fz, fw] = &taylor;
        let l = [[lin(fz, 1, 0), lin(fz, 0, 1)], [lin(fw, 1, 0), lin(fw, 0, 1)]];
        let shift = [lin(fz, 0, 0) - c.0, lin(fw, 0, 0) - c.1];
        let Some((v, vinv)) = eigenbasis(l) else {
            return false;
        };
        let b = mat_mul(vinv, mat_mul(l, v));
        let cy = [vinv[0][0] * shift[0] + vinv[0][1] * shift[1], vinv[1][0] * shift[0] + vinv[1][1] * shift[1]];
        let higher: [Vec<(usize, usize, f64)>; 2] = [fz, fw].map(|p| {
            p.rows()
                .iter()
                .enumerate()
                .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, x)| (i, j, x.to_c64().norm())))
                .filter(|&(i, j, a)| i + j >= 2 && a > 0.0)
                .collect()
        });
        let start = c.0.norm().max(c.1.norm()).max(1.0);
        (0..80).any(|k| {
            let r = start * (-(k as f64) * 0.5).exp2();
            let s = [(v[0][0].norm() + v[0][1].norm()) * r, (v[1][0].norm() + v[1][1].norm()) * r];
            let nl: Vec<f64> = higher
                .iter()
                .map(|terms| terms.iter().map(|&(i, j, a)| a * s[0].powi(i as i32) * s[1].powi(j as i32)).sum())
                .collect();
            (0..2).all(|i| {
                let lhs = cy[i].norm()
                    + (b[i][0].norm() + b[i][1].norm()) * r * (1.0 + 1e-9)
                    + (vinv[i][0].norm() * nl[0] + vinv[i][1].norm() * nl[1]) * (1.0 + 1e-9);
                lhs + 1e-12 * start < r
            })
        })
    }

    /// Taylor expansion of `f^p(c + h)` in `h`, exact up to rounding.
    fn taylor(&self, c: Pt, period: usize) -> Option<[BiPoly<XComplex>; 2]> {
        let h = &self.map;
        let one = XComplex::new(Complex64::new(1.0, 0.0));
        let zero = XComplex::ZERO;
        let p: UniPoly<XComplex> = UniPoly::new(h.coeffs().iter().map(|&a| XComplex::new(a)).collect());
        let delta = h.delta_x();
        let mut fz = BiPoly::new(vec![vec![XComplex::new(c.0), zero], vec![one, zero]]);
        let mut fw = BiPoly::new(vec![vec![XComplex::new(c.1), one]]);
        for _ in 0..period {
            let next = fz.compose_into(&p, BI_DEGREE_CAP).ok()?.sub(&fw.scale(&delta));
            fw = fz;
            fz = next;
        }
        Some([fz, fw])
    }

    /// `(∂_z g⁺, ∂_w g⁺)` at a point of the basin.
    pub fn green_plus_gradient(&self, pt: Pt) -> Result<Gradient> {
        let g = self.green_plus(pt)?;
        if g.status != GreenStatus::Escaped {
            return Err(Error::Guard(format!("({}, {}) is not certified in the escaping set", pt.0, pt.1)));
        }
        let mut o = OrbitJacobian::start(pt);
        let limit = self.max_iter + TAIL_STEPS;
        while o.p.log2_abs() < GRADIENT_LOG2 || !self.in_escape_region(&o.p, &o.q) {
            if o.n as usize >= limit {
                return Err(Error::Undecided {
                    point: format!("({}, {})", pt.0, pt.1),
                    iterations: limit,
                });
            }
            o.step(&self.map);
        }
        let first = gradient_of(&o, self.map.degree());
        o.step(&self.map);
        let second = gradient_of(&o, self.map.degree());
        let agreement = (second.0 - first.0).norm().max((second.1 - first.1).norm());
        Ok(Gradient {
            dz: second.0,
            dw: second.1,
            n: o.n,
            agreement,
        })
    }

    /// `|a4 ∂_z g⁺ - a3 ∂_w g⁺|`, small near the locus where
    /// `det(D(f^n) - A)` can degenerate.
    pub fn y_locus_guard(&self, a: &ShiftMatrix, pt: Pt) -> Result<f64> {
        let grad = self.green_plus_gradient(pt)?;
        let [_, _, a3, a4] = a.entries();
        Ok((a4.to_c64() * grad.dz - a3.to_c64() * grad.dw).norm())
    }
}

fn gradient_of(o: &OrbitJacobian, d: usize) -> (Complex64, Complex64) {
    // d^-n ∂_j P / (2P), with d^n folded into the exponent
    let scale = -(o.n as f64) * (d as f64).log2() - 1.0;
    let part = |x: &XComplex| {
        let r = x.div(&o.p);
        r.mantissa() * (r.exponent() as f64 + scale).exp2()
    };
    (part(&o.jac[0][0]), part(&o.jac[0][1]))
}

/// `(∂_z g⁺, ∂_w g⁺)` read off at orbit step `n`, with the change from
/// step `n - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Gradient {
    pub dz: Complex64,
    pub dw: Complex64,
    pub n: u32,
    pub agreement: f64,
}

/// `log|det(D(f^n) - A)(pt)| / (d^n - 1)`, evaluated along the orbit in
/// extended range. The point must escape and clear the Y-locus guard.
pub fn phi_n(g: &HenonGreen, n: u32, a: &ShiftMatrix, pt: Pt) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    let guard = g.y_locus_guard(a, pt)?;
    if guard <= Y_GUARD {
        return Err(Error::Guard(format!("Y-locus guard {guard:e} at ({}, {}) is below {Y_GUARD:e}", pt.0, pt.1)));
    }
    let h = g.map();
    let mut o = OrbitJacobian::start(pt);
    for _ in 0..n {
        o.step(h);
    }
    let det = o.det_shift(h, a);
    if det.is_zero() {
        return Err(Error::Guard("det(D(f^n) - A) vanishes".into()));
    }
    let dn = (h.degree() as f64).powi(n as i32);
    Ok(det.ln_abs() / (dn - 1.0))
}

fn mat_mul(a: [[Complex64; 2]; 2], b: [[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

type Mat2 = [[Complex64; 2]; 2];

/// Eigenvector matrix `V` and its inverse, or `None` when the eigenvalues
/// are too close to separate.
fn eigenbasis(l: Mat2) -> Option<(Mat2, Mat2)> {
    let tr = l[0][0] + l[1][1];
    let det = l[0][0] * l[1][1] - l[0][1] * l[1][0];
    let disc = (tr * tr - 4.0 * det).sqrt();
    let scale = l.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max).max(1e-300);
    if disc.norm() <= 1e-8 * scale {
        return None;
    }
    let mu = [(tr + disc) / 2.0, (tr - disc) / 2.0];
    let col = |m: Complex64| -> [Complex64; 2] {
        let a = [l[0][1], m - l[0][0]];
        let b = [m - l[1][1], l[1][0]];
        let v = if a[0].norm() + a[1].norm() >= b[0].norm() + b[1].norm() { a } else { b };
        let n = v[0].norm().max(v[1].norm());
        [v[0] / n, v[1] / n]
    };
    let (c0, c1) = (col(mu[0]), col(mu[1]));
    let v = [[c0[0], c1[0]], [c0[1], c1[1]]];
    let dv = v[0][0] * v[1][1] - v[0][1] * v[1][0];
    if dv.norm() <= 1e-12 {
        return None;
    }
    let vinv = [[v[1][1] / dv, -v[0][1] / dv], [-v[1][0] / dv, v[0][0] / dv]];
    Some((v, vinv))
}
