use num_complex::Complex64;
use serde::Serialize;

use super::map::PolyMap;
use crate::error::{Error, Result};

/// Points on the circle `|z| = ρ` at which the residual is sampled.
const RESIDUAL_SAMPLES: usize = 256;

/// Truncated Böttcher coordinate `ψ(z) = γ z (1 + Σ_{j=1}^{K} b_j z^(-j))`
/// with `γ` the principal `(d-1)`-th root of `c_d`.
#[derive(Clone, Debug, Serialize)]
pub struct BoettcherSeries {
    pub order: usize,
    pub gamma: Complex64,
    /// `b_1, ..., b_K`.
    pub coeffs: Vec<Complex64>,
    pub rho: f64,
    /// `max |ψ(f(z)) - ψ(z)^d|` over sampled `|z| = ρ`.
    pub residual: f64,
}

impl BoettcherSeries {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.gamma * z * series_at(&self.coeffs, z.inv())
    }

    pub fn log_abs(&self, z: Complex64) -> f64 {
        self.gamma.norm().ln() + z.norm().ln() + series_at(&self.coeffs, z.inv()).norm().ln()
    }
}

/// `1 + Σ b_j t^j`.
fn series_at(b: &[Complex64], t: Complex64) -> Complex64 {
    b.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, bj| (acc + bj) * t) + 1.0
}

fn mul_trunc(a: &[Complex64], b: &[Complex64], len: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for (i, x) in a.iter().enumerate().take(len) {
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// Solves `E(t) u(s(t)) = u(t)^d` order by order in `t = 1/z`, where
/// `f(z) = c_d z^d E(t)` and `s = 1/f(z) = t^d / (c_d E(t))`.
fn solve_coeffs(f: &PolyMap, order: usize) -> Vec<Complex64> {
    let d = f.degree();
    let c = f.coeffs();
    let lead = f.leading();
    let len = order + 1;
    let zero = Complex64::new(0.0, 0.0);

    let mut e = vec![zero; len];
    e[0] = Complex64::new(1.0, 0.0);
    for k in 1..=d.min(order) {
        e[k] = c[d - k] / lead;
    }
    // 1/E by recursion, then s = t^d / (c_d E)
    let mut e_inv = vec![zero; len];
    e_inv[0] = Complex64::new(1.0, 0.0);
    for k in 1..len {
        let acc: Complex64 = (1..=k).map(|j| e[j] * e_inv[k - j]).sum();
        e_inv[k] = -acc;
    }
    let mut s = vec![zero; len];
    for k in d..len {
        s[k] = e_inv[k - d] / lead;
    }

    let mut b = vec![zero; order];
    for j in 1..=order {
        // u(s) by Horner over series
        let mut us = vec![zero; len];
        for bj in b.iter().rev() {
            us = mul_trunc(&us, &s, len);
            us[0] += bj;
        }
        us = mul_trunc(&us, &s, len);
        us[0] += 1.0;
        let lhs = mul_trunc(&e, &us, len);

        let mut u = vec![zero; len];
        u[0] = Complex64::new(1.0, 0.0);
        u[1..].copy_from_slice(&b);
        u[j] = zero;
        let mut pow = u.clone();
        for _ in 1..d {
            pow = mul_trunc(&pow, &u, len);
        }
        b[j - 1] = (lhs[j] - pow[j]) / d as f64;
    }
    b
}

fn residual(f: &PolyMap, gamma: Complex64, b: &[Complex64], rho: f64) -> f64 {
    let d = f.degree() as u32;
    (0..RESIDUAL_SAMPLES)
        .map(|k| {
            let z = Complex64::from_polar(rho, std::f64::consts::TAU * (k as f64 + 0.5) / RESIDUAL_SAMPLES as f64);
            let fz = f.eval(z);
            let lhs = gamma * fz * series_at(b, fz.inv());
            let rhs = (gamma * z * series_at(b, z.inv())).powu(d);
            (lhs - rhs).norm()
        })
        .fold(0.0, f64::max)
}

/// Böttcher series to order `order`, with its functional-equation residual on
/// `|z| = rho`.
///
/// Fails with [`Error::Divergence`] when doubling the order from `order/2`
/// does not reduce the residual, which happens when `rho` is too small for
/// the series to converge.
pub fn boettcher_series(f: &PolyMap, order: usize, rho: f64) -> Result<BoettcherSeries> {
    if !(rho > f.escape_radius()) {
        return Err(Error::InvalidInput(format!(
            "rho = {rho} must exceed the escape radius {}",
            f.escape_radius()
        )));
    }
    if order == 0 {
        return Err(Error::InvalidInput("series order must be positive".into()));
    }
    let d = f.degree();
    let gamma = f.leading().powf(1.0 / (d - 1) as f64);
    let b = solve_coeffs(f, order);
    let res = residual(f, gamma, &b, rho);
    if order >= 2 {
        let half = residual(f, gamma, &b[..order / 2], rho);
        let floor = 1e-13 * (gamma.norm() * rho).powi(d as i32);
        if res >= half && res > floor {
            return Err(Error::Divergence {
                order,
                residual: res,
                previous: half,
            });
        }
    }
    Ok(BoettcherSeries {
        order,
        gamma,
        coeffs: b,
        rho,
        residual: res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::GreenEvaluator;

    #[test]
    fn monomial_is_identity() {
        let f = PolyMap::parse("[0, 0, 0, 1]").unwrap();
        let s = boettcher_series(&f, 8, 3.0).unwrap();
        assert!(s.coeffs.iter().all(|b| b.norm() == 0.0));
        assert!((s.gamma - 1.0).norm() < 1e-15);
    }

    #[test]
    fn quadratic_second_coefficient() {
        let f = PolyMap::parse("[0.3+0.1i, 0, 1]").unwrap();
        let s = boettcher_series(&f, 6, 4.0).unwrap();
        assert!(s.coeffs[0].norm() < 1e-15);
        assert!((s.coeffs[1] - Complex64::new(0.15, 0.05)).norm() < 1e-15);
    }

    #[test]
    fn residual_small_on_circle_four() {
        let f = PolyMap::parse("[0.3, 0, 1]").unwrap();
        let s = boettcher_series(&f, 16, 4.0).unwrap();
        assert!(s.residual < 1e-8, "{}", s.residual);
    }

    #[test]
    fn non_monic_branch_and_green_agreement() {
        let f = PolyMap::parse("[1, -1, 0, 2]").unwrap();
        let rho = f.escape_radius() * 1.5;
        let s = boettcher_series(&f, 24, rho).unwrap();
        assert!((s.gamma.powu(2) - 2.0).norm() < 1e-14);
        let g = GreenEvaluator::with_defaults(f);
        for k in 0..8 {
            let z = Complex64::from_polar(rho, k as f64 * 0.8);
            let gv = g.green(z).unwrap().value;
            assert!((s.log_abs(z) - gv).abs() < 1e-9, "{} vs {gv}", s.log_abs(z));
        }
    }
}
