use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::UniPoly;
use crate::roots::roots_c64;
use crate::scalar::{CRational, Ring, XComplex};

/// A polynomial map of degree `d > 1`, with the data needed to certify
/// escape.
#[derive(Clone, Debug)]
pub struct PolyMap {
    poly: UniPoly<CRational>,
    coeffs: Vec<Complex64>,
    coeffs_x: Vec<XComplex>,
    degree: usize,
    /// `Σ_{j<d} |c_j|`.
    lower_mass: f64,
    escape_radius: f64,
    critical: Vec<Complex64>,
}

impl PolyMap {
    /// Escape radius `R = max(1, (Σ_{j<d}|c_j| + 2) / |c_d|)`, so that
    /// `|f(z)| >= 2|z|` whenever `|z| > R`.
    pub fn new(poly: UniPoly<CRational>) -> Result<Self> {
        let degree = poly
            .degree()
            .filter(|&d| d > 1)
            .ok_or_else(|| Error::InvalidInput("map must have degree > 1".into()))?;
        let coeffs: Vec<Complex64> = poly.coeffs().iter().map(CRational::to_c64).collect();
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("map coefficients exceed double range".into()));
        }
        let lower_mass: f64 = coeffs[..degree].iter().map(|c| c.norm()).sum();
        let lead = coeffs[degree].norm();
        let escape_radius = ((lower_mass + 2.0) / lead).max(1.0);
        let derivative: Vec<Complex64> = poly.derivative(1).coeffs().iter().map(CRational::to_c64).collect();
        let critical = roots_c64(&derivative)?;
        Ok(PolyMap {
            coeffs_x: coeffs.iter().map(|&c| XComplex::new(c)).collect(),
            poly,
            coeffs,
            degree,
            lower_mass,
            escape_radius,
            critical,
        })
    }

    pub fn parse(s: &str) -> Result<Self> {
        PolyMap::new(UniPoly::parse(s)?)
    }

    pub fn poly(&self) -> &UniPoly<CRational> {
        &self.poly
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_x(&self) -> &[XComplex] {
        &self.coeffs_x
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs[self.degree]
    }

    pub fn lower_mass(&self) -> f64 {
        self.lower_mass
    }

    pub fn escape_radius(&self) -> f64 {
        self.escape_radius
    }

    /// Roots of `f'`, with multiplicity.
    pub fn critical_points(&self) -> &[Complex64] {
        &self.critical
    }

    /// `log|c_d| / (d - 1)`, the constant term of `g_f - log|z|` at infinity.
    pub fn log_gamma(&self) -> f64 {
        self.leading().norm().ln() / (self.degree - 1) as f64
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    pub fn eval_x(&self, z: &XComplex) -> XComplex {
        let mut acc = XComplex::ZERO;
        for c in self.coeffs_x.iter().rev() {
            acc = acc.mul(z).add(c);
        }
        acc
    }

    /// `(f(z), f'(z))`.
    pub fn eval_with_derivative_x(&self, z: &XComplex) -> (XComplex, XComplex) {
        let mut p = XComplex::ZERO;
        let mut dp = XComplex::ZERO;
        for c in self.coeffs_x.iter().rev() {
            dp = dp.mul(z).add(&p);
            p = p.mul(z).add(c);
        }
        (p, dp)
    }

    /// The `d` preimages of `z`, with multiplicity.
    pub fn preimages(&self, z: Complex64) -> Result<Vec<Complex64>> {
        let mut c = self.coeffs.clone();
        c[0] -= z;
        roots_c64(&c)
    }

    /// The only affine point that can be exceptional: `b = -c_(d-1)/(d c_d)`,
    /// returned when `f(z) - b = c_d (z - b)^d` holds numerically.
    pub fn exceptional_point(&self) -> Option<Complex64> {
        let d = self.degree;
        let b = -self.coeffs[d - 1] / (d as f64 * self.leading());
        let ok = [0.5, -1.25, 2.0]
            .iter()
            .map(|&s| Complex64::new(s, 0.3 * s))
            .all(|t| {
                let lhs = self.eval(b + t) - b;
                let rhs = self.leading() * t.powu(d as u32);
                (lhs - rhs).norm() <= 1e-9 * (1.0 + rhs.norm() + b.norm().powi(d as i32))
            });
        ok.then_some(b)
    }
}
