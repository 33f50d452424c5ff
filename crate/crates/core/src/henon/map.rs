use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::{BiPoly, UniPoly, BI_DEGREE_CAP};
use crate::scalar::{CRational, CScalar, Ring, XComplex};

/// `f(z, w) = (p(z) - δ w, z)` with `deg p = d > 1` and `δ ≠ 0`, so that
/// `det Df = δ` everywhere.
#[derive(Clone, Debug)]
pub struct HenonMap {
    p: UniPoly<CRational>,
    delta: CRational,
    coeffs: Vec<Complex64>,
    coeffs_x: Vec<XComplex>,
    delta_c: Complex64,
    degree: usize,
    escape_radius: f64,
}

impl HenonMap {
    /// Escape radius `R = max(1, (Σ_{j<d}|c_j| + |δ| + 2) / |c_d|)`: for
    /// `|z| > R` and `|z| >= |w|` the image satisfies `|z'| >= 2|z| = 2|w'|`.
    pub fn new(p: UniPoly<CRational>, delta: CRational) -> Result<Self> {
        let degree = p
            .degree()
            .filter(|&d| d > 1)
            .ok_or_else(|| Error::InvalidInput("p must have degree > 1".into()))?;
        if delta.is_zero() {
            return Err(Error::InvalidInput("δ must be nonzero".into()));
        }
        let coeffs: Vec<Complex64> = p.coeffs().iter().map(CRational::to_c64).collect();
        let delta_c = delta.to_c64();
        if coeffs.iter().any(|c| !c.is_finite()) || !delta_c.is_finite() {
            return Err(Error::InvalidInput("coefficients exceed double range".into()));
        }
        let lower: f64 = coeffs[..degree].iter().map(|c| c.norm()).sum();
        let escape_radius = ((lower + delta_c.norm() + 2.0) / coeffs[degree].norm()).max(1.0);
        Ok(HenonMap {
            coeffs_x: coeffs.iter().map(|&c| XComplex::new(c)).collect(),
            p,
            delta,
            coeffs,
            delta_c,
            degree,
            escape_radius,
        })
    }

    pub fn parse(p: &str, delta: &str) -> Result<Self> {
        HenonMap::new(UniPoly::parse(p)?, delta.parse()?)
    }

    pub fn p(&self) -> &UniPoly<CRational> {
        &self.p
    }

    pub fn delta(&self) -> &CRational {
        &self.delta
    }

    pub fn delta_c64(&self) -> Complex64 {
        self.delta_c
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs[self.degree]
    }

    /// `Σ_{j<d}|c_j| + |δ|`.
    pub fn lower_mass(&self) -> f64 {
        self.coeffs[..self.degree].iter().map(|c| c.norm()).sum::<f64>() + self.delta_c.norm()
    }

    pub fn escape_radius(&self) -> f64 {
        self.escape_radius
    }

    pub fn apply(&self, (z, w): (Complex64, Complex64)) -> (Complex64, Complex64) {
        let pz = self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c);
        (pz - self.delta_c * w, z)
    }

    /// `(p(z), p'(z))` in extended range.
    pub(crate) fn p_with_derivative_x(&self, z: &XComplex) -> (XComplex, XComplex) {
        let mut p = XComplex::ZERO;
        let mut dp = XComplex::ZERO;
        for c in self.coeffs_x.iter().rev() {
            dp = dp.mul(z).add(&p);
            p = p.mul(z).add(c);
        }
        (p, dp)
    }

    pub(crate) fn delta_x(&self) -> XComplex {
        XComplex::new(self.delta_c)
    }
}

/// `f^n = (P_n, Q_n)`, expanded exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct IterPair {
    pub n: u32,
    pub p: BiPoly<CRational>,
    pub q: BiPoly<CRational>,
}

impl IterPair {
    /// `∂_z P ∂_w Q - ∂_w P ∂_z Q`.
    pub fn jacobian(&self) -> BiPoly<CRational> {
        self.p
            .partial_z()
            .mul(&self.q.partial_w())
            .sub(&self.p.partial_w().mul(&self.q.partial_z()))
    }
}

fn check_budget(h: &HenonMap, n: u32) -> Result<usize> {
    let dn = (h.degree as u128).checked_pow(n).unwrap_or(u128::MAX);
    if dn > BI_DEGREE_CAP as u128 {
        return Err(Error::Capacity {
            what: "Hénon iterate degree",
            needed: dn,
            limit: BI_DEGREE_CAP as u128,
        });
    }
    Ok(dn as usize)
}

/// Exact `(P_n, Q_n)` for `d^n <= 64`.
pub fn henon_iterate(h: &HenonMap, n: u32) -> Result<IterPair> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    check_budget(h, n)?;
    let one = CRational::real(1);
    let mut p = BiPoly::z(&one);
    let mut q = BiPoly::w(&one);
    for _ in 0..n {
        let next = p.compose_into(&h.p, BI_DEGREE_CAP)?.sub(&q.scale(&h.delta));
        q = p;
        p = next;
    }
    Ok(IterPair { n, p, q })
}

/// The matrix `A = [[a1, a2], [a3, a4]]` subtracted from `D(f^n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftMatrix {
    a: [CRational; 4],
}

impl ShiftMatrix {
    pub fn new(a1: CRational, a2: CRational, a3: CRational, a4: CRational) -> Result<Self> {
        if a4.is_zero() {
            return Err(Error::InvalidInput("a4 must be nonzero".into()));
        }
        Ok(ShiftMatrix { a: [a1, a2, a3, a4] })
    }

    /// `λ I₂`.
    pub fn scalar(lambda: CRational) -> Result<Self> {
        let zero = CRational::real(0);
        ShiftMatrix::new(lambda.clone(), zero.clone(), zero, lambda)
    }

    /// Entries in the order `a1, a2, a3, a4`.
    pub fn entries(&self) -> &[CRational; 4] {
        &self.a
    }

    pub fn det(&self) -> CRational {
        self.a[0].mul(&self.a[3]).sub(&self.a[1].mul(&self.a[2]))
    }

    pub(crate) fn entries_x(&self) -> [XComplex; 4] {
        self.a.clone().map(|c| XComplex::from_exact(&c, ()))
    }
}

/// `det(D(f^n) - A) = J - a4 ∂_z P_n - a1 ∂_w Q_n + a3 ∂_w P_n + a2 ∂_z Q_n + det A`,
/// expanded exactly and checked to have degree `d^n - 1`.
pub fn det_jacobian_shift(h: &HenonMap, n: u32, a: &ShiftMatrix) -> Result<BiPoly<CRational>> {
    let pair = henon_iterate(h, n)?;
    let dn = h.degree.pow(n);
    let [a1, a2, a3, a4] = a.entries();
    let det = pair
        .jacobian()
        .sub(&pair.p.partial_z().scale(a4))
        .sub(&pair.q.partial_w().scale(a1))
        .add(&pair.p.partial_w().scale(a3))
        .add(&pair.q.partial_z().scale(a2))
        .add(&BiPoly::constant(a.det()));
    let degree = det.total_degree();
    if degree != Some(dn - 1) {
        return Err(Error::DegreeCheck(format!(
            "det(D(f^{n}) - A) has degree {degree:?}, expected {}",
            dn - 1
        )));
    }
    Ok(det)
}

/// `f^n(pt)` with `D(f^n)(pt)`, in extended range.
#[derive(Clone, Debug)]
pub struct OrbitJacobian {
    pub n: u32,
    pub p: XComplex,
    pub q: XComplex,
    /// `[[∂_z P, ∂_w P], [∂_z Q, ∂_w Q]]`.
    pub jac: [[XComplex; 2]; 2],
}

impl OrbitJacobian {
    pub fn start(pt: (Complex64, Complex64)) -> Self {
        let one = XComplex::new(Complex64::new(1.0, 0.0));
        OrbitJacobian {
            n: 0,
            p: XComplex::new(pt.0),
            q: XComplex::new(pt.1),
            jac: [[one, XComplex::ZERO], [XComplex::ZERO, one]],
        }
    }

    pub fn step(&mut self, h: &HenonMap) {
        let (pz, dpz) = h.p_with_derivative_x(&self.p);
        let delta = h.delta_x();
        let [r1, r2] = self.jac;
        let new_r1 = [
            dpz.mul(&r1[0]).sub(&delta.mul(&r2[0])),
            dpz.mul(&r1[1]).sub(&delta.mul(&r2[1])),
        ];
        self.jac = [new_r1, r1];
        let w = std::mem::replace(&mut self.q, self.p);
        self.p = pz.sub(&delta.mul(&w));
        self.n += 1;
    }

    /// `det(D(f^n) - A)` from the formula with `J = δ^n`.
    pub fn det_shift(&self, h: &HenonMap, a: &ShiftMatrix) -> XComplex {
        let [a1, a2, a3, a4] = a.entries_x();
        let mut j = XComplex::new(Complex64::new(1.0, 0.0));
        for _ in 0..self.n {
            j = j.mul(&h.delta_x());
        }
        let m = &self.jac;
        j.sub(&a4.mul(&m[0][0]))
            .sub(&a1.mul(&m[1][1]))
            .add(&a3.mul(&m[0][1]))
            .add(&a2.mul(&m[1][0]))
            .add(&a1.mul(&a4).sub(&a2.mul(&a3)))
    }
}

pub fn orbit_jacobian(h: &HenonMap, n: u32, pt: (Complex64, Complex64)) -> OrbitJacobian {
    let mut o = OrbitJacobian::start(pt);
    for _ in 0..n {
        o.step(h);
    }
    o
}
