use crate::error::{Error, Result};
use crate::poly::uni::UniPoly;
use crate::scalar::{CRational, CScalar, LogMag, MpComplex};

/// Value and derivatives up to order `m` of a function at a point.
///
/// Stored internally as normalized Taylor coefficients `h^(k)(z) / k!`, so
/// products are plain truncated convolutions; [`Jet::derivative`] restores
/// the factorials.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet<S> {
    taylor: Vec<S>,
}

impl<S: CScalar> Jet<S> {
    /// Jet of the identity map at `z`.
    pub fn variable(z: &S, order: usize) -> Self {
        let mut taylor = vec![z.zero_like(); order + 1];
        taylor[0] = z.clone();
        if order >= 1 {
            taylor[1] = z.one_like();
        }
        Jet { taylor }
    }

    pub fn constant(c: &S, order: usize) -> Self {
        let mut taylor = vec![c.zero_like(); order + 1];
        taylor[0] = c.clone();
        Jet { taylor }
    }

    /// From derivative values `[h, h', ..., h^(m)]`.
    pub fn from_derivatives(values: &[S]) -> Self {
        let mut fact = 1u64;
        let taylor = values
            .iter()
            .enumerate()
            .map(|(k, v)| {
                if k > 1 {
                    fact *= k as u64;
                }
                v.div(&v.one_like().mul_u64(fact))
            })
            .collect();
        Jet { taylor }
    }

    pub fn order(&self) -> usize {
        self.taylor.len() - 1
    }

    pub fn value(&self) -> &S {
        &self.taylor[0]
    }

    pub fn taylor_coeffs(&self) -> &[S] {
        &self.taylor
    }

    /// `h^(k)(z)`.
    pub fn derivative(&self, k: usize) -> S {
        let fact: u64 = (2..=k as u64).product();
        self.taylor[k].mul_u64(fact)
    }

    /// `[h, h', ..., h^(m)]`.
    pub fn derivatives(&self) -> Vec<S> {
        (0..=self.order()).map(|k| self.derivative(k)).collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        Jet {
            taylor: self.taylor.iter().zip(&other.taylor).map(|(a, b)| a.add(b)).collect(),
        }
    }

    /// Truncated product (Leibniz rule).
    pub fn mul(&self, other: &Self) -> Self {
        let m = self.order().min(other.order());
        let taylor = (0..=m)
            .map(|k| {
                let mut acc = self.taylor[0].mul(&other.taylor[k]);
                for j in 1..=k {
                    acc.add_assign(&self.taylor[j].mul(&other.taylor[k - j]));
                }
                acc
            })
            .collect();
        Jet { taylor }
    }

    /// Jet of `p ∘ h` by Horner's rule over jets; `coeffs` ascending.
    pub fn compose_poly(coeffs: &[S], h: &Self) -> Self {
        let order = h.order();
        let mut it = coeffs.iter().rev();
        let Some(lead) = it.next() else {
            return Jet::constant(&h.taylor[0].zero_like(), order);
        };
        let mut acc = Jet::constant(lead, order);
        for c in it {
            acc = acc.mul(h);
            acc.taylor[0].add_assign(c);
        }
        acc
    }
}

/// Jet of `f^n` at `z` up to order `m`, propagated through `n` compositions
/// without expanding `f^n`. Cost is `O(n d m^2)`.
pub fn jet_iterate<S: CScalar>(coeffs: &[S], n: u32, m: usize, z: &S) -> Jet<S> {
    let mut h = Jet::variable(z, m);
    for _ in 0..n {
        h = Jet::compose_poly(coeffs, &h);
    }
    h
}

/// Result of [`jet_eval`]: the jet plus a first-order running error bound.
#[derive(Clone, Debug)]
pub struct JetEval {
    pub jet: Jet<MpComplex>,
    /// log2 of the absolute error bound on each Taylor coefficient.
    pub err_log2: Vec<f64>,
}

impl JetEval {
    /// log2 of the relative error bound of the `k`-th derivative.
    pub fn rel_err_log2(&self, k: usize) -> f64 {
        self.err_log2[k] - self.jet.taylor[k].log2_abs()
    }

    /// Fails with [`Error::PrecisionLoss`] if any order exceeds `tol`
    /// relative error.
    pub fn check(&self, tol: f64) -> Result<()> {
        let worst = (0..=self.jet.order())
            .map(|k| self.rel_err_log2(k))
            .fold(f64::NEG_INFINITY, f64::max);
        if worst > tol.log2() {
            Err(Error::PrecisionLoss { bound_log2: worst })
        } else {
            Ok(())
        }
    }
}

/// `[(f^n)(z), (f^n)'(z), ..., (f^n)^(m)(z)]` at the precision of `z`.
///
/// The error bound follows rounding through each composition step: the
/// local rounding of Horner's rule (bounded with absolute values of one
/// step only) plus the incoming error pushed forward through `f'`.
pub fn jet_eval(f: &UniPoly<CRational>, n: u32, m: usize, z: &MpComplex) -> Result<JetEval> {
    let d = f
        .degree()
        .filter(|&d| d > 1)
        .ok_or_else(|| Error::InvalidInput("jet evaluation needs degree > 1".into()))?;
    let prec = z.prec();
    let coeffs: Vec<MpComplex> = f.coeffs().iter().map(|c| MpComplex::from_exact(c, prec)).collect();
    let abs_coeffs: Vec<LogMag> = f.coeffs().iter().map(|c| LogMag::from_f64(c.abs_f64())).collect();
    let dcoeffs: Vec<LogMag> = (1..=d)
        .map(|k| abs_coeffs[k].scale(k as f64))
        .collect();
    let u = LogMag(prec.roundoff_log2() + ((2 * d + 2) as f64 * (m as f64 + 1.0)).log2());

    let mut h = Jet::variable(z, m);
    let mut err = vec![LogMag::ZERO; m + 1];
    err[0] = LogMag(z.log2_abs() + prec.roundoff_log2());
    for _ in 0..n {
        let mag: Vec<LogMag> = h.taylor.iter().map(|c| LogMag(c.log2_abs())).collect();
        let local = compose_mag(&abs_coeffs, &mag);
        let slope = compose_mag(&dcoeffs, &mag);
        let pushed = mul_mag(&slope, &err);
        err = pushed
            .iter()
            .zip(&local)
            .map(|(p, l)| p.add(l.mul(u)))
            .collect();
        h = Jet::compose_poly(&coeffs, &h);
    }
    Ok(JetEval {
        jet: h,
        err_log2: err.iter().map(|e| e.0).collect(),
    })
}

fn mul_mag(a: &[LogMag], b: &[LogMag]) -> Vec<LogMag> {
    (0..a.len())
        .map(|k| (0..=k).fold(LogMag::ZERO, |acc, j| acc.add(a[j].mul(b[k - j]))))
        .collect()
}

fn compose_mag(coeffs: &[LogMag], h: &[LogMag]) -> Vec<LogMag> {
    let m = h.len();
    let mut acc = vec![LogMag::ZERO; m];
    for c in coeffs.iter().rev() {
        acc = mul_mag(&acc, h);
        acc[0] = acc[0].add(*c);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{Precision, Ring};
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn mp(re: f64, im: f64) -> MpComplex {
        MpComplex::from_c64(Complex64::new(re, im), Precision::DEFAULT)
    }

    fn cpoly(s: &str) -> UniPoly<CRational> {
        UniPoly::parse(s).unwrap()
    }

    fn derivs(e: &JetEval) -> Vec<Complex64> {
        e.jet.derivatives().iter().map(|v| v.to_c64()).collect()
    }

    #[test]
    fn jet_examples() {
        let z2 = cpoly("[0, 0, 1]");
        assert_eq!(derivs(&jet_eval(&z2, 2, 1, &mp(2.0, 0.0)).unwrap()), vec![16.0.into(), 32.0.into()]);
        assert_eq!(
            derivs(&jet_eval(&z2, 3, 2, &mp(1.0, 0.0)).unwrap()),
            vec![1.0.into(), 8.0.into(), 56.0.into()]
        );
        // (z^2+1)^2+1 = z^4+2z^2+2, derivative 4z^3+4z: both checked against the expansion
        let f = cpoly("[1, 0, 1]");
        let ex = f.iterate(2, 64).unwrap();
        let one = CRational::real(1);
        let oracle = vec![ex.eval(&one).to_c64(), ex.derivative(1).eval(&one).to_c64()];
        assert_eq!(oracle, vec![5.0.into(), 8.0.into()]);
        assert_eq!(derivs(&jet_eval(&f, 2, 1, &mp(1.0, 0.0)).unwrap()), oracle);
    }

    #[test]
    fn error_bound_is_small_for_benign_input() {
        let f = cpoly("[0.3, 0, 1]");
        let e = jet_eval(&f, 8, 3, &mp(0.4, 0.7)).unwrap();
        assert!(e.check(1e-20).is_ok());
        let low = MpComplex::from_c64(Complex64::new(0.4, 0.7), Precision::new(53).unwrap());
        let e = jet_eval(&f, 30, 3, &low).unwrap();
        assert!(matches!(e.check(1e-20), Err(Error::PrecisionLoss { .. })));
    }

    #[test]
    fn leibniz_on_known_pair() {
        // (z^3)(e-free polynomial 1+z) at z = 2, orders up to 3
        let z = mp(2.0, 0.0);
        let a = Jet::compose_poly(&[mp(0.0, 0.0), mp(0.0, 0.0), mp(0.0, 0.0), mp(1.0, 0.0)], &Jet::variable(&z, 3));
        let b = Jet::compose_poly(&[mp(1.0, 0.0), mp(1.0, 0.0)], &Jet::variable(&z, 3));
        let ab = a.mul(&b);
        // z^3 + z^4: 24, 3*4+4*8=44, 6*2+12*4=60, 6+24*2=54
        let d: Vec<f64> = ab.derivatives().iter().map(|v| v.to_c64().re).collect();
        assert_eq!(d, vec![24.0, 44.0, 60.0, 54.0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn jet_matches_expansion(re in -1.5f64..1.5, im in -1.5f64..1.5, n in 1u32..=6, m in 0usize..=3,
                                 c0 in -1.0f64..1.0, c1 in -1.0f64..1.0) {
            let f = UniPoly::new(vec![
                CRational::from_c64(Complex64::new(c0, 0.25)).unwrap(),
                CRational::from_c64(Complex64::new(c1, 0.0)).unwrap(),
                CRational::real(1),
            ]);
            let z = mp(re, im);
            let e = jet_eval(&f, n, m, &z).unwrap();
            let expanded = f.iterate(n, 1024).unwrap();
            let zr = CRational::from_c64(Complex64::new(re, im)).unwrap();
            for k in 0..=m {
                let exact = expanded.derivative(k).eval(&zr);
                let scale = expanded.derivative(k).map(|c| CRational::real(rug::Rational::from_f64(c.abs_f64()).unwrap()))
                    .eval(&CRational::real(rug::Rational::from_f64(zr.abs_f64()).unwrap())).re.to_f64().max(1.0);
                let got = e.jet.derivative(k).to_prec(Precision::new(512).unwrap());
                let diff = got.sub(&MpComplex::from_exact(&exact, Precision::new(512).unwrap())).abs().to_f64();
                let allowed = (10.0 - 128.0f64).exp2() * scale;
                prop_assert!(diff <= allowed, "k={} diff={} allowed={}", k, diff, allowed);
            }
        }

        #[test]
        fn leibniz_random(a in proptest::collection::vec(-3.0f64..3.0, 4), b in proptest::collection::vec(-3.0f64..3.0, 4)) {
            let ja = Jet::from_derivatives(&a.iter().map(|&x| mp(x, 0.5)).collect::<Vec<_>>());
            let jb = Jet::from_derivatives(&b.iter().map(|&x| mp(-0.25, x)).collect::<Vec<_>>());
            let prod = ja.mul(&jb).derivatives();
            for k in 0..4 {
                let mut expect = Complex64::new(0.0, 0.0);
                for j in 0..=k {
                    let binom = [[1.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0], [1.0, 2.0, 1.0, 0.0], [1.0, 3.0, 3.0, 1.0]][k][j];
                    expect += binom * Complex64::new(a[j], 0.5) * Complex64::new(-0.25, b[k - j]);
                }
                prop_assert!((prod[k].to_c64() - expect).norm() < 1e-12 * (1.0 + expect.norm()));
            }
        }
    }
}
