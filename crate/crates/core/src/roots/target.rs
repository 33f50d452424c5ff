use crate::poly::{jet_iterate, UniPoly};
use crate::scalar::{CRational, CScalar, MpComplex, Precision, Ring, XComplex};

/// Black-box `z -> (p(z), p'(z))` at a fixed scalar type.
pub trait Evaluator<S>: Sync {
    fn eval(&self, z: &S) -> (S, S);
}

/// A polynomial whose roots are wanted, known only through evaluation.
pub trait RootTarget: Sync {
    fn degree(&self) -> usize;
    /// log2 of the modulus of the leading coefficient.
    fn leading_log2(&self) -> f64;
    /// Radius of the single-circle fallback configuration.
    fn fallback_radius(&self) -> f64;
    fn fast(&self) -> Box<dyn Evaluator<XComplex> + '_>;
    fn precise(&self, prec: Precision) -> Box<dyn Evaluator<MpComplex> + '_>;
}

struct Horner<S> {
    coeffs: Vec<S>,
}

impl<S: CScalar> Evaluator<S> for Horner<S> {
    fn eval(&self, z: &S) -> (S, S) {
        let mut p = z.zero_like();
        let mut dp = z.zero_like();
        for c in self.coeffs.iter().rev() {
            dp = dp.mul(z).add(&p);
            p = p.mul(z).add(c);
        }
        (p, dp)
    }
}

/// Explicit coefficient list.
#[derive(Clone, Debug)]
pub struct DenseTarget {
    poly: UniPoly<CRational>,
}

impl DenseTarget {
    /// `None` for constants.
    pub fn new(poly: UniPoly<CRational>) -> Option<Self> {
        poly.degree().filter(|&d| d > 0).map(|_| DenseTarget { poly })
    }

    pub fn poly(&self) -> &UniPoly<CRational> {
        &self.poly
    }
}

impl RootTarget for DenseTarget {
    fn degree(&self) -> usize {
        self.poly.degree().unwrap_or(0)
    }

    fn leading_log2(&self) -> f64 {
        self.poly.leading().map_or(f64::NEG_INFINITY, |c| XComplex::from_exact(c, ()).log2_abs())
    }

    fn fallback_radius(&self) -> f64 {
        // Fujiwara's bound
        let lead = self.leading_log2();
        let d = self.degree();
        let b = (0..d)
            .filter_map(|k| {
                let c = XComplex::from_exact(&self.poly.coeffs()[k], ());
                (!c.is_zero()).then(|| (c.log2_abs() - lead) / (d - k) as f64)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        if b.is_finite() {
            2.0 * b.exp2()
        } else {
            1.0
        }
    }

    fn fast(&self) -> Box<dyn Evaluator<XComplex> + '_> {
        Box::new(Horner {
            coeffs: self.poly.coeffs().iter().map(|c| XComplex::from_exact(c, ())).collect(),
        })
    }

    fn precise(&self, prec: Precision) -> Box<dyn Evaluator<MpComplex> + '_> {
        Box::new(Horner {
            coeffs: self.poly.coeffs().iter().map(|c| MpComplex::from_exact(c, prec)).collect(),
        })
    }
}

/// `(f^n)^(m) - a`, evaluated by jet propagation without expanding `f^n`.
#[derive(Clone, Debug)]
pub struct JetTarget {
    f: UniPoly<CRational>,
    n: u32,
    m: usize,
    a: CRational,
    degree: usize,
    leading_log2: f64,
    fallback: f64,
}

impl JetTarget {
    /// Callers guarantee `deg f > 1` and `deg(f)^n > m`.
    pub(crate) fn new(f: UniPoly<CRational>, n: u32, m: usize, a: CRational, degree: usize, escape_radius: f64) -> Self {
        let d = f.degree().expect("nonzero map") as f64;
        let dn = d.powi(n as i32);
        let lead = XComplex::from_exact(f.leading().expect("nonzero map"), ()).log2_abs();
        let leading_log2 = (dn - 1.0) / (d - 1.0) * lead + (0..m).map(|i| (dn - i as f64).log2()).sum::<f64>();
        JetTarget {
            f,
            n,
            m,
            a,
            degree,
            leading_log2,
            fallback: escape_radius + 1.0,
        }
    }
}

struct JetEvaluator<'a, S> {
    coeffs: Vec<S>,
    a: S,
    target: &'a JetTarget,
}

impl<S: CScalar> Evaluator<S> for JetEvaluator<'_, S> {
    fn eval(&self, z: &S) -> (S, S) {
        let m = self.target.m;
        let jet = jet_iterate(&self.coeffs, self.target.n, m + 1, z);
        (jet.derivative(m).sub(&self.a), jet.derivative(m + 1))
    }
}

impl RootTarget for JetTarget {
    fn degree(&self) -> usize {
        self.degree
    }

    fn leading_log2(&self) -> f64 {
        self.leading_log2
    }

    fn fallback_radius(&self) -> f64 {
        self.fallback
    }

    fn fast(&self) -> Box<dyn Evaluator<XComplex> + '_> {
        Box::new(JetEvaluator {
            coeffs: self.f.coeffs().iter().map(|c| XComplex::from_exact(c, ())).collect(),
            a: XComplex::from_exact(&self.a, ()),
            target: self,
        })
    }

    fn precise(&self, prec: Precision) -> Box<dyn Evaluator<MpComplex> + '_> {
        Box::new(JetEvaluator {
            coeffs: self.f.coeffs().iter().map(|c| MpComplex::from_exact(c, prec)).collect(),
            a: MpComplex::from_exact(&self.a, prec),
            target: self,
        })
    }
}
