use rug::integer::IsPrime;
use rug::Integer;
use serde::Serialize;

use crate::dynamics::PolyMap;
use crate::error::{Error, Result};
use crate::poly::{UniPoly, UNI_DEGREE_CAP};

/// Largest power `e` with `p^e | x`.
pub fn padic_valuation(x: &Integer, p: u64) -> Result<u32> {
    if x.cmp0() == std::cmp::Ordering::Equal {
        return Err(Error::InvalidInput("valuation of zero".into()));
    }
    let p = Integer::from(p);
    if p.is_probably_prime(30) == IsPrime::No {
        return Err(Error::InvalidInput(format!("{p} is not prime")));
    }
    Ok(x.clone().remove_factor_mut(&p))
}

/// `log x` for a positive integer of any size.
pub(crate) fn ln_integer(x: &Integer) -> f64 {
    let bits = x.significant_bits();
    if bits <= 1000 {
        return x.to_f64().ln();
    }
    let shift = bits - 64;
    Integer::from(x >> shift).to_f64().ln() + shift as f64 * std::f64::consts::LN_2
}

/// Where a divisor came from: `[(f^n)^(m) = a]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub map: String,
    pub n: u32,
    pub m: usize,
    pub a: String,
}

/// A divisor over the rationals, held as its primitive integer
/// representative with positive leading coefficient.
#[derive(Clone, Debug)]
pub struct DivisorQ {
    representative: UniPoly<Integer>,
    content: Integer,
    provenance: Option<Provenance>,
}

impl DivisorQ {
    /// Primitive part of any nonconstant integer polynomial.
    pub fn from_polynomial(p: &UniPoly<Integer>, provenance: Option<Provenance>) -> Result<Self> {
        if p.degree().unwrap_or(0) == 0 {
            return Err(Error::InvalidInput("divisor needs a nonconstant polynomial".into()));
        }
        let (content, representative) = p.primitive_part()?;
        Ok(DivisorQ {
            representative,
            content,
            provenance,
        })
    }

    pub fn representative(&self) -> &UniPoly<Integer> {
        &self.representative
    }

    /// Content removed from the polynomial it was built from.
    pub fn content(&self) -> &Integer {
        &self.content
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn degree(&self) -> usize {
        self.representative.degree().expect("nonconstant")
    }

    /// `b_D > 0`.
    pub fn leading(&self) -> &Integer {
        self.representative.leading().expect("nonconstant")
    }
}

/// Coefficients of a monic integer map, or an error naming the violation.
pub(crate) fn monic_integer(f: &PolyMap) -> Result<UniPoly<Integer>> {
    let p = f
        .poly()
        .to_integer()
        .ok_or_else(|| Error::InvalidInput("map must have integer coefficients".into()))?;
    if *p.leading().expect("degree > 1") != 1 {
        return Err(Error::InvalidInput("map must be monic".into()));
    }
    Ok(p)
}

/// Exact `(f^n)^(m) - a`, reduced to primitive form.
pub fn divisor_representative(f: &PolyMap, n: u32, m: usize, a: &Integer) -> Result<DivisorQ> {
    let p = monic_integer(f)?;
    let dn = (f.degree() as u128).checked_pow(n).unwrap_or(u128::MAX);
    if dn <= m as u128 {
        return Err(Error::InvalidInput(format!("d^n = {dn} must exceed m = {m}")));
    }
    let h = p.iterate(n, UNI_DEGREE_CAP)?.derivative(m);
    let h = h.sub(&UniPoly::constant(a.clone()));
    let provenance = Provenance {
        map: f.poly().to_string(),
        n,
        m,
        a: a.to_string(),
    };
    DivisorQ::from_polynomial(&h, Some(provenance))
}

/// One prime's share `v_p(b_D) log p` of the finite-place sum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrimeTerm {
    pub prime: u64,
    pub valuation: u32,
    pub value: f64,
}

/// `Σ_p v_p(b_D) log p = log b_D`, with its factorisation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiniteContribution {
    pub value: f64,
    pub primes: Vec<PrimeTerm>,
    /// Part of `b_D` left after dividing out small primes; `1` when the
    /// breakdown is complete.
    pub cofactor: String,
}

/// Trial-division bound for the per-prime breakdown.
const TRIAL_BOUND: u64 = 1 << 20;

pub fn finite_places_contribution(div: &DivisorQ) -> FiniteContribution {
    let mut rest = div.leading().clone();
    let mut primes = Vec::new();
    let mut p = 2u64;
    while p <= TRIAL_BOUND && rest > 1 {
        if Integer::from(p).square() > rest {
            break;
        }
        let e = rest.remove_factor_mut(&Integer::from(p));
        if e > 0 {
            primes.push(PrimeTerm {
                prime: p,
                valuation: e,
                value: e as f64 * (p as f64).ln(),
            });
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if rest > 1 {
        if let Some(q) = rest.to_u64().filter(|_| rest.is_probably_prime(30) != IsPrime::No) {
            primes.push(PrimeTerm {
                prime: q,
                valuation: 1,
                value: (q as f64).ln(),
            });
            rest = Integer::from(1);
        }
    }
    let value = primes.iter().map(|t| t.value).sum::<f64>() + if rest > 1 { ln_integer(&rest) } else { 0.0 };
    FiniteContribution {
        value,
        primes,
        cofactor: rest.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(x: i64) -> Integer {
        Integer::from(x)
    }

    #[test]
    fn valuations() {
        assert_eq!(padic_valuation(&int(48), 2).unwrap(), 4);
        assert_eq!(padic_valuation(&int(48), 5).unwrap(), 0);
        assert_eq!(padic_valuation(&(Integer::from(1) << 200u32), 2).unwrap(), 200);
        assert_eq!(padic_valuation(&int(-45), 3).unwrap(), 2);
        assert!(padic_valuation(&int(0), 2).is_err());
        assert!(padic_valuation(&int(8), 4).is_err());
    }

    #[test]
    fn representative_examples() {
        let z2 = PolyMap::parse("[0, 0, 1]").unwrap();
        let div = divisor_representative(&z2, 3, 1, &int(1)).unwrap();
        assert_eq!(div.representative().to_string(), UniPoly::parse("[-1, 0, 0, 0, 0, 0, 0, 8]").unwrap().to_integer().unwrap().to_string());
        assert_eq!(div.degree(), 7);
        assert_eq!(*div.leading(), 8);
        let div = divisor_representative(&z2, 2, 2, &int(0)).unwrap();
        assert_eq!(div.degree(), 2);
        assert_eq!(*div.content(), 12);
        assert_eq!(*div.leading(), 1);
        // f = z^2 + 1, n = 4: leading coefficient 2^4 before reduction
        let f = PolyMap::parse("[1, 0, 1]").unwrap();
        let div = divisor_representative(&f, 4, 1, &int(1)).unwrap();
        assert_eq!(Integer::from(div.content() * div.leading()), 16);
        assert!(divisor_representative(&PolyMap::parse("[0, 0, 2]").unwrap(), 2, 1, &int(1)).is_err());
        assert!(divisor_representative(&PolyMap::parse("[0.5, 0, 1]").unwrap(), 2, 1, &int(1)).is_err());
    }

    #[test]
    fn unreduced_leading_is_falling_factorial() {
        let f = PolyMap::parse("[2, -1, 3, 1]").unwrap();
        for (n, m) in [(1u32, 0usize), (2, 1), (2, 3), (3, 2)] {
            let div = divisor_representative(&f, n, m, &int(5)).unwrap();
            let dn = 3u64.pow(n);
            let want: u64 = (0..m as u64).map(|i| dn - i).product();
            assert_eq!(Integer::from(div.content() * div.leading()), want);
        }
    }

    #[test]
    fn finite_examples() {
        let z2 = PolyMap::parse("[0, 0, 1]").unwrap();
        let c = finite_places_contribution(&divisor_representative(&z2, 3, 1, &int(1)).unwrap());
        assert!((c.value - 3.0 * 2f64.ln()).abs() < 1e-15);
        assert_eq!(c.primes, vec![PrimeTerm { prime: 2, valuation: 3, value: 3.0 * 2f64.ln() }]);
        let monic = DivisorQ::from_polynomial(&UniPoly::new(vec![int(3), int(1)]), None).unwrap();
        assert_eq!(finite_places_contribution(&monic).value, 0.0);
        let p = DivisorQ::from_polynomial(&UniPoly::new(vec![int(1), int(0), int(12)]), None).unwrap();
        let c = finite_places_contribution(&p);
        assert!((c.value - 12f64.ln()).abs() < 1e-14);
        assert_eq!(c.primes.iter().map(|t| (t.prime, t.valuation)).collect::<Vec<_>>(), vec![(2, 2), (3, 1)]);
        assert_eq!(c.cofactor, "1");
    }

    #[test]
    fn large_integer_logs() {
        let x = Integer::from(3) << 5000u32;
        assert!((ln_integer(&x) - (3f64.ln() + 5000.0 * 2f64.ln())).abs() < 1e-10);
    }
}
