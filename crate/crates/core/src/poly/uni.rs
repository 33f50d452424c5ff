use std::fmt;

use rug::Integer;

use crate::error::{Error, Result};
use crate::scalar::{CRational, Ring};

/// Degree cap for exact univariate expansion.
pub const UNI_DEGREE_CAP: usize = 1024;

/// Dense univariate polynomial, coefficients in ascending order.
///
/// The zero polynomial is the empty coefficient vector; otherwise the last
/// coefficient is nonzero.
#[derive(Clone, Debug, PartialEq)]
pub struct UniPoly<T> {
    coeffs: Vec<T>,
}

impl<T: Ring> UniPoly<T> {
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        UniPoly { coeffs }
    }

    pub fn zero() -> Self {
        UniPoly { coeffs: Vec::new() }
    }

    /// The polynomial `z`, with ring elements modelled on `like`.
    pub fn identity(like: &T) -> Self {
        UniPoly {
            coeffs: vec![like.zero_like(), like.one_like()],
        }
    }

    pub fn constant(c: T) -> Self {
        UniPoly::new(vec![c])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Option<&T> {
        self.coeffs.get(k)
    }

    pub fn leading(&self) -> Option<&T> {
        self.coeffs.last()
    }

    pub fn eval(&self, z: &T) -> T {
        let mut it = self.coeffs.iter().rev();
        let Some(first) = it.next() else {
            return z.zero_like();
        };
        let mut acc = first.clone();
        for c in it {
            acc = acc.mul(z).add(c);
        }
        acc
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            match (self.coeffs.get(k), other.coeffs.get(k)) {
                (Some(a), Some(b)) => out.push(a.add(b)),
                (Some(a), None) => out.push(a.clone()),
                (None, Some(b)) => out.push(b.clone()),
                (None, None) => unreachable!(),
            }
        }
        UniPoly::new(out)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        UniPoly {
            coeffs: self.coeffs.iter().map(Ring::neg).collect(),
        }
    }

    pub fn scale(&self, c: &T) -> Self {
        UniPoly::new(self.coeffs.iter().map(|a| a.mul(c)).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return UniPoly::zero();
        }
        let zero = self.coeffs[0].zero_like();
        let mut out = vec![zero; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                out[i + j].add_assign(&a.mul(b));
            }
        }
        UniPoly::new(out)
    }

    /// `self(q(z))`, failing if the result would exceed `max_degree`.
    pub fn compose(&self, q: &Self, max_degree: usize) -> Result<Self> {
        let Some(dp) = self.degree() else {
            return Ok(UniPoly::zero());
        };
        let Some(dq) = q.degree().filter(|_| dp > 0) else {
            return Ok(UniPoly::constant(self.coeffs[0].clone()));
        };
        let needed = dp as u128 * dq as u128;
        if needed > max_degree as u128 {
            return Err(Error::Capacity {
                what: "composed degree",
                needed,
                limit: max_degree as u128,
            });
        }
        let mut acc = UniPoly::constant(self.coeffs[dp].clone());
        for c in self.coeffs[..dp].iter().rev() {
            acc = acc.mul(q).add(&UniPoly::constant(c.clone()));
        }
        Ok(acc)
    }

    /// `f∘...∘f` (`n` times); `iterate(f, 0) = z`.
    pub fn iterate(&self, n: u32, max_degree: usize) -> Result<Self> {
        let d = self
            .degree()
            .filter(|&d| d > 1)
            .ok_or_else(|| Error::InvalidInput("iteration needs degree > 1".into()))?;
        let needed = (d as u128).checked_pow(n).unwrap_or(u128::MAX);
        if needed > max_degree as u128 {
            return Err(Error::Capacity {
                what: "iterate degree",
                needed,
                limit: max_degree as u128,
            });
        }
        let mut acc = UniPoly::identity(&self.coeffs[0]);
        for _ in 0..n {
            acc = self.compose(&acc, max_degree)?;
        }
        Ok(acc)
    }

    /// Formal `m`-th derivative.
    pub fn derivative(&self, m: usize) -> Self {
        if m >= self.coeffs.len() {
            return UniPoly::zero();
        }
        let out = (m..self.coeffs.len())
            .map(|k| {
                let falling: u64 = ((k - m + 1)..=k).map(|x| x as u64).product();
                self.coeffs[k].mul_u64(falling)
            })
            .collect();
        UniPoly::new(out)
    }

    pub fn map<U: Ring>(&self, f: impl Fn(&T) -> U) -> UniPoly<U> {
        UniPoly::new(self.coeffs.iter().map(f).collect())
    }
}

impl UniPoly<Integer> {
    /// `(content, primitive)` with `content > 0` and positive leading
    /// coefficient on the primitive part.
    pub fn primitive_part(&self) -> Result<(Integer, UniPoly<Integer>)> {
        let lead = self.leading().ok_or(Error::ZeroPolynomial("primitive part"))?;
        let mut g = Integer::new();
        for c in &self.coeffs {
            g.gcd_mut(c);
        }
        if lead.cmp0() == std::cmp::Ordering::Less {
            g = -g;
        }
        let prim = self
            .coeffs
            .iter()
            .map(|c| Integer::from(c.div_exact_ref(&g)))
            .collect();
        Ok((g.abs(), UniPoly::new(prim)))
    }

    pub fn to_crational(&self) -> UniPoly<CRational> {
        self.map(CRational::from_integer)
    }
}

impl UniPoly<CRational> {
    /// Integer polynomial, if every coefficient is a real integer.
    pub fn to_integer(&self) -> Option<UniPoly<Integer>> {
        let mut out = Vec::with_capacity(self.coeffs.len());
        for c in &self.coeffs {
            if !c.is_real() || *c.re.denom() != 1 {
                return None;
            }
            out.push(c.re.numer().clone());
        }
        Some(UniPoly::new(out))
    }

    /// Parses the ascending literal form `"[1, 0, 1]"` (that is `1 + z^2`).
    pub fn parse(s: &str) -> Result<Self> {
        let items = parse_list(s)?;
        let coeffs = items
            .iter()
            .map(|t| t.parse::<CRational>())
            .collect::<Result<Vec<_>>>()?;
        Ok(UniPoly::new(coeffs))
    }
}

/// Splits `"[a, b, c]"` into its top-level items.
pub(crate) fn parse_list(s: &str) -> Result<Vec<String>> {
    let t = s.trim();
    let inner = t
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| Error::Parse(format!("expected a bracketed list, got {s:?}")))?;
    let mut items = Vec::new();
    let mut depth = 0usize;
    let mut cur = String::new();
    for ch in inner.chars() {
        match ch {
            '[' => {
                depth += 1;
                cur.push(ch);
            }
            ']' => {
                depth = depth
                    .checked_sub(1)
                    .ok_or_else(|| Error::Parse(format!("unbalanced brackets in {s:?}")))?;
                cur.push(ch);
            }
            ',' if depth == 0 => {
                items.push(std::mem::take(&mut cur).trim().to_string());
            }
            _ => cur.push(ch),
        }
    }
    if depth != 0 {
        return Err(Error::Parse(format!("unbalanced brackets in {s:?}")));
    }
    let last = cur.trim().to_string();
    if !last.is_empty() {
        items.push(last);
    } else if !items.is_empty() {
        return Err(Error::Parse(format!("trailing comma in {s:?}")));
    }
    Ok(items)
}

impl<T: Ring + fmt::Display> fmt::Display for UniPoly<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, c) in self.coeffs.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rug::ops::Pow;

    fn ip(c: &[i64]) -> UniPoly<Integer> {
        UniPoly::new(c.iter().map(|&x| Integer::from(x)).collect())
    }

    #[test]
    fn compose_examples() {
        let z2 = ip(&[0, 0, 1]);
        assert_eq!(z2.compose(&z2, 1024).unwrap(), ip(&[0, 0, 0, 0, 1]));
        let f = ip(&[1, 0, 1]);
        assert_eq!(f.compose(&f, 1024).unwrap(), ip(&[2, 0, 2, 0, 1]));
        let p = ip(&[3, -1, 4, 1]);
        assert_eq!(p.compose(&ip(&[0, 1]), 1024).unwrap(), p);
    }

    #[test]
    fn compose_capacity() {
        let f = ip(&[0, 0, 1]);
        let big = f.iterate(5, 1024).unwrap();
        assert!(matches!(big.compose(&big, 1000), Err(Error::Capacity { .. })));
    }

    #[test]
    fn iterate_examples() {
        assert_eq!(ip(&[0, 0, 1]).iterate(3, 1024).unwrap(), ip(&[0, 0, 0, 0, 0, 0, 0, 0, 1]));
        assert_eq!(ip(&[1, 0, 1]).iterate(2, 1024).unwrap(), ip(&[2, 0, 2, 0, 1]));
        assert_eq!(ip(&[1, 0, 1]).iterate(0, 1024).unwrap(), ip(&[0, 1]));
        assert!(matches!(ip(&[0, 0, 1]).iterate(11, 1024), Err(Error::Capacity { .. })));
        assert!(ip(&[1, 1]).iterate(2, 1024).is_err());
    }

    #[test]
    fn iterate_leading_coefficient() {
        // c_d^((d^n - 1)/(d - 1)), checked symbolically for n <= 5
        for (coeffs, d, c) in [(vec![1, 2, 3], 2u32, 3i64), (vec![-1, 0, 0, 2], 3, 2), (vec![5, 1, -2], 2, -2)] {
            let f = ip(&coeffs);
            for n in 0..=5u32 {
                if (d as u64).pow(n) > 1024 {
                    continue;
                }
                let it = f.iterate(n, 1024).unwrap();
                assert_eq!(it.degree(), Some((d as usize).pow(n)));
                let e = (d.pow(n) - 1) / (d - 1);
                assert_eq!(*it.leading().unwrap(), Integer::from(c).pow(e));
            }
        }
    }

    #[test]
    fn derivative_examples() {
        let z8 = ip(&[0, 0, 0, 0, 0, 0, 0, 0, 1]);
        assert_eq!(z8.derivative(1), ip(&[0, 0, 0, 0, 0, 0, 0, 8]));
        assert_eq!(z8.derivative(2), ip(&[0, 0, 0, 0, 0, 0, 56]));
        assert!(ip(&[7]).derivative(1).is_zero());
        assert_eq!(ip(&[7]).derivative(1).degree(), None);
    }

    #[test]
    fn primitive_part_examples() {
        assert_eq!(ip(&[2, 0, 4]).primitive_part().unwrap(), (Integer::from(2), ip(&[1, 0, 2])));
        assert_eq!(ip(&[-1, 0, 0, 8]).primitive_part().unwrap(), (Integer::from(1), ip(&[-1, 0, 0, 8])));
        assert_eq!(ip(&[0, -3]).primitive_part().unwrap(), (Integer::from(3), ip(&[0, 1])));
        assert_eq!(UniPoly::<Integer>::zero().primitive_part(), Err(Error::ZeroPolynomial("primitive part")));
    }

    #[test]
    fn literal_parsing() {
        let p = UniPoly::<CRational>::parse("[1, 0, 1]").unwrap();
        assert_eq!(p.degree(), Some(2));
        let p = UniPoly::<CRational>::parse("[0.3, 0, 1]").unwrap();
        assert_eq!(p.coeffs()[0], "3/10".parse().unwrap());
        assert!(UniPoly::<CRational>::parse("1, 2").is_err());
        assert!(UniPoly::<CRational>::parse("[1, 2,]").is_err());
        assert_eq!(p.to_string(), "[3/10, 0, 1]");
    }

    proptest! {
        #[test]
        fn primitive_part_recombines(c in proptest::collection::vec(-1000i64..1000, 1..8), k in 1i64..50) {
            let p = ip(&c).scale(&Integer::from(k));
            prop_assume!(!p.is_zero());
            let (content, prim) = p.primitive_part().unwrap();
            prop_assert!(content > 0);
            prop_assert!(*prim.leading().unwrap() > 0);
            let back = prim.scale(&content);
            prop_assert!(back == p || back == p.neg());
        }

        #[test]
        fn compose_is_evaluation(a in proptest::collection::vec(-5i64..5, 1..5),
                                 b in proptest::collection::vec(-5i64..5, 1..5),
                                 x in -7i64..7) {
            let (p, q) = (ip(&a), ip(&b));
            let x = Integer::from(x);
            prop_assert_eq!(p.compose(&q, 1024).unwrap().eval(&x), p.eval(&q.eval(&x)));
        }
    }
}
