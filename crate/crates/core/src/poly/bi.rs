use crate::error::{Error, Result};
use crate::poly::uni::{parse_list, UniPoly};
use crate::scalar::{CRational, Ring};

/// Degree cap for exact bivariate expansion.
pub const BI_DEGREE_CAP: usize = 64;

/// Dense bivariate polynomial; `coeffs[i][j]` multiplies `z^i w^j`.
///
/// Storage is rectangular, `(deg_z + 1) x (deg_w + 1)`, trimmed so the last
/// row and the last column each contain a nonzero entry. The zero polynomial
/// has no rows.
#[derive(Clone, Debug, PartialEq)]
pub struct BiPoly<T> {
    coeffs: Vec<Vec<T>>,
}

impl<T: Ring> BiPoly<T> {
    pub fn new(coeffs: Vec<Vec<T>>) -> Self {
        let mut p = BiPoly { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        BiPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: T) -> Self {
        BiPoly::new(vec![vec![c]])
    }

    /// The coordinate function `z`.
    pub fn z(like: &T) -> Self {
        BiPoly::new(vec![vec![like.zero_like()], vec![like.one_like()]])
    }

    /// The coordinate function `w`.
    pub fn w(like: &T) -> Self {
        BiPoly::new(vec![vec![like.zero_like(), like.one_like()]])
    }

    /// Embeds a polynomial in `z`.
    pub fn from_uni_z(p: &UniPoly<T>) -> Self {
        BiPoly::new(p.coeffs().iter().map(|c| vec![c.clone()]).collect())
    }

    fn trim(&mut self) {
        let width = self
            .coeffs
            .iter()
            .filter_map(|row| row.iter().rposition(|c| !c.is_zero()))
            .max()
            .map(|j| j + 1);
        match width {
            None => self.coeffs.clear(),
            Some(w) => {
                let zero = self
                    .coeffs
                    .iter()
                    .flat_map(|r| r.first())
                    .next()
                    .expect("nonempty")
                    .zero_like();
                for row in &mut self.coeffs {
                    row.resize(w, zero.clone());
                }
                while self.coeffs.last().is_some_and(|r| r.iter().all(Ring::is_zero)) {
                    self.coeffs.pop();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, i: usize, j: usize) -> Option<&T> {
        self.coeffs.get(i).and_then(|r| r.get(j))
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.coeffs
    }

    pub fn deg_z(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn deg_w(&self) -> Option<usize> {
        self.coeffs.first().map(|r| r.len() - 1)
    }

    /// Largest `i + j` over the nonzero support.
    pub fn total_degree(&self) -> Option<usize> {
        let mut best = None;
        for (i, row) in self.coeffs.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if !c.is_zero() {
                    best = Some(best.map_or(i + j, |b: usize| b.max(i + j)));
                }
            }
        }
        best
    }

    pub fn eval(&self, z: &T, w: &T) -> T {
        let mut acc = z.zero_like();
        for row in self.coeffs.iter().rev() {
            let mut inner = z.zero_like();
            for c in row.iter().rev() {
                inner = inner.mul(w).add(c);
            }
            acc = acc.mul(z).add(&inner);
        }
        acc
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let zero = self.coeffs[0][0].zero_like();
        let rows = self.coeffs.len().max(other.coeffs.len());
        let cols = self.coeffs[0].len().max(other.coeffs[0].len());
        let mut out = vec![vec![zero; cols]; rows];
        for src in [&self.coeffs, &other.coeffs] {
            for (i, row) in src.iter().enumerate() {
                for (j, c) in row.iter().enumerate() {
                    out[i][j].add_assign(c);
                }
            }
        }
        BiPoly::new(out)
    }

    pub fn neg(&self) -> Self {
        BiPoly {
            coeffs: self.coeffs.iter().map(|r| r.iter().map(Ring::neg).collect()).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &T) -> Self {
        BiPoly::new(self.coeffs.iter().map(|r| r.iter().map(|a| a.mul(c)).collect()).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return BiPoly::zero();
        }
        let zero = self.coeffs[0][0].zero_like();
        let rows = self.coeffs.len() + other.coeffs.len() - 1;
        let cols = self.coeffs[0].len() + other.coeffs[0].len() - 1;
        let mut out = vec![vec![zero; cols]; rows];
        for (i1, r1) in self.coeffs.iter().enumerate() {
            for (j1, a) in r1.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                for (i2, r2) in other.coeffs.iter().enumerate() {
                    let row = &mut out[i1 + i2];
                    for (j2, b) in r2.iter().enumerate() {
                        if !b.is_zero() {
                            row[j1 + j2].add_assign(&a.mul(b));
                        }
                    }
                }
            }
        }
        BiPoly::new(out)
    }

    pub fn partial_z(&self) -> Self {
        BiPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, r)| r.iter().map(|c| c.mul_u64(i as u64)).collect())
                .collect(),
        )
    }

    pub fn partial_w(&self) -> Self {
        let Some(zero) = self.coeffs.first().map(|r| r[0].zero_like()) else {
            return BiPoly::zero();
        };
        BiPoly::new(
            self.coeffs
                .iter()
                .map(|r| {
                    let row: Vec<T> = r
                        .iter()
                        .enumerate()
                        .skip(1)
                        .map(|(j, c)| c.mul_u64(j as u64))
                        .collect();
                    if row.is_empty() {
                        vec![zero.clone()]
                    } else {
                        row
                    }
                })
                .collect(),
        )
    }

    /// `p(self)` for a univariate `p`, capped at `max_degree` in total degree.
    pub fn compose_into(&self, p: &UniPoly<T>, max_degree: usize) -> Result<Self> {
        let Some(dp) = p.degree() else {
            return Ok(BiPoly::zero());
        };
        let inner = self.total_degree().unwrap_or(0);
        let needed = dp as u128 * inner as u128;
        if needed > max_degree as u128 {
            return Err(Error::Capacity {
                what: "bivariate composed degree",
                needed,
                limit: max_degree as u128,
            });
        }
        let mut acc = BiPoly::constant(p.coeffs()[dp].clone());
        for c in p.coeffs()[..dp].iter().rev() {
            acc = acc.mul(self).add(&BiPoly::constant(c.clone()));
        }
        Ok(acc)
    }

    /// Substitutes `z -> zs`, `w -> ws`.
    pub fn substitute(&self, zs: &Self, ws: &Self) -> Self {
        let mut acc = BiPoly::zero();
        for row in self.coeffs.iter().rev() {
            let mut inner = BiPoly::zero();
            for c in row.iter().rev() {
                inner = inner.mul(ws).add(&BiPoly::constant(c.clone()));
            }
            acc = acc.mul(zs).add(&inner);
        }
        acc
    }

    /// Restriction to `w = 0`, as a polynomial in `z`.
    pub fn restrict_w0(&self) -> UniPoly<T> {
        UniPoly::new(self.coeffs.iter().map(|r| r[0].clone()).collect())
    }

    pub fn map<U: Ring>(&self, f: impl Fn(&T) -> U) -> BiPoly<U> {
        BiPoly::new(self.coeffs.iter().map(|r| r.iter().map(&f).collect()).collect())
    }
}

impl BiPoly<CRational> {
    /// Parses nested ascending lists, `[[c00, c01], [c10, c11]]`, row index
    /// the `z`-degree.
    pub fn parse(s: &str) -> Result<Self> {
        let rows = parse_list(s)?;
        let mut out = Vec::with_capacity(rows.len());
        for r in rows {
            let items = parse_list(&r)?;
            out.push(
                items
                    .iter()
                    .map(|t| t.parse::<CRational>())
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        let width = out.iter().map(Vec::len).max().unwrap_or(0);
        for r in &mut out {
            r.resize(width, CRational::default());
        }
        Ok(BiPoly::new(out))
    }
}
