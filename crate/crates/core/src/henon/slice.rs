use num_complex::Complex64;

use super::green::HenonGreen;
use super::map::{det_jacobian_shift, HenonMap, ShiftMatrix};
use crate::equidist::{DiscrepancyReport, DivisorLabel};
use crate::error::{Error, Result};
use crate::poly::{BiPoly, UniPoly, BI_DEGREE_CAP};
use crate::roots::{aberth_solve, DenseTarget, Evaluator, Initial, RootSet, RootTarget, SolveOptions};
use crate::scalar::{CRational, CScalar, MpComplex, Precision, Ring, XComplex};

/// The complex line `s -> base + s dir`.
#[derive(Clone, Debug, PartialEq)]
pub struct Line {
    pub base: [CRational; 2],
    pub dir: [CRational; 2],
}

impl Line {
    pub fn new(base: [CRational; 2], dir: [CRational; 2]) -> Result<Self> {
        if dir.iter().all(Ring::is_zero) {
            return Err(Error::InvalidInput("line direction must be nonzero".into()));
        }
        Ok(Line { base, dir })
    }

    /// `w = 0`, parametrised by `z`.
    pub fn w_zero() -> Self {
        Line {
            base: [CRational::real(0), CRational::real(0)],
            dir: [CRational::real(1), CRational::real(0)],
        }
    }

    pub fn point(&self, s: Complex64) -> (Complex64, Complex64) {
        (self.base[0].to_c64() + s * self.dir[0].to_c64(), self.base[1].to_c64() + s * self.dir[1].to_c64())
    }
}

/// Roots of `det(D(f^n) - A)` along a line, with the potential gaps
/// `|(log|lead| + Σ log|s - s_i|)/(d^n - 1) - g⁺(base + s dir)|`.
#[derive(Clone, Debug)]
pub struct SliceResult {
    pub roots: RootSet,
    /// Degree of the restriction, at most `d^n - 1`.
    pub degree: usize,
    pub report: DiscrepancyReport,
    /// The restriction, when it was expanded exactly.
    pub restriction: Option<UniPoly<CRational>>,
}

/// Exact restriction of a bivariate polynomial to a line.
pub fn restrict_to_line(p: &BiPoly<CRational>, line: &Line) -> UniPoly<CRational> {
    let affine = |b: &CRational, v: &CRational| BiPoly::new(vec![vec![b.clone()], vec![v.clone()]]);
    p.substitute(&affine(&line.base[0], &line.dir[0]), &affine(&line.base[1], &line.dir[1]))
        .restrict_w0()
}

pub fn slice_roots(g: &HenonGreen, n: u32, a: &ShiftMatrix, line: &Line, test_params: &[Complex64], opts: &SolveOptions) -> Result<SliceResult> {
    let h = g.map();
    let dn = (h.degree() as u128).checked_pow(n).unwrap_or(u128::MAX);
    if n == 0 || dn > crate::roots::VALUE_SET_DEGREE_CAP {
        return Err(Error::InvalidInput(format!("n = {n} out of range")));
    }
    let (roots, lead_ln, restriction) = if dn <= BI_DEGREE_CAP as u128 {
        let poly = restrict_to_line(&det_jacobian_shift(h, n, a)?, line);
        let target = DenseTarget::new(poly.clone()).ok_or_else(|| {
            Error::Degenerate("restriction of det(D(f^n) - A) to the line is constant".into())
        })?;
        let lead = XComplex::from_exact(poly.leading().expect("nonconstant"), ()).ln_abs();
        (aberth_solve(&target, Initial::Circles, opts)?, lead, Some(poly))
    } else {
        let target = SliceTarget::new(h, n, a, line)?;
        let lead = target.leading_log2() * std::f64::consts::LN_2;
        (aberth_solve(&target, Initial::Circles, opts)?, lead, None)
    };
    let norm = dn as f64 - 1.0;
    let mut gaps = Vec::with_capacity(test_params.len());
    let mut errs = Vec::with_capacity(test_params.len());
    let pts = roots.points();
    for &s in test_params {
        let pt = line.point(s);
        let gv = g.green_plus(pt)?.certified(s)?;
        let pot = (lead_ln + pts.iter().map(|r| (s - r).norm().ln()).sum::<f64>()) / norm;
        gaps.push((pot - gv.value).abs());
        errs.push(gv.err);
    }
    let max_gap = gaps.iter().copied().fold(0.0, f64::max);
    Ok(SliceResult {
        degree: roots.degree,
        roots,
        report: DiscrepancyReport {
            label: DivisorLabel {
                n,
                m: 1,
                a: "det(Df^n - A)".into(),
            },
            test_points: test_params.to_vec(),
            gaps,
            errs,
            max_gap,
        },
        restriction,
    })
}

/// `s -> det(D(f^n) - A)(base + s dir)`, evaluated along the orbit with
/// first derivatives in `s`. Needs `dir_z ≠ 0` so the degree is `d^n - 1`.
struct SliceTarget<'a> {
    map: &'a HenonMap,
    n: u32,
    a: &'a ShiftMatrix,
    line: &'a Line,
    degree: usize,
    leading_log2: f64,
    fallback: f64,
}

impl<'a> SliceTarget<'a> {
    fn new(map: &'a HenonMap, n: u32, a: &'a ShiftMatrix, line: &'a Line) -> Result<Self> {
        if line.dir[0].is_zero() {
            return Err(Error::Degenerate("evaluation-only slices need a direction with nonzero z-component".into()));
        }
        let d = map.degree() as f64;
        let dn = d.powi(n as i32);
        // top part of ∂_z P_n is d^n c_d^((d^n-1)/(d-1)) z^(d^n-1)
        let leading_log2 = a.entries()[3].to_c64().norm().log2()
            + dn.log2()
            + (dn - 1.0) / (d - 1.0) * map.leading().norm().log2()
            + (dn - 1.0) * line.dir[0].to_c64().norm().log2();
        let base = line.base[0].to_c64().norm().max(line.base[1].to_c64().norm());
        Ok(SliceTarget {
            map,
            n,
            a,
            line,
            degree: dn as usize - 1,
            leading_log2,
            fallback: 2.0 * (map.escape_radius() + base) / line.dir[0].to_c64().norm(),
        })
    }
}

#[derive(Clone)]
struct Dual<S> {
    v: S,
    ds: S,
}

struct SliceEval<S> {
    coeffs: Vec<S>,
    delta: S,
    a: [S; 4],
    base: [S; 2],
    dir: [S; 2],
    n: u32,
}

impl<S: CScalar> SliceEval<S> {
    fn build(t: &SliceTarget<'_>, ctx: S::Ctx) -> Self {
        let ex = |c: &CRational| S::from_exact(c, ctx);
        SliceEval {
            coeffs: t.map.p().coeffs().iter().map(ex).collect(),
            delta: ex(t.map.delta()),
            a: t.a.entries().clone().map(|c| ex(&c)),
            base: [ex(&t.line.base[0]), ex(&t.line.base[1])],
            dir: [ex(&t.line.dir[0]), ex(&t.line.dir[1])],
            n: t.n,
        }
    }

    /// `(p, p', p'')` at `z`.
    fn p3(&self, z: &S) -> (S, S, S) {
        let mut p = z.zero_like();
        let mut dp = z.zero_like();
        let mut ddp = z.zero_like();
        for c in self.coeffs.iter().rev() {
            ddp = ddp.mul(z).add(&dp);
            dp = dp.mul(z).add(&p);
            p = p.mul(z).add(c);
        }
        (p, dp, ddp.mul_u64(2))
    }
}

impl<S: CScalar> Evaluator<S> for SliceEval<S> {
    fn eval(&self, s: &S) -> (S, S) {
        let zero = s.zero_like();
        let one = s.one_like();
        let dual = |v: S, ds: S| Dual { v, ds };
        let mut z = dual(self.base[0].add(&s.mul(&self.dir[0])), self.dir[0].clone());
        let mut w = dual(self.base[1].add(&s.mul(&self.dir[1])), self.dir[1].clone());
        // rows of D(f^k): [∂_z P, ∂_w P], [∂_z Q, ∂_w Q]
        let mut r1 = [dual(one.clone(), zero.clone()), dual(zero.clone(), zero.clone())];
        let mut r2 = [dual(zero.clone(), zero.clone()), dual(one.clone(), zero.clone())];
        let mut jn = one.clone();
        for _ in 0..self.n {
            let (p, dp, ddp) = self.p3(&z.v);
            let dp_s = ddp.mul(&z.ds);
            let row = |i: usize| {
                dual(
                    dp.mul(&r1[i].v).sub(&self.delta.mul(&r2[i].v)),
                    dp_s.mul(&r1[i].v).add(&dp.mul(&r1[i].ds)).sub(&self.delta.mul(&r2[i].ds)),
                )
            };
            let new_r1 = [row(0), row(1)];
            r2 = std::mem::replace(&mut r1, new_r1);
            let new_z = dual(p.sub(&self.delta.mul(&w.v)), dp.mul(&z.ds).sub(&self.delta.mul(&w.ds)));
            w = std::mem::replace(&mut z, new_z);
            jn = jn.mul(&self.delta);
        }
        let [a1, a2, a3, a4] = &self.a;
        let det_a = a1.mul(a4).sub(&a2.mul(a3));
        let lin = |f: &dyn Fn(&Dual<S>) -> &S| {
            a4.mul(f(&r1[0]))
                .neg()
                .sub(&a1.mul(f(&r2[1])))
                .add(&a3.mul(f(&r1[1])))
                .add(&a2.mul(f(&r2[0])))
        };
        let value = jn.add(&det_a).add(&lin(&|d: &Dual<S>| &d.v));
        let deriv = lin(&|d: &Dual<S>| &d.ds);
        (value, deriv)
    }
}

impl RootTarget for SliceTarget<'_> {
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
        Box::new(SliceEval::<XComplex>::build(self, ()))
    }

    fn precise(&self, prec: Precision) -> Box<dyn Evaluator<MpComplex> + '_> {
        Box::new(SliceEval::<MpComplex>::build(self, prec))
    }
}
