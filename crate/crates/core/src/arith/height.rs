use std::io::{self, Write};
use std::ops::RangeInclusive;

use num_complex::Complex64;
use rayon::prelude::*;
use rug::Integer;
use serde::{Serialize, Serializer};

use super::divisor::{divisor_representative, finite_places_contribution, DivisorQ, FiniteContribution, Provenance};
use crate::dynamics::{GreenEvaluator, GreenStatus, PolyMap};
use crate::error::{Error, Result};
use crate::roots::{aberth_solve, value_set_roots, vieta_sum_error, DenseTarget, Initial, RootSet, RootSetHeader, SolveOptions};
use crate::scalar::{CRational, CScalar, Precision, Ring, XComplex};

#[derive(Clone, Debug)]
pub struct HeightOptions {
    /// Bound on the certified error of `ĥ`, i.e. of the archimedean sum
    /// divided by the degree.
    pub tol: f64,
    pub solve: SolveOptions,
    pub green_max_iter: usize,
}

impl Default for HeightOptions {
    fn default() -> Self {
        HeightOptions {
            tol: 1e-10,
            solve: SolveOptions {
                tol: 1e-12,
                start_precision: Precision::new(512).expect("valid precision"),
                ..SolveOptions::default()
            },
            green_max_iter: 500,
        }
    }
}

/// A place of the rationals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Place {
    Prime(u64),
    Infinite,
}

impl Serialize for Place {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Place::Prime(p) => s.serialize_str(&p.to_string()),
            Place::Infinite => s.serialize_str("inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PlaceContribution {
    pub place: Place,
    pub value: f64,
    pub err: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertStatus {
    Certified,
    /// Some roots were neither seen to escape nor trapped; their Green
    /// values enter as intervals.
    Partial { undecided: usize },
}

impl CertStatus {
    pub fn label(&self) -> &'static str {
        match self {
            CertStatus::Certified => "certified",
            CertStatus::Partial { .. } => "partial",
        }
    }
}

/// `Σ g_f(z)` over the roots of a divisor, enclosed in `[lower, upper]`.
#[derive(Clone, Debug)]
pub struct ArchimedeanContribution {
    pub value: f64,
    pub err: f64,
    pub lower: f64,
    pub upper: f64,
    /// `Σ log⁺|z|` over the same roots.
    pub naive: f64,
    pub status: CertStatus,
    pub roots: RootSet,
    /// `|Σ z_i + b_(D-1)/b_D|` against the exact coefficients.
    pub vieta_error: f64,
}

/// All roots of the representative, certified on its exact coefficients.
///
/// Divisors that remember their map start from roots found by jet evaluation
/// of the iterate, which avoids evaluating the expanded coefficients during
/// the coarse stage.
pub fn divisor_roots(div: &DivisorQ, f: &PolyMap, opts: &SolveOptions) -> Result<RootSet> {
    let poly = div.representative().to_crational();
    let target = DenseTarget::new(poly).ok_or_else(|| Error::InvalidInput("constant divisor".into()))?;
    let init = match div.provenance() {
        Some(p) if p.map == f.poly().to_string() => {
            let a = CRational::from_integer(&p.a.parse::<Integer>().map_err(|e| Error::Parse(e.to_string()))?);
            let coarse = SolveOptions {
                start_precision: Precision::DEFAULT.max(opts.start_precision.min(Precision::new(256)?)),
                ..opts.clone()
            };
            Initial::Points(value_set_roots(f, p.n, p.m, &a, &coarse)?.roots)
        }
        _ => Initial::Circles,
    };
    aberth_solve(&target, init, opts)
}

pub fn archimedean_contribution(div: &DivisorQ, g: &GreenEvaluator, tol: f64, solve: &SolveOptions) -> Result<ArchimedeanContribution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }
    let roots = divisor_roots(div, g.map(), solve)?;
    let per_root = tol / roots.degree as f64;
    let values = roots
        .points()
        .into_par_iter()
        .map(|z| g.green_value(z, per_root).map(|v| (v, z)))
        .collect::<Result<Vec<_>>>()?;
    let mut lower = 0.0;
    let mut upper = 0.0;
    let mut naive = 0.0;
    let mut undecided = 0;
    for (v, z) in &values {
        if v.status == GreenStatus::Undecided {
            undecided += 1;
        } else if v.err > per_root {
            return Err(Error::PrecisionLoss {
                bound_log2: v.err.log2(),
            });
        }
        let (lo, hi) = v.interval();
        lower += lo;
        upper += hi;
        naive += z.norm().ln().max(0.0);
    }
    let vieta_error = vieta_sum_error(&roots, &div.representative().to_crational());
    Ok(ArchimedeanContribution {
        value: 0.5 * (lower + upper),
        err: 0.5 * (upper - lower),
        lower,
        upper,
        naive,
        status: if undecided == 0 {
            CertStatus::Certified
        } else {
            CertStatus::Partial { undecided }
        },
        roots,
        vieta_error,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HeightReport {
    pub provenance: Option<Provenance>,
    pub degree: usize,
    /// Exact `b_D`.
    pub leading: String,
    pub hhat: f64,
    pub hhat_err: f64,
    pub h_naive: f64,
    pub finite_part: FiniteContribution,
    pub arch_part: f64,
    pub arch_err: f64,
    pub contributions: Vec<PlaceContribution>,
    pub status: CertStatus,
    pub roots: RootSetHeader,
    pub vieta_error: f64,
}

/// Height of a divisor from its representative: the finite places give
/// `log b_D` exactly, the archimedean place the Green values of the roots.
pub fn divisor_height(div: &DivisorQ, g: &GreenEvaluator, opts: &HeightOptions) -> Result<HeightReport> {
    let finite = finite_places_contribution(div);
    let arch = archimedean_contribution(div, g, opts.tol * div.degree() as f64, &opts.solve)?;
    let d = div.degree() as f64;
    let mut contributions: Vec<PlaceContribution> = finite
        .primes
        .iter()
        .map(|t| PlaceContribution {
            place: Place::Prime(t.prime),
            value: t.value,
            err: 0.0,
        })
        .collect();
    contributions.push(PlaceContribution {
        place: Place::Infinite,
        value: arch.value,
        err: arch.err,
    });
    let hhat_err = arch.err / d + 4.0 * f64::EPSILON * (finite.value + arch.value) / d;
    let hhat = (finite.value + arch.value) / d;
    if hhat < -hhat_err {
        return Err(Error::Guard(format!("negative height {hhat:e} beyond error {hhat_err:e}")));
    }
    Ok(HeightReport {
        provenance: div.provenance().cloned(),
        degree: div.degree(),
        leading: div.leading().to_string(),
        hhat,
        hhat_err,
        h_naive: (finite.value + arch.naive) / d,
        arch_part: arch.value,
        arch_err: arch.err,
        finite_part: finite,
        contributions,
        status: arch.status,
        roots: arch.roots.header(),
        vieta_error: arch.vieta_error,
    })
}

/// `ĥ_f([(f^n)^(m) = a])` for a monic integer map.
pub fn canonical_height(f: &PolyMap, n: u32, m: usize, a: &Integer, opts: &HeightOptions) -> Result<HeightReport> {
    let div = divisor_representative(f, n, m, a)?;
    let g = GreenEvaluator::new(f.clone(), opts.green_max_iter, opts.tol)?;
    divisor_height(&div, &g, opts)
}

/// One report per `n`, computed independently.
pub fn height_vanishing_scan(f: &PolyMap, m: usize, a: &Integer, ns: RangeInclusive<u32>, opts: &HeightOptions) -> Result<Vec<HeightReport>> {
    ns.collect::<Vec<_>>()
        .into_par_iter()
        .map(|n| canonical_height(f, n, m, a, opts))
        .collect()
}

/// Columns `n,degree,hhat,hhat_err,h_naive,finite_part,arch_part,status`.
pub fn write_scan_csv<W: Write>(rows: &[HeightReport], mut w: W) -> io::Result<()> {
    writeln!(w, "n,degree,hhat,hhat_err,h_naive,finite_part,arch_part,status")?;
    for r in rows {
        let n = r.provenance.as_ref().map_or(String::new(), |p| p.n.to_string());
        writeln!(
            w,
            "{n},{},{:e},{:e},{:e},{:e},{:e},{}",
            r.degree,
            r.hhat,
            r.hhat_err,
            r.h_naive,
            r.finite_part.value,
            r.arch_part,
            r.status.label()
        )?;
    }
    Ok(())
}

/// `(1/N) Σ_k log|P(e^{iθ_k})|` over `N` equally spaced angles, a quadrature
/// for the logarithmic Mahler measure.
pub fn log_mahler_quadrature(p: &crate::poly::UniPoly<Integer>, samples: usize) -> f64 {
    let coeffs: Vec<XComplex> = p.coeffs().iter().map(|c| XComplex::from_exact(&CRational::from_integer(c), ())).collect();
    let total: f64 = (0..samples)
        .map(|k| {
            let z = XComplex::new(Complex64::from_polar(1.0, std::f64::consts::TAU * (k as f64 + 0.5) / samples as f64));
            let mut acc = XComplex::ZERO;
            for c in coeffs.iter().rev() {
                acc = acc.mul(&z).add(c);
            }
            acc.ln_abs()
        })
        .sum();
    total / samples as f64
}
