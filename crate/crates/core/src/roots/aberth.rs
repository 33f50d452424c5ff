use num_complex::Complex64;
use rayon::prelude::*;

use super::rootset::{RootSet, RootStatus};
use super::target::{Evaluator, RootTarget};
use crate::error::{Error, Result};
use crate::scalar::{CScalar, MpComplex, Precision, Ring, XComplex};

const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;
/// Sweeps without a residual improvement before climbing the precision ladder.
const STALL_SWEEPS: usize = 20;
/// Minimum log2 improvement that counts as progress.
const PROGRESS_LOG2: f64 = 0.15;

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Certified bound on every residual `|p(z)| / (|p'(z)| max(1, |z|))`.
    pub tol: f64,
    /// Budget of multiprecision sweeps, summed over all rungs of the ladder.
    pub max_sweeps: usize,
    /// Budget of double-precision sweeps before switching to multiprecision.
    pub fast_sweeps: usize,
    pub start_precision: Precision,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-12,
            max_sweeps: 400,
            fast_sweeps: 1500,
            start_precision: Precision::DEFAULT,
        }
    }
}

/// Starting configuration for [`aberth_solve`].
#[derive(Clone, Debug)]
pub enum Initial {
    /// Two concentric circles around the geometric-mean root modulus, with a
    /// single circle of the fallback radius if that stalls.
    Circles,
    /// Explicit starting points, polished directly in multiprecision.
    Points(Vec<MpComplex>),
}

/// Aberth–Ehrlich simultaneous iteration with Jacobi updates.
///
/// A double-precision stage (extended exponent) brings the configuration
/// close to the roots, then a multiprecision stage polishes and certifies
/// each residual at twice the working precision. Converged roots are frozen
/// but still repel the others.
pub fn aberth_solve<T: RootTarget + ?Sized>(target: &T, init: Initial, opts: &SolveOptions) -> Result<RootSet> {
    let degree = target.degree();
    if degree == 0 {
        return Err(Error::InvalidInput("root finding needs degree >= 1".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let start = match init {
        Initial::Points(points) => {
            if points.len() != degree {
                return Err(Error::InvalidInput(format!(
                    "{} starting points for degree {degree}",
                    points.len()
                )));
            }
            points.iter().map(|z| z.to_prec(opts.start_precision)).collect()
        }
        Initial::Circles => {
            let (z, converged) = fast_stage(target, two_circles(target), opts.fast_sweeps);
            let z = if converged {
                z
            } else {
                let fallback = circle(degree, target.fallback_radius(), 0.5);
                let (z2, converged2) = fast_stage(target, fallback, opts.fast_sweeps);
                if converged2 {
                    z2
                } else {
                    z
                }
            };
            z.iter().map(|&w| MpComplex::from_c64(w, opts.start_precision)).collect()
        }
    };
    let (roots, residuals, precision, sweeps) = precise_stage(target, start, opts)?;
    Ok(RootSet::new(roots, residuals, precision, sweeps, RootStatus::Certified))
}

fn circle(count: usize, radius: f64, phase: f64) -> Vec<Complex64> {
    (0..count)
        .map(|k| Complex64::from_polar(radius, phase + std::f64::consts::TAU * k as f64 / count as f64))
        .collect()
}

fn two_circles<T: RootTarget + ?Sized>(target: &T) -> Vec<Complex64> {
    let degree = target.degree();
    let (p0, _) = target.fast().eval(&XComplex::ZERO);
    let rho = if p0.is_zero() || !p0.is_finite() {
        1.0
    } else {
        ((p0.log2_abs() - target.leading_log2()) / degree as f64).exp2()
    };
    let rho = if rho.is_finite() && rho > 0.0 { rho } else { 1.0 };
    let outer = degree.div_ceil(2);
    let mut z = circle(outer, 1.1 * rho, 0.5);
    z.extend(circle(degree - outer, 0.9 * rho, 0.5 + GOLDEN_ANGLE));
    z
}

fn repulsion(z: &[Complex64], i: usize) -> Complex64 {
    let zi = z[i];
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, &zj) in z.iter().enumerate() {
        if j != i && zj != zi {
            acc += (zi - zj).inv();
        }
    }
    acc
}

/// Returns the configuration and whether every root settled to double
/// precision.
fn fast_stage<T: RootTarget + ?Sized>(target: &T, mut z: Vec<Complex64>, max_sweeps: usize) -> (Vec<Complex64>, bool) {
    let ev = target.fast();
    let reset = target.fallback_radius();
    let n = z.len();
    let mut active = vec![true; n];
    for _ in 0..max_sweeps {
        let steps: Vec<Option<Complex64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                if !active[i] {
                    return None;
                }
                let (p, dp) = ev.eval(&XComplex::new(z[i]));
                if p.is_zero() {
                    return Some(Complex64::new(0.0, 0.0));
                }
                let newton = p.div(&dp).to_c64();
                if !newton.is_finite() {
                    return Some(Complex64::new(f64::NAN, 0.0));
                }
                Some(newton / (1.0 - newton * repulsion(&z, i)))
            })
            .collect();
        let mut any = false;
        for (i, step) in steps.into_iter().enumerate() {
            let Some(w) = step else { continue };
            if !w.is_finite() {
                // restart a lost point on the fallback circle
                z[i] = Complex64::from_polar(reset, 0.5 + GOLDEN_ANGLE * i as f64);
                any = true;
                continue;
            }
            z[i] -= w;
            if w.norm() <= 1e-14 * z[i].norm() || w.norm() == 0.0 {
                active[i] = false;
            } else {
                any = true;
            }
        }
        if !any {
            return (z, true);
        }
    }
    (z, false)
}

struct Step {
    correction: MpComplex,
    residual_log2: f64,
}

fn residual_log2(z: &MpComplex, p: &MpComplex, dp: &MpComplex) -> f64 {
    if p.is_zero() {
        return f64::NEG_INFINITY;
    }
    if dp.is_zero() {
        return f64::INFINITY;
    }
    p.log2_abs() - dp.log2_abs() - z.log2_abs().max(0.0)
}

fn precise_step(ev: &dyn Evaluator<MpComplex>, z: &[MpComplex], i: usize) -> Step {
    let zi = &z[i];
    let (p, dp) = ev.eval(zi);
    let residual_log2 = residual_log2(zi, &p, &dp);
    if p.is_zero() || dp.is_zero() {
        return Step {
            correction: zi.zero_like(),
            residual_log2,
        };
    }
    let newton = p.div(&dp);
    let mut rep = zi.zero_like();
    for (j, zj) in z.iter().enumerate() {
        if j != i {
            let diff = zi.sub(zj);
            if !diff.is_zero() {
                rep.add_assign(&diff.inv());
            }
        }
    }
    let denom = zi.one_like().sub(&newton.mul(&rep));
    Step {
        correction: newton.div(&denom),
        residual_log2,
    }
}

type Polished = (Vec<MpComplex>, Vec<f64>, Precision, usize);

fn precise_stage<T: RootTarget + ?Sized>(target: &T, mut z: Vec<MpComplex>, opts: &SolveOptions) -> Result<Polished> {
    let n = z.len();
    let tol_log2 = opts.tol.log2();
    let mut prec = opts.start_precision;
    let mut ev = target.precise(prec);
    let mut active = vec![true; n];
    let mut best = vec![f64::INFINITY; n];
    let mut stale = vec![0usize; n];
    let mut sweeps = 0;
    let mut worst = f64::INFINITY;

    loop {
        if active.iter().any(|&a| a) {
            if sweeps >= opts.max_sweeps {
                return Err(Error::SolverFailure {
                    sweeps,
                    precision_bits: prec.bits(),
                    worst_residual: worst,
                });
            }
            sweeps += 1;
            let steps: Vec<Option<Step>> = (0..n)
                .into_par_iter()
                .map(|i| active[i].then(|| precise_step(ev.as_ref(), &z, i)))
                .collect();
            worst = f64::NEG_INFINITY;
            let mut stalled = false;
            for (i, step) in steps.into_iter().enumerate() {
                let Some(step) = step else { continue };
                z[i] = z[i].sub(&step.correction);
                let r = step.residual_log2;
                worst = worst.max(r.exp2());
                if r <= tol_log2 - 1.0 {
                    active[i] = false;
                } else if r < best[i] - PROGRESS_LOG2 {
                    best[i] = r;
                    stale[i] = 0;
                } else {
                    stale[i] += 1;
                    stalled |= stale[i] >= STALL_SWEEPS;
                }
            }
            if stalled {
                prec = climb(prec, sweeps, worst)?;
                z = z.iter().map(|w| w.to_prec(prec)).collect();
                ev = target.precise(prec);
                best.fill(f64::INFINITY);
                stale.fill(0);
            }
            continue;
        }

        let cert = prec.doubled();
        let cev = target.precise(cert);
        let residuals: Vec<f64> = z
            .par_iter()
            .map(|w| {
                let w = w.to_prec(cert);
                let (p, dp) = cev.eval(&w);
                residual_log2(&w, &p, &dp).exp2()
            })
            .collect();
        let failing: Vec<usize> = (0..n).filter(|&i| !(residuals[i] <= opts.tol)).collect();
        if failing.is_empty() {
            return Ok((z, residuals, prec, sweeps));
        }
        // converged at working precision but not at doubled precision:
        // the working precision was too coarse for these points
        worst = failing.iter().map(|&i| residuals[i]).fold(0.0, f64::max);
        prec = climb(prec, sweeps, worst)?;
        z = z.iter().map(|w| w.to_prec(prec)).collect();
        ev = target.precise(prec);
        for i in failing {
            active[i] = true;
            best[i] = f64::INFINITY;
            stale[i] = 0;
        }
    }
}

fn climb(prec: Precision, sweeps: usize, worst: f64) -> Result<Precision> {
    prec.next_rung().ok_or(Error::SolverFailure {
        sweeps,
        precision_bits: prec.bits(),
        worst_residual: worst,
    })
}
