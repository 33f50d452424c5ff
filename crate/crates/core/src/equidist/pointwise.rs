use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::{Estimate, GreenEvaluator, PolyMap};
use crate::error::{Error, Result};
use crate::poly::{jet_eval, JetEval};
use crate::scalar::{CRational, CScalar, MpComplex, Precision, Ring};

/// Relative accuracy demanded of every jet entry before it is used.
const JET_REL_LOG2: f64 = -60.0;

fn factorial(k: usize) -> f64 {
    (2..=k).map(|i| i as f64).product()
}

/// Jet of `f^n` at `t` up to `order`, climbing the precision ladder until the
/// running error bound of every entry is below `2^-60` relative.
pub(crate) fn certified_jet(f: &PolyMap, n: u32, order: usize, t: Complex64) -> Result<JetEval> {
    let mut prec = Precision::DEFAULT;
    loop {
        let e = jet_eval(f.poly(), n, order, &MpComplex::from_c64(t, prec))?;
        let worst = (0..=order).map(|k| e.rel_err_log2(k)).fold(f64::NEG_INFINITY, f64::max);
        if worst <= JET_REL_LOG2 {
            return Ok(e);
        }
        prec = prec.next_rung().ok_or(Error::PrecisionLoss { bound_log2: worst })?;
    }
}

/// `log|(f^n)^(m)(t) - a| / (d^n - m)`, evaluated in multiprecision so that
/// neither the value nor the derivative can overflow.
///
/// `err` bounds the effect of rounding, not the distance to `g_f(t)`.
pub fn direct_potential(f: &PolyMap, n: u32, m: usize, a: &CRational, t: Complex64) -> Result<Estimate> {
    let dn = (f.degree() as f64).powi(n as i32);
    if dn <= m as f64 {
        return Err(Error::InvalidInput(format!("d^n = {dn} must exceed m = {m}")));
    }
    let mut prec = Precision::DEFAULT;
    loop {
        let e = jet_eval(f.poly(), n, m, &MpComplex::from_c64(t, prec))?;
        let value = e.jet.derivative(m).sub(&MpComplex::from_exact(a, prec));
        if value.is_zero() {
            return Err(Error::Guard(format!("(f^n)^(m) - a vanishes at {t}")));
        }
        let abs_err_log2 = e.err_log2[m] + factorial(m).log2();
        let rel_log2 = (abs_err_log2 - value.log2_abs()).max(prec.roundoff_log2());
        if rel_log2 <= JET_REL_LOG2 {
            let degree = dn - m as f64;
            return Ok(Estimate {
                value: value.ln_abs() / degree,
                err: 2.0 * rel_log2.exp2() / degree,
            });
        }
        prec = prec.next_rung().ok_or(Error::PrecisionLoss { bound_log2: rel_log2 })?;
    }
}

fn log_derivative_checked(g: &GreenEvaluator, z: Complex64) -> Result<Complex64> {
    let dg = g.green_log_derivative(z, 1e-15)?;
    if dg.norm() < 1e-12 {
        return Err(Error::Guard(format!("∂g vanishes to within 1e-12 at {z}")));
    }
    Ok(dg)
}

/// `(f^n)^(m)(z) / ((2 d^n ∂_z g_f(z))^m f^n(z))`, which tends to
/// `1 + O(d^(-n))` in the basin of infinity.
pub fn basin_asymptotic_check(g: &GreenEvaluator, n: u32, m: usize, z: Complex64) -> Result<Complex64> {
    let f = g.map();
    let dg = log_derivative_checked(g, z)?;
    let e = certified_jet(f, n, m, z)?;
    let prec = e.jet.value().prec();
    let dn = (f.degree() as f64).powi(n as i32);
    let scale = MpComplex::from_c64(dg * (2.0 * dn), prec);
    let mut denom = e.jet.value().clone();
    for _ in 0..m {
        denom = denom.mul(&scale);
    }
    if denom.is_zero() {
        return Err(Error::Guard(format!("f^n vanishes at {z}")));
    }
    Ok(e.jet.derivative(m).div(&denom).to_c64())
}

/// An observed quantity next to its asymptotic prediction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Predicted {
    pub value: Complex64,
    pub predicted: Complex64,
}

impl Predicted {
    pub fn ratio(&self) -> Complex64 {
        self.value / self.predicted
    }

    pub fn gap(&self) -> Complex64 {
        self.value - self.predicted
    }
}

fn order_three(g: &GreenEvaluator, n: u32, z: Complex64) -> Result<(MpComplex, MpComplex, MpComplex, Complex64)> {
    let f = g.map();
    let dg = log_derivative_checked(g, z)?;
    let e = certified_jet(f, n, 3, z)?;
    let d1 = e.jet.derivative(1);
    if d1.is_zero() {
        return Err(Error::Guard(format!("(f^n)' vanishes at {z}")));
    }
    Ok((d1, e.jet.derivative(2), e.jet.derivative(3), dg))
}

/// Schwarzian `S = h'''/h' - (3/2)(h''/h')^2` of `h = f^n`, with prediction
/// `-2 d^(2n) (∂_z g_f)^2`.
pub fn schwarzian(g: &GreenEvaluator, n: u32, z: Complex64) -> Result<Predicted> {
    let (d1, d2, d3, dg) = order_three(g, n, z)?;
    let t = d2.div(&d1);
    let s = d3.div(&d1).sub(&t.mul(&t).scale_f64(1.5));
    let dn = (g.map().degree() as f64).powi(n as i32);
    Ok(Predicted {
        value: s.to_c64(),
        predicted: -2.0 * dn * dn * dg * dg,
    })
}

/// Pre-Schwarzian `T = h''/h'` of `h = f^n`, with prediction `2 d^n ∂_z g_f`.
pub fn preschwarzian(g: &GreenEvaluator, n: u32, z: Complex64) -> Result<Predicted> {
    let (d1, d2, _, dg) = order_three(g, n, z)?;
    let dn = (g.map().degree() as f64).powi(n as i32);
    Ok(Predicted {
        value: d2.div(&d1).to_c64(),
        predicted: 2.0 * dn * dg,
    })
}
