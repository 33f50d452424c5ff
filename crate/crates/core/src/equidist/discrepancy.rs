use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::{EmpiricalMeasure, GreenEvaluator, PolyMap};
use crate::error::{Error, Result};

/// Minimum distance between a test point and the support.
pub const SUPPORT_CLEARANCE: f64 = 0.1;

/// Which divisor `[(f^n)^(m) = a]` a measure comes from.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivisorLabel {
    pub n: u32,
    pub m: usize,
    pub a: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiscrepancyReport {
    pub label: DivisorLabel,
    pub test_points: Vec<Complex64>,
    pub gaps: Vec<f64>,
    /// Certified error of each equilibrium-potential value.
    pub errs: Vec<f64>,
    pub max_gap: f64,
}

/// 16 points on `|t| = 2R`.
pub fn default_test_points(f: &PolyMap) -> Vec<Complex64> {
    let r = 2.0 * f.escape_radius();
    (0..16)
        .map(|k| Complex64::from_polar(r, std::f64::consts::TAU * k as f64 / 16.0))
        .collect()
}

/// Per-point gaps `|∫ log|t - s| dν(s) - (g_f(t) - log|c_d|/(d-1))|` at
/// exterior test points.
pub fn potential_discrepancy(
    label: DivisorLabel,
    nu: &EmpiricalMeasure,
    g: &GreenEvaluator,
    test_points: &[Complex64],
) -> Result<DiscrepancyReport> {
    if test_points.is_empty() {
        return Err(Error::InvalidInput("no test points".into()));
    }
    let mut gaps = Vec::with_capacity(test_points.len());
    let mut errs = Vec::with_capacity(test_points.len());
    for &t in test_points {
        let clearance = nu.points().iter().map(|s| (t - s).norm()).fold(f64::INFINITY, f64::min);
        if clearance <= SUPPORT_CLEARANCE {
            return Err(Error::InvalidInput(format!(
                "test point {t} lies within {SUPPORT_CLEARANCE} of the support"
            )));
        }
        let gv = g.green(t)?.certified(t)?;
        if gv.value <= gv.err {
            return Err(Error::InvalidInput(format!("test point {t} is not certified exterior")));
        }
        let eq = g.equilibrium_potential(t)?;
        gaps.push((nu.log_potential(t).value - eq.value).abs());
        errs.push(eq.err);
    }
    let max_gap = gaps.iter().copied().fold(0.0, f64::max);
    Ok(DiscrepancyReport {
        label,
        test_points: test_points.to_vec(),
        gaps,
        errs,
        max_gap,
    })
}
