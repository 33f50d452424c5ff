use num_complex::Complex64;
use serde::Serialize;

use super::map::PolyMap;
use crate::error::{Error, Result};
use crate::poly::jet_iterate;
use crate::scalar::{CScalar, Ring, XComplex};

/// Orbit steps between attempts to trap a bounded orbit.
const TRAP_EVERY: usize = 16;
/// Largest `d^p` for which a period-`p` trapping disk is attempted.
const TRAP_DEGREE_CAP: usize = 64;
/// Post-escape steps allowed to shrink the tail bound.
const TAIL_STEPS: usize = 64;
/// Critical-point exclusion radius for derivative evaluation.
pub const CRITICAL_EXCLUSION: f64 = 1e-6;

/// A real value with an error bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub err: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GreenStatus {
    /// The orbit left the escape radius.
    Escaped,
    /// The orbit entered a disk shown to be invariant under an iterate.
    Trapped { period: usize },
    /// Neither, within the iteration budget.
    Undecided,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GreenValue {
    /// For [`GreenStatus::Undecided`], the lower end `0` of the interval.
    pub value: f64,
    pub err: f64,
    /// For [`GreenStatus::Undecided`], the upper end of the interval.
    pub upper: f64,
    pub status: GreenStatus,
    pub iterations: usize,
    pub tol: f64,
}

impl GreenValue {
    pub fn is_certified(&self) -> bool {
        self.status != GreenStatus::Undecided && self.err <= self.tol
    }

    pub fn certified(&self, point: Complex64) -> Result<Estimate> {
        match self.status {
            GreenStatus::Undecided => Err(Error::Undecided {
                point: point.to_string(),
                iterations: self.iterations,
            }),
            _ if self.err > self.tol => Err(Error::PrecisionLoss {
                bound_log2: self.err.log2(),
            }),
            _ => Ok(Estimate {
                value: self.value,
                err: self.err,
            }),
        }
    }

    /// `[lower, upper]` enclosing `g_f`.
    pub fn interval(&self) -> (f64, f64) {
        match self.status {
            GreenStatus::Undecided => (0.0, self.upper),
            _ => ((self.value - self.err).max(0.0), self.value + self.err),
        }
    }
}

/// Escape-rate evaluator for `g_f`.
///
/// After the orbit passes the escape radius at step `n`,
/// `g_f(z) = (log|z_n| + log|c_d|/(d-1)) / d^n` up to a tail bounded by
/// `q / ((1-q)(1 - 1/(2d)) d^(n+1))` with `q = Σ_{j<d}|c_j| / (|c_d| |z_n|)`.
#[derive(Clone, Debug)]
pub struct GreenEvaluator {
    map: PolyMap,
    max_iter: usize,
    tol: f64,
}

impl GreenEvaluator {
    pub fn new(map: PolyMap, max_iter: usize, tol: f64) -> Result<Self> {
        if max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be positive".into()));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidInput("tol must be positive".into()));
        }
        Ok(GreenEvaluator { map, max_iter, tol })
    }

    /// 500 iterations, tolerance `1e-12`.
    pub fn with_defaults(map: PolyMap) -> Self {
        GreenEvaluator {
            map,
            max_iter: 500,
            tol: 1e-12,
        }
    }

    pub fn map(&self) -> &PolyMap {
        &self.map
    }

    pub fn max_iter(&self) -> usize {
        self.max_iter
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// `C` in the certified tail `|g - g_n| <= C |z_n|^(-1) d^(-n)`.
    pub fn error_constant(&self) -> f64 {
        let f = &self.map;
        let d = f.degree() as f64;
        let q_r = f.lower_mass() / (f.leading().norm() * f.escape_radius());
        f.lower_mass() / f.leading().norm() / ((1.0 - q_r) * (1.0 - 0.5 / d) * d)
    }

    /// Upper bound for `g_f` on the disk of the escape radius.
    pub fn bound_on_escape_disk(&self) -> f64 {
        let f = &self.map;
        let r = f.escape_radius();
        let q_r = f.lower_mass() / (f.leading().norm() * r);
        let d = f.degree() as f64;
        (r.ln() + (f.leading().norm().ln() + q_r.ln_1p()) / (d - 1.0)).max(0.0)
    }

    pub fn green(&self, z: Complex64) -> Result<GreenValue> {
        self.green_value(z, self.tol)
    }

    pub fn green_value(&self, z: Complex64, tol: f64) -> Result<GreenValue> {
        if !(tol > 0.0) {
            return Err(Error::InvalidInput("tol must be positive".into()));
        }
        if !z.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite point {z}")));
        }
        Ok(self.green_x(XComplex::new(z), tol))
    }

    pub(crate) fn green_x(&self, z: XComplex, tol: f64) -> GreenValue {
        let f = &self.map;
        let d = f.degree();
        let ln_d = (d as f64).ln();
        let log2_r = f.escape_radius().log2();
        let log2_ratio = f.lower_mass().log2() - f.leading().norm().log2();
        let shrink = (1.0 - 0.5 / d as f64).ln();
        let round = 2.0 * (d as f64 + 2.0) * f64::EPSILON;

        let mut w = z;
        let mut recent: Vec<XComplex> = Vec::with_capacity(TRAP_EVERY);
        for k in 0..=self.max_iter {
            let lw = w.log2_abs();
            if lw > log2_r {
                return self.escaped(w, k, tol, EscapeConsts { ln_d, log2_ratio, shrink, round });
            }
            if k > 0 && k % TRAP_EVERY == 0 {
                if let Some(period) = self.try_trap(&w, &recent) {
                    return GreenValue {
                        value: 0.0,
                        err: 0.0,
                        upper: 0.0,
                        status: GreenStatus::Trapped { period },
                        iterations: k,
                        tol,
                    };
                }
                recent.clear();
            }
            recent.push(w);
            w = f.eval_x(&w);
        }
        let upper = self.bound_on_escape_disk() * (-(self.max_iter as f64) * ln_d).exp();
        GreenValue {
            value: 0.0,
            err: upper,
            upper,
            status: GreenStatus::Undecided,
            iterations: self.max_iter,
            tol,
        }
    }

    fn escaped(&self, mut w: XComplex, mut k: usize, tol: f64, c: EscapeConsts) -> GreenValue {
        let f = &self.map;
        let gamma = f.log_gamma();
        let tail = |w: &XComplex, k: usize| -> f64 {
            let log2_q = c.log2_ratio - w.log2_abs();
            if log2_q == f64::NEG_INFINITY {
                return 0.0;
            }
            let q = log2_q.exp2();
            (q.ln() - (-q).ln_1p() - c.shrink - (k + 1) as f64 * c.ln_d).exp()
        };
        let mut trunc = tail(&w, k);
        for _ in 0..TAIL_STEPS {
            if trunc + c.round <= tol {
                break;
            }
            w = f.eval_x(&w);
            k += 1;
            trunc = tail(&w, k);
        }
        let base = w.log2_abs() * std::f64::consts::LN_2 + gamma;
        let value = base * (-(k as f64) * c.ln_d).exp();
        GreenValue {
            value,
            err: trunc + c.round * (1.0 + value),
            upper: value + trunc,
            status: GreenStatus::Escaped,
            iterations: k,
            tol,
        }
    }

    /// Looks for a disk `D(c, ρ)` around the current orbit point that an
    /// iterate `f^p` maps into itself: `|f^p(c) - c| + Σ_{k>=1} |a_k| ρ^k < ρ`
    /// where `a_k` are the Taylor coefficients of `f^p` at `c`.
    fn try_trap(&self, c: &XComplex, recent: &[XComplex]) -> Option<usize> {
        let f = &self.map;
        let d = f.degree();
        let scale = c.log2_abs().max(0.0).exp2();
        let mut period = 1;
        let mut deg = d;
        while deg <= TRAP_DEGREE_CAP && period <= recent.len() {
            let back = &recent[recent.len() - period];
            if c.sub(back).to_c64().norm() <= 1e-3 * scale && self.invariant_disk(c, period, deg) {
                return Some(period);
            }
            period += 1;
            deg *= d;
        }
        None
    }

    fn invariant_disk(&self, c: &XComplex, period: usize, order: usize) -> bool {
        let jet = jet_iterate(self.map.coeffs_x(), period as u32, order, c);
        let a: Vec<f64> = jet.taylor_coeffs().iter().map(|t| t.to_c64().norm()).collect();
        let shift = jet.value().sub(c).to_c64().norm();
        let start = c.to_c64().norm().max(1.0);
        (0..80).any(|j| {
            let rho = start * (-(j as f64) * 0.5).exp2();
            let image: f64 = a[1..].iter().rev().fold(0.0, |acc, ak| (acc + ak) * rho);
            // margin against rounding in the Taylor coefficients
            shift + image * (1.0 + 1e-9) + 1e-12 * start < rho
        })
    }

    /// `∂_z g_f(z) = lim (f^n)'(z) / (2 d^n f^n(z))`, iterated until successive
    /// terms agree to `tol` relative.
    pub fn green_log_derivative(&self, z: Complex64, tol: f64) -> Result<Complex64> {
        let f = &self.map;
        let d = f.degree();
        let log2_r = f.escape_radius().log2();
        let mut w = XComplex::new(z);
        let mut dw = XComplex::new(Complex64::new(1.0, 0.0));
        let mut prev: Option<Complex64> = None;
        for k in 0..=(self.max_iter + TAIL_STEPS) {
            let escaped = w.log2_abs() > log2_r;
            if !escaped {
                let wc = w.to_c64();
                if let Some(c) = f.critical_points().iter().find(|c| (wc - **c).norm() < CRITICAL_EXCLUSION) {
                    return Err(Error::Guard(format!(
                        "orbit of {z} passes within {CRITICAL_EXCLUSION:e} of critical point {c} at step {k}"
                    )));
                }
            } else {
                // (f^k)'/(2 d^k f^k), with d^k folded into the exponent
                let ratio = dw.div(&w);
                let term = ratio.mantissa() * (ratio.exponent() as f64 - k as f64 * (d as f64).log2() - 1.0).exp2();
                if let Some(p) = prev {
                    if (term - p).norm() <= tol * term.norm() {
                        return Ok(term);
                    }
                }
                prev = Some(term);
            }
            if k >= self.max_iter && !escaped {
                break;
            }
            let (fw, dfw) = f.eval_with_derivative_x(&w);
            dw = dw.mul(&dfw);
            w = fw;
        }
        Err(Error::Undecided {
            point: z.to_string(),
            iterations: self.max_iter,
        })
    }

    /// `g_f(t) - log|c_d|/(d-1)`, which equals `∫ log|t - s| dμ_f(s)`.
    pub fn equilibrium_potential(&self, t: Complex64) -> Result<Estimate> {
        let g = self.green(t)?.certified(t)?;
        Ok(Estimate {
            value: g.value - self.map.log_gamma(),
            err: g.err,
        })
    }
}

#[derive(Clone, Copy)]
struct EscapeConsts {
    ln_d: f64,
    log2_ratio: f64,
    shrink: f64,
    round: f64,
}
