//! Simultaneous root finding for high-degree polynomials given only by
//! evaluation.

mod aberth;
mod rootset;
mod small;
mod target;

pub use aberth::{aberth_solve, Initial, SolveOptions};
pub use rootset::{cluster_stats, vieta_sum_error, ClusterStats, RootSet, RootSetHeader, RootStatus, CLUSTER_RADIUS};
pub use small::roots_c64;
pub use target::{DenseTarget, Evaluator, JetTarget, RootTarget};

use crate::dynamics::PolyMap;
use crate::error::{Error, Result};
use crate::scalar::{CRational, Ring};

/// Degree cap for evaluation-only root finding.
pub const VALUE_SET_DEGREE_CAP: u128 = 1 << 14;

/// Roots of `(f^n)^(m) - a`, a polynomial of degree `d^n - m`, found through
/// jet evaluation. `a = 0` is solved but marked [`RootStatus::ExcludedValue`].
pub fn value_set_roots(f: &PolyMap, n: u32, m: usize, a: &CRational, opts: &SolveOptions) -> Result<RootSet> {
    let target = value_set_target(f, n, m, a)?;
    let mut set = aberth_solve(&target, Initial::Circles, opts)?;
    if a.is_zero() {
        set.status = RootStatus::ExcludedValue;
    }
    Ok(set)
}

/// The evaluation-only target behind [`value_set_roots`].
pub fn value_set_target(f: &PolyMap, n: u32, m: usize, a: &CRational) -> Result<JetTarget> {
    let dn = (f.degree() as u128).checked_pow(n).unwrap_or(u128::MAX);
    if dn > VALUE_SET_DEGREE_CAP {
        return Err(Error::Capacity {
            what: "value-set degree",
            needed: dn,
            limit: VALUE_SET_DEGREE_CAP,
        });
    }
    if dn <= m as u128 {
        return Err(Error::InvalidInput(format!("d^n = {dn} must exceed m = {m}")));
    }
    Ok(JetTarget::new(
        f.poly().clone(),
        n,
        m,
        a.clone(),
        dn as usize - m,
        f.escape_radius(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::UniPoly;
    use crate::scalar::{CScalar, MpComplex, Precision};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense(s: &str) -> DenseTarget {
        DenseTarget::new(UniPoly::parse(s).unwrap()).unwrap()
    }

    #[test]
    fn quadratic_roots() {
        let set = aberth_solve(&dense("[-1, 0, 1]"), Initial::Circles, &SolveOptions::default()).unwrap();
        let mut pts = set.points();
        pts.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((pts[0] + 1.0).norm() < 1e-14 && (pts[1] - 1.0).norm() < 1e-14);
        assert!(set.max_residual() <= 1e-12);
    }

    #[test]
    fn equal_modulus_family() {
        // 16 z^15 - 1
        let mut c = vec!["0".to_string(); 16];
        c[0] = "-1".into();
        c[15] = "16".into();
        let set = aberth_solve(&dense(&format!("[{}]", c.join(","))), Initial::Circles, &SolveOptions::default()).unwrap();
        assert_eq!(set.degree, 15);
        let want = 16f64.powf(-1.0 / 15.0);
        assert!((want - 0.8312).abs() < 1e-4);
        assert!(set.points().iter().all(|z| (z.norm() - want).abs() < 1e-14));
    }

    #[test]
    fn vieta_on_random_degree_fifty() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let coeffs: Vec<String> = (0..=50).map(|_| rng.random_range(-9i32..=9).to_string()).collect();
        let mut coeffs = coeffs;
        coeffs[50] = "7".into();
        let poly = UniPoly::parse(&format!("[{}]", coeffs.join(","))).unwrap();
        let target = DenseTarget::new(poly.clone()).unwrap();
        let set = aberth_solve(&target, Initial::Circles, &SolveOptions::default()).unwrap();
        assert_eq!(set.degree, 50);
        assert!(vieta_sum_error(&set, &poly) < 1e-8);
        // potential reconstruction: (1/D)(Σ log|t - z_i| + log|b_D|) = (1/D) log|p(t)|
        for t in [Complex64::new(3.0, 1.0), Complex64::new(-2.5, -2.5)] {
            let pt = poly.map(|c| MpComplex::from_exact(c, Precision::DEFAULT)).eval(&MpComplex::from_c64(t, Precision::DEFAULT));
            let lhs = set.log_potential(t) + 7f64.ln() / 50.0;
            assert!((lhs - pt.ln_abs() / 50.0).abs() < 1e-8);
        }
    }

    #[test]
    fn explicit_points_polish() {
        let target = dense("[-2, 0, 1]");
        let init = vec![
            MpComplex::from_c64(Complex64::new(1.4, 0.0), Precision::DEFAULT),
            MpComplex::from_c64(Complex64::new(-1.4, 0.1), Precision::DEFAULT),
        ];
        let set = aberth_solve(&target, Initial::Points(init), &SolveOptions { tol: 1e-30, ..Default::default() }).unwrap();
        assert!(set.max_residual() <= 1e-30);
    }

    #[test]
    fn value_set_examples() {
        let opts = SolveOptions::default();
        let z2 = PolyMap::parse("[0, 0, 1]").unwrap();
        let set = value_set_roots(&z2, 3, 1, &CRational::real(1), &opts).unwrap();
        assert_eq!(set.degree, 7);
        let r = 8f64.powf(-1.0 / 7.0);
        let mut args: Vec<f64> = set.points().iter().map(|z| z.arg().rem_euclid(std::f64::consts::TAU)).collect();
        args.sort_by(f64::total_cmp);
        assert!(set.points().iter().all(|z| (z.norm() - r).abs() < 1e-13));
        for w in args.windows(2) {
            assert!((w[1] - w[0] - std::f64::consts::TAU / 7.0).abs() < 1e-12);
        }

        let set = value_set_roots(&z2, 2, 2, &CRational::real(12), &opts).unwrap();
        let mut pts = set.points();
        pts.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((pts[0] + 1.0).norm() < 1e-13 && (pts[1] - 1.0).norm() < 1e-13);

        let f = PolyMap::parse("[0.3, 0, 1]").unwrap();
        let set = value_set_roots(&f, 6, 1, &CRational::real(1), &opts).unwrap();
        assert_eq!(set.degree, 63);
        assert!(set.max_residual() <= 1e-10);
        assert_eq!(set.status, RootStatus::Certified);
    }

    #[test]
    fn excluded_value_and_validation() {
        let z2 = PolyMap::parse("[0, 0, 1]").unwrap();
        let set = value_set_roots(&z2, 3, 1, &CRational::real(0), &SolveOptions::default()).unwrap();
        assert_eq!(set.status, RootStatus::ExcludedValue);
        assert_eq!(set.degree, 7);
        assert!(set.clusters.clusters <= 1);
        assert!(value_set_roots(&z2, 1, 2, &CRational::real(1), &SolveOptions::default()).is_err());
    }

    #[test]
    fn deterministic() {
        let f = PolyMap::parse("[0.3, 0, 1]").unwrap();
        let a = value_set_roots(&f, 5, 2, &CRational::real(1), &SolveOptions::default()).unwrap();
        let b = value_set_roots(&f, 5, 2, &CRational::real(1), &SolveOptions::default()).unwrap();
        assert_eq!(a.roots, b.roots);
        assert_eq!(a.residuals, b.residuals);
    }
}
