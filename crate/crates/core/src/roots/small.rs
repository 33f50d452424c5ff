use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 500;

fn horner(a: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for c in a.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All roots of a low-degree polynomial (ascending coefficients), by Aberth
/// iteration in double precision followed by two Newton polishing steps.
///
/// Meant for critical points and preimages, where the degree is that of the
/// map itself.
pub fn roots_c64(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let d = coeffs
        .iter()
        .rposition(|c| *c != Complex64::new(0.0, 0.0))
        .ok_or(Error::ZeroPolynomial("roots"))?;
    if d == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[d];
    let a: Vec<Complex64> = coeffs[..=d].iter().map(|c| c / lead).collect();
    if d == 1 {
        return Ok(vec![-a[0]]);
    }

    let mag = a[0].norm();
    let r = if mag > 0.0 { mag.powf(1.0 / d as f64) } else { 1.0 };
    let mut z: Vec<Complex64> = (0..d)
        .map(|k| Complex64::from_polar(r, 0.4 + std::f64::consts::TAU * k as f64 / d as f64))
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut moved = false;
        let step: Vec<Complex64> = (0..d)
            .map(|i| {
                let (p, dp) = horner(&a, z[i]);
                if p == Complex64::new(0.0, 0.0) || dp == Complex64::new(0.0, 0.0) {
                    return Complex64::new(0.0, 0.0);
                }
                let newton = p / dp;
                let repulsion: Complex64 = (0..d)
                    .filter(|&j| j != i && z[j] != z[i])
                    .map(|j| (z[i] - z[j]).inv())
                    .sum();
                newton / (1.0 - newton * repulsion)
            })
            .collect();
        for (zi, w) in z.iter_mut().zip(&step) {
            if w.norm() > 1e-15 * zi.norm().max(1.0) {
                moved = true;
            }
            *zi -= w;
        }
        if !moved {
            break;
        }
    }
    for zi in &mut z {
        for _ in 0..2 {
            let (p, dp) = horner(&a, *zi);
            if dp != Complex64::new(0.0, 0.0) && p.is_finite() {
                *zi -= p / dp;
            }
        }
    }

    let worst = z
        .iter()
        .map(|&zi| {
            let scale: f64 = a.iter().rev().fold(0.0, |acc, c| acc * zi.norm().max(1.0) + c.norm());
            horner(&a, zi).0.norm() / scale
        })
        .fold(0.0, f64::max);
    if !(worst <= 1e-9) {
        return Err(Error::SolverFailure {
            sweeps: MAX_SWEEPS,
            precision_bits: 53,
            worst_residual: worst,
        });
    }
    Ok(z)
}
