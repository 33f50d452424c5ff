use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::discrepancy::DivisorLabel;
use crate::dynamics::{EmpiricalMeasure, GreenEvaluator, GreenStatus};
use crate::error::{Error, Result};

/// Pairs closer than this are dropped from the energy sums and counted.
pub const SINGULAR_CUTOFF: f64 = 1e-12;
/// Largest tolerated fraction of dropped pairs.
pub const MAX_EXCLUDED_FRACTION: f64 = 1e-3;
/// Row blocks of the pair sums; fixed so results do not depend on threads.
const BLOCKS: usize = 64;

#[derive(Clone, Debug, Serialize)]
pub struct FeketeReport {
    pub label: DivisorLabel,
    /// `∫∫_{z≠z'} k d(ν - μ̂)(z) d(ν - μ̂)(z')`.
    pub energy: f64,
    pub nu_atoms: usize,
    pub samples: usize,
    /// `∫∫_{s≠s'} k dμ̂ dμ̂`, whose limit is `-log|c_d|/(d-1)`.
    pub mu_self_energy: f64,
    /// Standard error of `mu_self_energy` as a U-statistic.
    pub mc_stderr: f64,
    pub mu_self_expected: f64,
    pub excluded_pairs: u64,
    pub total_pairs: u64,
    pub valid: bool,
}

impl FeketeReport {
    pub fn ensure_valid(&self) -> Result<&Self> {
        if self.valid {
            Ok(self)
        } else {
            Err(Error::InvalidReport(format!(
                "{} of {} pairs closer than {SINGULAR_CUTOFF:e}",
                self.excluded_pairs, self.total_pairs
            )))
        }
    }
}

struct Atoms {
    z: Vec<Complex64>,
    /// Weight in `ν - μ̂`.
    sigma: Vec<f64>,
    /// Weight in `μ̂`.
    u: Vec<f64>,
    g: Vec<f64>,
}

/// Identical points of `ν` and `μ̂` are merged first, so `ν = μ̂` yields an
/// identically zero signed measure.
fn merge(nu: &EmpiricalMeasure, mu: &EmpiricalMeasure) -> BTreeMap<(u64, u64), (f64, f64, Complex64)> {
    let key = |z: &Complex64| ((z.re + 0.0).to_bits(), (z.im + 0.0).to_bits());
    let mut map: BTreeMap<(u64, u64), (f64, f64, Complex64)> = BTreeMap::new();
    for (z, w) in nu.points().iter().zip(nu.weights()) {
        map.entry(key(z)).or_insert((0.0, 0.0, *z)).0 += w;
    }
    for (z, u) in mu.points().iter().zip(mu.weights()) {
        let e = map.entry(key(z)).or_insert((0.0, 0.0, *z));
        e.0 -= u;
        e.1 += u;
    }
    map
}

pub(crate) fn tree_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => tree_sum(&v[..n / 2]) + tree_sum(&v[n / 2..]),
    }
}

struct BlockSums {
    /// `σ_i Σ_{j>i} σ_j log|z_i - z_j|` per row.
    e_rows: Vec<f64>,
    /// `u_i Σ_{j>i} u_j log|z_i - z_j|` per row.
    c_rows: Vec<f64>,
    /// `Σ_{j>i} u_j log|z_i - z_j|` per row.
    c_right: Vec<f64>,
    /// `Σ_{i in block, i<j} u_i log|z_i - z_j|` per column.
    c_left: Vec<f64>,
    excluded: u64,
}

fn block_sums(atoms: &Atoms, rows: std::ops::Range<usize>) -> BlockSums {
    let n = atoms.z.len();
    let mut out = BlockSums {
        e_rows: Vec::with_capacity(rows.len()),
        c_rows: Vec::with_capacity(rows.len()),
        c_right: Vec::with_capacity(rows.len()),
        c_left: vec![0.0; n],
        excluded: 0,
    };
    let cut2 = SINGULAR_CUTOFF * SINGULAR_CUTOFF;
    for i in rows {
        let zi = atoms.z[i];
        let (si, ui) = (atoms.sigma[i], atoms.u[i]);
        let mut es = 0.0;
        let mut cs = 0.0;
        for j in (i + 1)..n {
            let d2 = (zi - atoms.z[j]).norm_sqr();
            if d2 < cut2 {
                out.excluded += 1;
                continue;
            }
            let v = 0.5 * d2.ln();
            es += atoms.sigma[j] * v;
            cs += atoms.u[j] * v;
            out.c_left[j] += ui * v;
        }
        out.e_rows.push(si * es);
        out.c_rows.push(ui * cs);
        out.c_right.push(cs);
    }
    out
}

/// Row boundaries giving each block about the same number of pairs.
fn balanced_blocks(n: usize) -> Vec<std::ops::Range<usize>> {
    let k = BLOCKS.min(n.max(1));
    let mut cuts: Vec<usize> = (0..=k)
        .map(|b| {
            let frac = b as f64 / k as f64;
            ((n as f64) * (1.0 - (1.0 - frac).sqrt())).round() as usize
        })
        .collect();
    cuts[k] = n;
    cuts.windows(2).filter(|w| w[1] > w[0]).map(|w| w[0]..w[1]).collect()
}

/// Off-diagonal energy of `ν - μ̂` for the kernel
/// `k(z, z') = log|z - z'| - g_f(z) - g_f(z')`, with `g_f = 0` at points
/// whose orbits do not escape.
pub fn fekete_energy(label: DivisorLabel, nu: &EmpiricalMeasure, g: &GreenEvaluator, mu: &EmpiricalMeasure) -> Result<FeketeReport> {
    let merged = merge(nu, mu);
    let mut atoms = Atoms {
        z: Vec::with_capacity(merged.len()),
        sigma: Vec::with_capacity(merged.len()),
        u: Vec::with_capacity(merged.len()),
        g: Vec::new(),
    };
    for (sigma, u, z) in merged.into_values() {
        atoms.z.push(z);
        atoms.sigma.push(sigma);
        atoms.u.push(u);
    }
    atoms.g = atoms
        .z
        .par_iter()
        .map(|&z| {
            let v = g.green(z)?;
            Ok(if v.status == GreenStatus::Escaped { v.value } else { 0.0 })
        })
        .collect::<Result<_>>()?;

    let n = atoms.z.len();
    let mut e_rows = Vec::with_capacity(n);
    let mut c_rows = Vec::with_capacity(n);
    let mut c_right = Vec::with_capacity(n);
    let mut c_left = vec![0.0; n];
    let mut excluded = 0u64;
    let blocks = balanced_blocks(n);
    let group = rayon::current_num_threads().max(1);
    for chunk in blocks.chunks(group) {
        let sums: Vec<BlockSums> = chunk.par_iter().map(|r| block_sums(&atoms, r.clone())).collect();
        for s in sums {
            e_rows.extend(s.e_rows);
            c_rows.extend(s.c_rows);
            c_right.extend(s.c_right);
            for (acc, v) in c_left.iter_mut().zip(&s.c_left) {
                *acc += v;
            }
            excluded += s.excluded;
        }
    }

    let sigma_total = tree_sum(&atoms.sigma);
    let u_total = tree_sum(&atoms.u);
    let e_g: Vec<f64> = (0..n).map(|i| atoms.sigma[i] * atoms.g[i] * (sigma_total - atoms.sigma[i])).collect();
    let c_g: Vec<f64> = (0..n).map(|i| atoms.u[i] * atoms.g[i] * (u_total - atoms.u[i])).collect();
    let energy = 2.0 * tree_sum(&e_rows) - 2.0 * tree_sum(&e_g);
    let mu_self_energy = 2.0 * tree_sum(&c_rows) - 2.0 * tree_sum(&c_g);

    // U-statistic standard error from row means of the μ̂ kernel
    let ug: Vec<f64> = (0..n).map(|i| atoms.u[i] * atoms.g[i]).collect();
    let ug_total = tree_sum(&ug);
    let means: Vec<f64> = (0..n)
        .filter(|&i| atoms.u[i] > 0.0)
        .map(|i| {
            let rest = u_total - atoms.u[i];
            (c_right[i] + c_left[i] - atoms.g[i] * rest - (ug_total - ug[i])) / rest
        })
        .collect();
    let samples = mu.len();
    let mc_stderr = if means.len() > 1 {
        let mean = tree_sum(&means) / means.len() as f64;
        let dev: Vec<f64> = means.iter().map(|h| (h - mean).powi(2)).collect();
        let sd = (tree_sum(&dev) / (means.len() - 1) as f64).sqrt();
        2.0 * sd / (means.len() as f64).sqrt()
    } else {
        f64::INFINITY
    };

    let total_pairs = (n as u64) * (n as u64).saturating_sub(1) / 2;
    let f = g.map();
    Ok(FeketeReport {
        label,
        energy,
        nu_atoms: nu.len(),
        samples,
        mu_self_energy,
        mc_stderr,
        mu_self_expected: -f.log_gamma(),
        excluded_pairs: excluded,
        total_pairs,
        valid: (excluded as f64) <= MAX_EXCLUDED_FRACTION * total_pairs as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{brolin_sample, BrolinParams, PolyMap};

    fn label() -> DivisorLabel {
        DivisorLabel {
            n: 0,
            m: 0,
            a: "test".into(),
        }
    }

    #[test]
    fn self_test_is_exactly_zero() {
        let f = PolyMap::parse("[0.3, 0, 1]").unwrap();
        let mu = brolin_sample(&f, &BrolinParams::new(1000, 1)).unwrap();
        let g = GreenEvaluator::new(f, 100, 1e-12).unwrap();
        let rep = fekete_energy(label(), &mu, &g, &mu).unwrap();
        assert_eq!(rep.energy, 0.0);
        assert!(rep.valid);
    }

    #[test]
    fn roots_of_unity_against_circle_samples() {
        let f = PolyMap::parse("[0, 0, 1]").unwrap();
        let mu = brolin_sample(&f, &BrolinParams::new(20_000, 2)).unwrap();
        let nu = EmpiricalMeasure::uniform(
            (0..64)
                .map(|k| Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / 64.0))
                .collect(),
        )
        .unwrap();
        let g = GreenEvaluator::new(f, 100, 1e-12).unwrap();
        let rep = fekete_energy(label(), &nu, &g, &mu).unwrap();
        // off-diagonal self-energy of the roots is log D / D; the circle
        // measure contributes nothing
        let want = 64f64.ln() / 64.0;
        assert!((rep.energy - want).abs() <= 5e-3, "{}", rep.energy);
        assert!((rep.mu_self_energy - rep.mu_self_expected).abs() <= 3.0 * rep.mc_stderr + 1e-4);
    }

    #[test]
    fn symmetric_in_the_two_measures() {
        let f = PolyMap::parse("[0, 0, 1]").unwrap();
        let g = GreenEvaluator::new(f, 100, 1e-12).unwrap();
        let a = EmpiricalMeasure::uniform(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.5)]).unwrap();
        let b = EmpiricalMeasure::uniform(vec![Complex64::new(-1.0, 0.2), Complex64::new(0.3, -0.9), Complex64::new(2.0, 2.0)]).unwrap();
        let ab = fekete_energy(label(), &a, &g, &b).unwrap().energy;
        let ba = fekete_energy(label(), &b, &g, &a).unwrap().energy;
        assert!((ab - ba).abs() < 1e-14);
        // closed form: Σ_{i≠j} σ_i σ_j k(z_i, z_j)
        let pts: Vec<(Complex64, f64)> = a
            .points()
            .iter()
            .map(|z| (*z, 0.5))
            .chain(b.points().iter().map(|z| (*z, -1.0 / 3.0)))
            .collect();
        let gf = |z: Complex64| z.norm().ln().max(0.0);
        let mut want = 0.0;
        for (i, (zi, si)) in pts.iter().enumerate() {
            for (j, (zj, sj)) in pts.iter().enumerate() {
                if i != j {
                    want += si * sj * ((zi - zj).norm().ln() - gf(*zi) - gf(*zj));
                }
            }
        }
        assert!((ab - want).abs() < 1e-12, "{ab} vs {want}");
    }

    #[test]
    fn coincident_points_are_counted() {
        let f = PolyMap::parse("[0, 0, 1]").unwrap();
        let g = GreenEvaluator::new(f, 100, 1e-12).unwrap();
        let z = Complex64::new(0.5, 0.0);
        let nu = EmpiricalMeasure::uniform(vec![z, z + 1e-14]).unwrap();
        let mu = EmpiricalMeasure::uniform(vec![Complex64::new(-0.5, 0.0)]).unwrap();
        let rep = fekete_energy(label(), &nu, &g, &mu).unwrap();
        assert_eq!(rep.excluded_pairs, 1);
        assert!(!rep.valid && rep.ensure_valid().is_err());
    }
}
