use std::io::{self, Write};

use num_complex::Complex64;
use serde::Serialize;

use crate::poly::UniPoly;
use crate::scalar::{CRational, CScalar, MpComplex, Precision, Ring};

/// Roots closer than this (relative to `max(1, |z|)`) are grouped into a
/// cluster.
pub const CLUSTER_RADIUS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootStatus {
    Certified,
    /// Certified, but `a = 0`, a value for which the root measures need not
    /// equidistribute.
    ExcludedValue,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterStats {
    pub min_distance: f64,
    /// Groups with more than one member.
    pub clusters: usize,
    pub clustered_roots: usize,
    pub max_diameter: f64,
}

/// All `D` roots of a polynomial with per-root residual certificates.
#[derive(Clone, Debug)]
pub struct RootSet {
    pub roots: Vec<MpComplex>,
    pub residuals: Vec<f64>,
    pub precision: Precision,
    pub degree: usize,
    pub sweeps: usize,
    pub status: RootStatus,
    pub clusters: ClusterStats,
}

#[derive(Clone, Debug, Serialize)]
pub struct RootSetHeader {
    pub degree: usize,
    pub precision_bits: u32,
    pub sweeps: usize,
    pub status: RootStatus,
    pub max_residual: f64,
    pub clusters: ClusterStats,
}

impl RootSet {
    pub fn new(roots: Vec<MpComplex>, residuals: Vec<f64>, precision: Precision, sweeps: usize, status: RootStatus) -> Self {
        let points: Vec<Complex64> = roots.iter().map(CScalar::to_c64).collect();
        RootSet {
            degree: roots.len(),
            clusters: cluster_stats(&points),
            roots,
            residuals,
            precision,
            sweeps,
            status,
        }
    }

    pub fn points(&self) -> Vec<Complex64> {
        self.roots.iter().map(CScalar::to_c64).collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// `(1/D) Σ log|t - z_i|`.
    pub fn log_potential(&self, t: Complex64) -> f64 {
        let sum: f64 = self.roots.iter().map(|z| (t - z.to_c64()).norm().ln()).sum();
        sum / self.degree as f64
    }

    pub fn header(&self) -> RootSetHeader {
        RootSetHeader {
            degree: self.degree,
            precision_bits: self.precision.bits(),
            sweeps: self.sweeps,
            status: self.status,
            max_residual: self.max_residual(),
            clusters: self.clusters.clone(),
        }
    }

    /// Columns `re, im, residual`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "re,im,residual")?;
        for (z, r) in self.roots.iter().zip(&self.residuals) {
            let z = z.to_c64();
            writeln!(w, "{:e},{:e},{:e}", z.re, z.im, r)?;
        }
        Ok(())
    }
}

/// Pairwise-distance statistics; clusters are connected components of the
/// "closer than [`CLUSTER_RADIUS`]" graph.
pub fn cluster_stats(points: &[Complex64]) -> ClusterStats {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut min_distance = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = (points[i] - points[j]).norm();
            min_distance = min_distance.min(dist);
            let scale = points[i].norm().max(points[j].norm()).max(1.0);
            if dist < CLUSTER_RADIUS * scale {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut stats = ClusterStats {
        min_distance,
        clusters: 0,
        clustered_roots: 0,
        max_diameter: 0.0,
    };
    for members in groups.values().filter(|g| g.len() > 1) {
        stats.clusters += 1;
        stats.clustered_roots += members.len();
        for (k, &i) in members.iter().enumerate() {
            for &j in &members[k + 1..] {
                stats.max_diameter = stats.max_diameter.max((points[i] - points[j]).norm());
            }
        }
    }
    stats
}

/// `|Σ z_i + b_(D-1)/b_D|`, evaluated at the precision of the roots.
pub fn vieta_sum_error(roots: &RootSet, poly: &UniPoly<CRational>) -> f64 {
    let Some(d) = poly.degree().filter(|&d| d >= 1) else {
        return f64::INFINITY;
    };
    let prec = roots.precision.doubled();
    let ratio = poly.coeffs()[d - 1].mul(&poly.coeffs()[d].inv().expect("nonzero leading coefficient"));
    let mut acc = MpComplex::from_exact(&ratio, prec);
    for z in &roots.roots {
        acc.add_assign(&z.to_prec(prec));
    }
    acc.abs().to_f64()
}
