use std::io::{self, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::green::Estimate;
use super::map::PolyMap;
use crate::error::{Error, Result};

/// A finitely supported probability measure on the plane.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure {
    points: Vec<Complex64>,
    weights: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn uniform(points: Vec<Complex64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("empty measure".into()));
        }
        let w = 1.0 / points.len() as f64;
        Ok(EmpiricalMeasure {
            weights: vec![w; points.len()],
            points,
        })
    }

    pub fn weighted(points: Vec<Complex64>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() || points.is_empty() {
            return Err(Error::InvalidInput("points and weights must be nonempty and of equal length".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidInput("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("weights sum to {total}, not 1")));
        }
        Ok(EmpiricalMeasure { points, weights })
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mean(&self) -> Complex64 {
        self.points.iter().zip(&self.weights).map(|(z, w)| z * w).sum()
    }

    /// `∫ log|t - s| dν(s)` with a Monte-Carlo standard error that treats the
    /// points as independent draws.
    pub fn log_potential(&self, t: Complex64) -> Estimate {
        let logs: Vec<f64> = self.points.iter().map(|s| (t - s).norm().ln()).collect();
        let mean: f64 = logs.iter().zip(&self.weights).map(|(l, w)| l * w).sum();
        let var: f64 = logs.iter().zip(&self.weights).map(|(l, w)| w * (l - mean).powi(2)).sum();
        Estimate {
            value: mean,
            err: (var / self.points.len() as f64).sqrt(),
        }
    }

    /// Columns `re, im, weight`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "re,im,weight")?;
        for (z, wt) in self.points.iter().zip(&self.weights) {
            writeln!(w, "{:e},{:e},{:e}", z.re, z.im, wt)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BrolinParams {
    pub samples: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Independent chains; chain `k` uses stream `k` of the seeded generator.
    pub chains: usize,
}

impl BrolinParams {
    pub fn new(samples: usize, seed: u64) -> Self {
        BrolinParams {
            samples,
            burn_in: 30,
            seed,
            chains: 8,
        }
    }
}

/// Samples `μ_f` by random backward orbits of `a = R + 1`.
///
/// Each chain starts at `a`, repeatedly replaces the current point by one of
/// its `d` preimages chosen uniformly, discards the first `burn_in` points
/// and keeps the rest. Chains are concatenated in index order, so the output
/// depends only on the parameters.
pub fn brolin_sample(f: &PolyMap, params: &BrolinParams) -> Result<EmpiricalMeasure> {
    if params.samples == 0 || params.chains == 0 {
        return Err(Error::InvalidInput("samples and chains must be positive".into()));
    }
    let mut start = Complex64::new(f.escape_radius() + 1.0, 0.0);
    if let Some(b) = f.exceptional_point() {
        if (start - b).norm() < 1e-6 {
            start += 1.0;
        }
    }
    let chains = params.chains.min(params.samples);
    let per = params.samples / chains;
    let extra = params.samples % chains;
    let parts: Vec<Vec<Complex64>> = (0..chains)
        .into_par_iter()
        .map(|k| {
            let len = per + usize::from(k < extra);
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(k as u64);
            run_chain(f, start, params.burn_in, len, &mut rng)
        })
        .collect::<Result<_>>()?;
    EmpiricalMeasure::uniform(parts.concat())
}

fn run_chain(f: &PolyMap, start: Complex64, burn_in: usize, len: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Complex64>> {
    let d = f.degree();
    let mut z = start;
    let mut out = Vec::with_capacity(len);
    for step in 0..burn_in + len {
        let pre = f.preimages(z)?;
        let next = pre[rng.random_range(0..d)];
        let resid = (f.eval(next) - z).norm();
        if !(resid <= 1e-9 * (1.0 + z.norm())) {
            return Err(Error::SolverFailure {
                sweeps: step,
                precision_bits: 53,
                worst_residual: resid,
            });
        }
        z = next;
        if step >= burn_in {
            out.push(z);
        }
    }
    Ok(out)
}
