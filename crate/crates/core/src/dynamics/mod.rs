//! One-variable polynomial dynamics: escape radius, Green function,
//! Böttcher coordinate and equilibrium-measure sampling.

mod boettcher;
mod brolin;
mod green;
mod map;

pub use boettcher::{boettcher_series, BoettcherSeries};
pub use brolin::{brolin_sample, BrolinParams, EmpiricalMeasure};
pub use green::{Estimate, GreenEvaluator, GreenStatus, GreenValue, CRITICAL_EXCLUSION};
pub use map::PolyMap;
