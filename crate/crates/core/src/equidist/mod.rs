//! How far the root measure of a divisor is from the equilibrium measure.

mod discrepancy;
mod fekete;
mod pointwise;

pub use discrepancy::{default_test_points, potential_discrepancy, DiscrepancyReport, DivisorLabel, SUPPORT_CLEARANCE};
pub use fekete::{fekete_energy, FeketeReport, MAX_EXCLUDED_FRACTION, SINGULAR_CUTOFF};
pub use pointwise::{basin_asymptotic_check, direct_potential, preschwarzian, schwarzian, Predicted};
