//! Canonical heights of the divisors `[(f^n)^(m) = a]` over the rationals.

mod divisor;
mod height;

pub use divisor::{divisor_representative, finite_places_contribution, padic_valuation, DivisorQ, FiniteContribution, PrimeTerm, Provenance};
pub use height::{
    archimedean_contribution, canonical_height, divisor_height, divisor_roots, height_vanishing_scan, log_mahler_quadrature, write_scan_csv,
    ArchimedeanContribution, CertStatus, HeightOptions, HeightReport, Place, PlaceContribution,
};
