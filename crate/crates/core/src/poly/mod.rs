//! Exact and floating polynomial arithmetic: univariate and bivariate dense
//! polynomials, iteration, differentiation and jet evaluation through
//! composed maps.

mod bi;
mod jet;
mod uni;

pub use bi::{BiPoly, BI_DEGREE_CAP};
pub use jet::{jet_eval, jet_iterate, Jet, JetEval};
pub use uni::{UniPoly, UNI_DEGREE_CAP};
