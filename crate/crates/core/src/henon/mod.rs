//! Hénon maps `(z, w) -> (p(z) - δ w, z)`: exact iterates, the Green
//! function `g⁺`, and the shifted Jacobian determinants `det(D(f^n) - A)`.

mod green;
mod map;
mod slice;

pub use green::{phi_n, Gradient, HenonGreen, Y_GUARD};
pub use map::{det_jacobian_shift, henon_iterate, orbit_jacobian, HenonMap, IterPair, OrbitJacobian, ShiftMatrix};
pub use slice::{restrict_to_line, slice_roots, Line, SliceResult};
