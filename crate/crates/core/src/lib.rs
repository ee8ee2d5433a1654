//! Brauer groups and Brauer–Manin obstructions for the diagonal degree-2 K3
//! surfaces w² = A₁x₁⁶ + A₂x₂⁶ + A₃x₃⁶ over ℚ.

pub mod arith;
pub mod eisenstein;
pub mod localfields;
pub mod localsearch;
pub mod surface;
pub mod obstruction;
pub mod brauergroup;
pub mod cohomology;
pub mod census;
