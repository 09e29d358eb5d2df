//! Constructive tools for Bohr chaoticity: horseshoes with disjoint steps in
//! symbolic systems, correlated (function, point) pairs for bounded weights,
//! and Riesz-product verification for affine maps of the torus.

pub mod birkhoff;
pub mod horseshoe;
pub mod symbolic;
pub mod toral;
pub mod weights;
