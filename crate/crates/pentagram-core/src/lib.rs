//! Exact arithmetic for the pentagram map on twisted polygons.
//!
//! The pentagram map sends a polygon to the polygon whose vertices are the
//! intersections of its shortest diagonals.  On twisted polygons (bi-infinite
//! vertex sequences with a projective monodromy) the map is a rational
//! dynamical system; this crate provides the exact machinery needed to study
//! its singularities and their confinement:
//!
//! * [`scalar`]: exact base fields — rationals and univariate rational
//!   functions in a deformation parameter `t`.
//! * [`projective`]: points and lines of the projective plane over an exact
//!   field, cross ratios, triple ratios, and straightedge constructions.
//! * [`polygon`]: twisted polygons, the pentagram map, and the `x`/`y`
//!   coordinate systems.
//! * [`fpoly`]: the `F`-polynomials attached to the map, computed by three
//!   independent routes (recursion, order-ideal sums, alternating-sign-matrix
//!   sums), plus restriction to `y_i = -1`.
//! * [`confinement`]: closed-form iterate formulas, vanishing analysis of
//!   restricted `F`-polynomials, and the singularity-confinement predictor.
//! * [`decorated`]: decorated polygons, the triangle relation and its solver,
//!   and the lifted pentagram maps that push decorations forward.
//! * [`desing`]: the desingularization algorithm and the exact
//!   deformation-limit oracle that certifies it.
//! * [`json`]: serialization of polygons and traces.

pub mod confinement;
pub mod decorated;
pub mod desing;
pub mod fpoly;
pub mod json;
pub mod polygon;
pub mod projective;
pub mod scalar;
