//! Quermassintegral-preserving mean curvature flow in space forms.
//!
//! Rotationally symmetric convex hypersurfaces of the space form of curvature
//! `K` are stored as radial graphs ([`surface::Profile`]) and evolved by
//! `d_t x = (mu(t) c_K(r) - H) nu`, where the global term `mu` keeps one
//! quermassintegral `W_l` fixed. Around the flow sit the integral identities
//! used as numerical oracles, the radius/origin machinery needed for long runs,
//! pinching and sphere-fit diagnostics, and the radially symmetric Weingarten
//! and soliton equations `F = gamma c_K^alpha`, `F^beta = u`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod elliptic;
pub mod error;
pub mod flow;
pub mod integrals;
pub mod origin;
pub mod quad;
pub mod spaceform;
pub mod surface;

pub use error::{Error, Result};
pub use spaceform::SpaceForm;
pub use surface::{curvature, CurvatureField, Profile};
