//! Sub-Riemannian structures: frames, bracket filtration, Hausdorff dimension,
//! horizontal gradients and the Riemannian approximations `g_τ`.

mod brackets;
mod file;
mod gradient;
mod structure;

pub use brackets::{default_sample_points, filtration_ranks, horizontal_bracket};
pub use file::{load_structure, parse_structure};
pub use gradient::{horizontal_gradient, HorizontalVectorField};
pub use structure::{
    build_builtin, g_tau_norm, hausdorff_dimension, StructureSummary, SubRiemannianStructure,
    VectorFieldSpec,
};
