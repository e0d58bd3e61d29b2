//! Carnot–Carathéodory distance fields, ball volumes, growth profiles and the
//! coarea identity.

mod coarea;
mod distance;
mod eikonal;
mod growth;
mod volume;

pub use coarea::{
    coarea_check, sphere_area_check, CoareaReport, SphereAreaReport, DEGENERATE_GRADIENT,
    MAX_MASKED_FRACTION,
};
pub use distance::{
    cc_distance_field, cc_distance_field_with, DistanceField, TauRun, DEFAULT_TAU_SCHEDULE,
    UNCONVERGED_GAP,
};
pub use eikonal::{solve_eikonal, solve_eikonal_with, EikonalOptions, EikonalSolution};
pub use growth::{
    growth_profile, growth_profile_from_distance, sphere_area, GrowthKind, GrowthProfile,
    GrowthSample,
};
pub use volume::{ball_volume, BallVolumes};

pub(crate) use coarea::degenerate_mask;
pub(crate) use volume::simplex_fraction_between;
