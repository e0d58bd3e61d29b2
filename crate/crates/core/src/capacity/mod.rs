//! Capacities of annuli: direct minimization, radial and isoperimetric bounds,
//! closed forms and the radial modulus bound.

mod bounds;
mod energy;
mod estimate;
mod minimize;

pub use bounds::{
    capacity_levelset, capacity_lower_bound, capacity_upper_bound_radial, closed_form_capacity,
    isoperimetric_profile, modulus_radial_bound, unit_sphere_area, ClosedFormSpace,
    IsoperimetricProfile, LowerBound, LEVELSET_BANDS, METRIC_BALL_FAMILY, MIN_EXPONENT,
};
pub use energy::capacity_energy;
pub use estimate::{
    capacity_variational, capacity_variational_with, sandwich_check, sandwich_check_with,
    AnnulusSpec, CapacityEstimate, CapacityOptions, SandwichReport, SANDWICH_SLACK,
};
pub use minimize::{MinimizeOptions, MinimizeReport};
