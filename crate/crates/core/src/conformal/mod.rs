//! Conformal rescaling and the conformal type of a structure: capacity and
//! growth classifications, the Ahlfors–Gromov inequality and the canonical
//! isoperimetric forms.

mod checks;
mod classify;
mod factor;

pub use checks::{
    ahlfors_gromov_check, canonical_form, proposition1_equivalence_check, AhlforsGromovReport,
    CanonicalForm, EquivalenceReport, EquivalenceVerdict, AHLFORS_GROMOV_SLACK,
};
pub use classify::{
    classify_by_capacity, classify_by_capacity_with, classify_by_growth, CapacityThresholds,
    ClassificationResult, Criterion, CriterionReport, Status, TailFit, Verdict,
    CRITICAL_EXPONENT_TOLERANCE, FIT_RESIDUAL_LIMIT,
};
pub use factor::{rescale_structure, ConformalFactor, ScalingLedger};
