use serde::Serialize;

use super::eikonal::{solve_eikonal_with, EikonalOptions};
use crate::chart::{GridChart, ScalarField};
use crate::error::{invalid, Result};
use crate::sr::SubRiemannianStructure;

/// Relative gap between the last two `τ` fields above which a node is flagged.
pub const UNCONVERGED_GAP: f64 = 0.05;

/// Geometric default schedule.
pub const DEFAULT_TAU_SCHEDULE: [f64; 4] = [0.4, 0.2, 0.1, 0.05];

#[derive(Debug, Clone, Serialize)]
pub struct TauRun {
    pub tau: f64,
    pub cycles: usize,
    pub residual: f64,
}

/// Carnot–Carathéodory distance estimate: the smallest-`τ` field of a schedule.
#[derive(Debug, Clone)]
pub struct DistanceField {
    field: ScalarField,
    origin: Vec<f64>,
    tau_schedule: Vec<f64>,
    per_tau: Vec<ScalarField>,
    runs: Vec<TauRun>,
    unconverged: Vec<bool>,
    warnings: Vec<String>,
}

impl DistanceField {
    /// Wraps precomputed distances (e.g. a closed form) with no schedule.
    pub fn from_field(field: ScalarField, origin: Vec<f64>) -> Result<Self> {
        if origin.len() != field.chart().dim() {
            return invalid("origin dimension differs from the chart");
        }
        if field.values().iter().any(|v| v.is_nan() || *v < 0.0) {
            return invalid("distances must be nonnegative");
        }
        let n = field.values().len();
        Ok(Self {
            field,
            origin,
            tau_schedule: Vec::new(),
            per_tau: Vec::new(),
            runs: Vec::new(),
            unconverged: vec![false; n],
            warnings: Vec::new(),
        })
    }

    pub fn chart(&self) -> &GridChart {
        self.field.chart()
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn values(&self) -> &[f64] {
        self.field.values()
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn tau_schedule(&self) -> &[f64] {
        &self.tau_schedule
    }

    /// One field per schedule entry, in schedule order.
    pub fn per_tau(&self) -> &[ScalarField] {
        &self.per_tau
    }

    pub fn runs(&self) -> &[TauRun] {
        &self.runs
    }

    pub fn unconverged(&self) -> &[bool] {
        &self.unconverged
    }

    pub fn unconverged_fraction(&self) -> f64 {
        let k = self.unconverged.iter().filter(|&&b| b).count();
        k as f64 / self.unconverged.len().max(1) as f64
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Smallest distance attained on the chart boundary: balls of smaller radius are unclipped.
    pub fn boundary_distance(&self) -> f64 {
        let chart = self.chart();
        (0..chart.node_count())
            .filter(|&i| chart.is_boundary_node(i))
            .map(|i| self.values()[i])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn value_at(&self, point: &[f64]) -> Option<f64> {
        self.field.interpolate(point)
    }
}

/// Solves the eikonal equation for each `τ` of a strictly decreasing schedule.
///
/// Fields are computed from the largest `τ` down, each one floored by its
/// predecessor, so node-wise dominance holds exactly.
pub fn cc_distance_field(
    s: &SubRiemannianStructure,
    chart: &GridChart,
    origin: &[f64],
    tau_schedule: &[f64],
) -> Result<DistanceField> {
    cc_distance_field_with(s, chart, origin, tau_schedule, &EikonalOptions::default())
}

pub fn cc_distance_field_with(
    s: &SubRiemannianStructure,
    chart: &GridChart,
    origin: &[f64],
    tau_schedule: &[f64],
    options: &EikonalOptions,
) -> Result<DistanceField> {
    if tau_schedule.len() < 2 {
        return invalid("the tau schedule needs at least two entries");
    }
    if tau_schedule.iter().any(|t| !(*t > 0.0)) {
        return invalid("tau values must be positive");
    }
    if tau_schedule.windows(2).any(|w| w[1] >= w[0]) {
        return invalid(format!(
            "tau schedule {tau_schedule:?} is not strictly decreasing"
        ));
    }
    let mut warnings = Vec::new();
    let tau_min = *tau_schedule.last().unwrap();
    if s.d() < s.n() {
        let h_max = chart.spacing().iter().cloned().fold(0.0, f64::max);
        let extent = chart
            .lower()
            .iter()
            .zip(chart.upper())
            .map(|(l, u)| u - l)
            .fold(f64::INFINITY, f64::min);
        let resolvable = 2.0 * h_max / extent;
        if tau_min < resolvable {
            warnings.push(format!(
                "smallest tau {tau_min} is below the resolvable limit {resolvable:.3} of this grid"
            ));
        }
    }

    let mut per_tau: Vec<ScalarField> = Vec::with_capacity(tau_schedule.len());
    let mut runs: Vec<TauRun> = Vec::with_capacity(tau_schedule.len());
    for &tau in tau_schedule {
        if s.d() == s.n() && !per_tau.is_empty() {
            // g_τ does not depend on τ without complement directions.
            let run = runs[runs.len() - 1].clone();
            runs.push(TauRun { tau, ..run });
            per_tau.push(per_tau[per_tau.len() - 1].clone());
            continue;
        }
        let sol = solve_eikonal_with(s, chart, origin, tau, per_tau.last(), options)?;
        runs.push(TauRun {
            tau,
            cycles: sol.cycles,
            residual: sol.residual,
        });
        per_tau.push(sol.field);
    }
    let last = per_tau[per_tau.len() - 1].values();
    let prev = per_tau[per_tau.len() - 2].values();
    let unconverged: Vec<bool> = last
        .iter()
        .zip(prev)
        .map(|(a, b)| (a - b).abs() > UNCONVERGED_GAP * a.abs())
        .collect();
    let field = per_tau.last().unwrap().clone();
    Ok(DistanceField {
        field,
        origin: origin.to_vec(),
        tau_schedule: tau_schedule.to_vec(),
        per_tau,
        runs,
        unconverged,
        warnings,
    })
}
