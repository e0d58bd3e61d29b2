use serde::{Deserialize, Serialize};

use super::bounds::{
    capacity_lower_bound, capacity_upper_bound_radial, check_exponent, check_radii,
    isoperimetric_profile, sphere_area_at, LowerBound,
};
use super::energy::EnergyMesh;
use super::minimize::{minimize, DirichletProblem, MinimizeOptions};
use crate::chart::ScalarField;
use crate::error::{invalid, Error, Result};
use crate::metric::{BallVolumes, DistanceField};
use crate::sr::SubRiemannianStructure;

/// Default allowance for `value ≤ upper·(1 + slack)`.
pub const SANDWICH_SLACK: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSpec {
    pub origin: Vec<f64>,
    pub a: f64,
    pub b: f64,
}

impl AnnulusSpec {
    pub fn new(origin: Vec<f64>, a: f64, b: f64) -> Result<Self> {
        check_radii(a, b)?;
        if origin.iter().any(|x| !x.is_finite()) {
            return invalid("annulus origin is not finite");
        }
        Ok(Self { origin, a, b })
    }
}

#[derive(Debug, Clone)]
pub struct CapacityOptions {
    pub minimize: MinimizeOptions,
    /// Radii sampled on `[a, b]` for the radial bound and the seed.
    pub radial_samples: usize,
    /// Volumes sampled for the isoperimetric profile.
    pub profile_samples: usize,
}

impl Default for CapacityOptions {
    fn default() -> Self {
        Self {
            minimize: MinimizeOptions::default(),
            radial_samples: 65,
            profile_samples: 48,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CapacityEstimate {
    pub p: f64,
    /// Minimized discrete energy.
    pub value: f64,
    /// Isoperimetric lower bound over `B(b)`.
    pub lower: f64,
    /// Energy of the best radial function.
    pub upper: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
    /// Converged and inside `[0, 1]` at every node.
    pub certified: bool,
    pub structure: String,
    pub annulus: AnnulusSpec,
    pub resolution: Vec<usize>,
    pub tau_schedule: Vec<f64>,
    /// Energy of the radial seed.
    pub seed_energy: f64,
    pub lower_detail: LowerBound,
    #[serde(skip)]
    pub minimizer: Option<ScalarField>,
}

/// Radial profile `F(d) = ∫_a^d S^{−1/(p−1)} / ∫_a^b S^{−1/(p−1)}` tabulated on the sample radii.
fn radial_seed_table(radii: &[f64], areas: &[f64], p: f64) -> Vec<f64> {
    let ys: Vec<f64> = areas.iter().map(|s| s.powf(-1.0 / (p - 1.0))).collect();
    let mut cum = vec![0.0; radii.len()];
    for i in 1..radii.len() {
        cum[i] = cum[i - 1]
            + crate::quad::integrate(&radii[i - 1..=i], &ys[i - 1..=i], radii[i - 1], radii[i])
                .unwrap_or(0.0);
    }
    let total = cum[cum.len() - 1];
    cum.iter().map(|c| c / total).collect()
}

fn seed_value(d: f64, radii: &[f64], table: &[f64]) -> f64 {
    if d <= radii[0] {
        return 0.0;
    }
    if d >= radii[radii.len() - 1] {
        return 1.0;
    }
    let i = radii.partition_point(|&r| r <= d).clamp(1, radii.len() - 1) - 1;
    let t = (d - radii[i]) / (radii[i + 1] - radii[i]);
    table[i] + t * (table[i + 1] - table[i])
}

/// Capacity of the annulus `a < dist < b` by direct minimization of the discrete `p`-energy.
///
/// Nodes with `dist ≤ a` are clamped to 0 and nodes with `dist ≥ b` to 1; the
/// minimization starts from the optimal radial profile of `dist`.
pub fn capacity_variational(
    s: &SubRiemannianStructure,
    ann: &AnnulusSpec,
    p: f64,
    dist: &DistanceField,
) -> Result<CapacityEstimate> {
    capacity_variational_with(s, ann, p, dist, &CapacityOptions::default())
}

pub fn capacity_variational_with(
    s: &SubRiemannianStructure,
    ann: &AnnulusSpec,
    p: f64,
    dist: &DistanceField,
    options: &CapacityOptions,
) -> Result<CapacityEstimate> {
    check_exponent(p)?;
    check_radii(ann.a, ann.b)?;
    if options.radial_samples < 3 || options.profile_samples < 3 {
        return invalid("at least three radial and profile samples are required");
    }
    let chart = dist.chart();
    if chart.dim() != s.n() {
        return invalid("distance field chart does not match the structure dimension");
    }
    if ann.origin.len() != dist.origin().len()
        || ann
            .origin
            .iter()
            .zip(dist.origin())
            .any(|(x, y)| (x - y).abs() > 1e-12 * (1.0 + x.abs()))
    {
        return invalid("annulus origin differs from the distance field origin");
    }
    let (a, b) = (ann.a, ann.b);
    let balls = BallVolumes::new(dist, s.density());
    let h = chart.spacing().iter().cloned().fold(0.0, f64::max);
    let limit = balls.boundary_distance();
    if b + 2.0 * h >= limit {
        return Err(Error::BallClipped {
            radius: b,
            boundary_distance: limit,
        });
    }

    let k = options.radial_samples;
    let radii: Vec<f64> = (0..k)
        .map(|i| a + (b - a) * i as f64 / (k - 1) as f64)
        .collect();
    let areas: Vec<f64> = radii
        .iter()
        .map(|&r| sphere_area_at(&balls, r, h))
        .collect();
    let samples: Vec<(f64, f64)> = radii.iter().cloned().zip(areas.iter().cloned()).collect();
    let upper = capacity_upper_bound_radial(&samples, a, b, p)?;

    let r0 = (2.0 * h).min(0.5 * a);
    let (v0, vb) = (balls.volume_unchecked(r0), balls.volume_unchecked(b));
    let m = options.profile_samples;
    let volumes: Vec<f64> = (0..m)
        .map(|i| v0 * (vb / v0).powf(i as f64 / (m - 1) as f64))
        .collect();
    let profile = isoperimetric_profile(s, dist, &volumes)?;
    let lower_detail = capacity_lower_bound(&profile, vb, p)?;

    let table = radial_seed_table(&radii, &areas, p);
    let d = dist.values();
    let base: Vec<f64> = d.iter().map(|&v| if v <= a { 0.0 } else { 1.0 }).collect();
    let free: Vec<usize> = (0..d.len()).filter(|&i| d[i] > a && d[i] < b).collect();
    let mut is_free = vec![false; d.len()];
    for &i in &free {
        is_free[i] = true;
    }
    let corners = chart.corner_offsets();
    let cells: Vec<usize> = (0..chart.cell_count())
        .filter(|&c| {
            let base = chart.cell_base_node(c);
            corners.iter().any(|off| is_free[base + off])
        })
        .collect();
    let mesh = EnergyMesh::new(s, chart, cells)?;
    let problem = DirichletProblem::new(mesh, p, free, base);
    let mut x: Vec<f64> = problem
        .free
        .iter()
        .map(|&i| seed_value(d[i], &radii, &table))
        .collect();
    let mut work = problem.base.clone();
    let seed_energy = problem.energy(&x, &mut work);
    let report = minimize(&problem, &mut x, &options.minimize);
    let mut u = problem.base.clone();
    problem.scatter(&x, &mut u);
    let in_range = u.iter().all(|v| (0.0..=1.0).contains(v));
    let minimizer = ScalarField::new(chart.clone(), u)?;
    log::debug!(
        "capacity p={p} a={a} b={b}: value {} after {} iterations (seed {seed_energy}, radial bound {upper})",
        report.energy,
        report.iterations
    );

    Ok(CapacityEstimate {
        p,
        value: report.energy,
        lower: lower_detail.value,
        upper,
        iterations: report.iterations,
        grad_norm: report.grad_norm,
        converged: report.converged,
        certified: report.converged && in_range,
        structure: s.name().to_string(),
        annulus: ann.clone(),
        resolution: chart.resolution().to_vec(),
        tau_schedule: dist.tau_schedule().to_vec(),
        seed_energy,
        lower_detail,
        minimizer: Some(minimizer),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichReport {
    pub pass: bool,
    /// `value − lower`.
    pub lower_margin: f64,
    /// `upper·(1 + slack) − value`.
    pub upper_margin: f64,
    /// `upper < lower`: the brackets themselves are inconsistent.
    pub corrupted: bool,
    pub slack: f64,
}

pub fn sandwich_check(est: &CapacityEstimate) -> SandwichReport {
    sandwich_check_with(est, SANDWICH_SLACK)
}

pub fn sandwich_check_with(est: &CapacityEstimate, slack: f64) -> SandwichReport {
    let lower_margin = est.value - est.lower;
    let upper_margin = est.upper * (1.0 + slack) - est.value;
    let corrupted = !(est.upper >= est.lower);
    SandwichReport {
        pass: !corrupted && lower_margin >= 0.0 && upper_margin >= 0.0,
        lower_margin,
        upper_margin,
        corrupted,
        slack,
    }
}
