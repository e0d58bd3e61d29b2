use serde::{Deserialize, Serialize};

use super::distance::{cc_distance_field, DistanceField};
use super::volume::BallVolumes;
use crate::chart::GridChart;
use crate::error::{invalid, Error, Result};
use crate::function::ScalarFn;
use crate::quad::{fit_power, PowerFit};
use crate::sr::SubRiemannianStructure;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthSample {
    pub r: f64,
    pub v: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GrowthKind {
    Sampled,
    /// `v = c·r^k`, `S = c·k·r^{k−1}`
    PowerModel {
        c: f64,
        k: f64,
    },
    /// `v = c·e^{βr}`, `S = c·β·e^{βr}`
    ExponentialModel {
        c: f64,
        beta: f64,
    },
}

/// Volume `v(r)` and area `S(r)` of metric balls, sampled or analytic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthProfile {
    pub kind: GrowthKind,
    pub samples: Vec<GrowthSample>,
    /// Hausdorff dimension the profile refers to.
    pub m: usize,
    /// Total volume of the manifold, when known.
    pub total_volume: Option<f64>,
}

impl GrowthProfile {
    pub fn sampled(samples: Vec<GrowthSample>, m: usize) -> Result<Self> {
        if samples.is_empty() {
            return invalid("a sampled growth profile needs at least one sample");
        }
        for (i, s) in samples.iter().enumerate() {
            if !(s.r.is_finite() && s.v.is_finite() && s.s.is_finite()) {
                return invalid(format!("sample {i} is not finite"));
            }
            if s.v < 0.0 || s.s < 0.0 || s.r < 0.0 {
                return invalid(format!("sample {i} has a negative entry"));
            }
        }
        for (i, w) in samples.windows(2).enumerate() {
            if !(w[1].r > w[0].r) {
                return invalid(format!(
                    "radii are not strictly increasing at sample {}",
                    i + 1
                ));
            }
            if w[1].v < w[0].v {
                return invalid(format!("volume decreases at sample {}", i + 1));
            }
        }
        Ok(Self {
            kind: GrowthKind::Sampled,
            samples,
            m,
            total_volume: None,
        })
    }

    pub fn power_model(c: f64, k: f64, m: usize) -> Result<Self> {
        if !(c > 0.0 && k > 0.0) {
            return invalid(format!(
                "power model needs c > 0 and k > 0, got c={c}, k={k}"
            ));
        }
        Ok(Self {
            kind: GrowthKind::PowerModel { c, k },
            samples: Vec::new(),
            m,
            total_volume: None,
        })
    }

    pub fn exponential_model(c: f64, beta: f64, m: usize) -> Result<Self> {
        if !(c > 0.0 && beta > 0.0) {
            return invalid(format!(
                "exponential model needs c > 0 and beta > 0, got c={c}, beta={beta}"
            ));
        }
        Ok(Self {
            kind: GrowthKind::ExponentialModel { c, beta },
            samples: Vec::new(),
            m,
            total_volume: None,
        })
    }

    pub fn with_total_volume(mut self, total: f64) -> Self {
        self.total_volume = Some(total);
        self
    }

    pub fn radii(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.r).collect()
    }

    pub fn volumes(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.v).collect()
    }

    pub fn areas(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.s).collect()
    }

    /// `v(r)` for models; power-law interpolation for samples.
    pub fn volume_at(&self, r: f64) -> Result<f64> {
        match self.kind {
            GrowthKind::PowerModel { c, k } => Ok(c * r.powf(k)),
            GrowthKind::ExponentialModel { c, beta } => Ok(c * (beta * r).exp()),
            GrowthKind::Sampled => crate::quad::interpolate(&self.radii(), &self.volumes(), r),
        }
    }

    pub fn area_at(&self, r: f64) -> Result<f64> {
        match self.kind {
            GrowthKind::PowerModel { c, k } => Ok(c * k * r.powf(k - 1.0)),
            GrowthKind::ExponentialModel { c, beta } => Ok(c * beta * (beta * r).exp()),
            GrowthKind::Sampled => crate::quad::interpolate(&self.radii(), &self.areas(), r),
        }
    }

    /// Least-squares `v ≈ c·r^k` over the samples with `v > 0`.
    pub fn power_fit(&self) -> Result<PowerFit> {
        let (r, v): (Vec<f64>, Vec<f64>) = self
            .samples
            .iter()
            .filter(|s| s.v > 0.0 && s.r > 0.0)
            .map(|s| (s.r, s.v))
            .unzip();
        fit_power(&r, &v)
    }
}

/// `S(r) = v'(r)`: derivative at `r` of the quadratic through the three
/// samples nearest to `r`.
pub fn sphere_area(samples: &[(f64, f64)], r: f64) -> Result<f64> {
    if samples.len() < 3 {
        return invalid("sphere_area needs at least three (r, v) samples");
    }
    if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return invalid("sample radii must be strictly increasing");
    }
    let (lo, hi) = (samples[0].0, samples[samples.len() - 1].0);
    if !(r >= lo && r <= hi) {
        return Err(Error::InvalidInput(format!(
            "radius {r} is outside the sample range [{lo}, {hi}]"
        )));
    }
    let i = samples.partition_point(|s| s.0 < r);
    let start = i.saturating_sub(1).min(samples.len() - 3);
    let [(x0, y0), (x1, y1), (x2, y2)] = [samples[start], samples[start + 1], samples[start + 2]];
    let d = y0 * (2.0 * r - x1 - x2) / ((x0 - x1) * (x0 - x2))
        + y1 * (2.0 * r - x0 - x2) / ((x1 - x0) * (x1 - x2))
        + y2 * (2.0 * r - x0 - x1) / ((x2 - x0) * (x2 - x1));
    Ok(d.max(0.0))
}

/// Growth profile from an existing distance field; `S` is the central
/// difference of `v` over one grid spacing.
pub fn growth_profile_from_distance(
    dist: &DistanceField,
    density: &ScalarFn,
    radii: &[f64],
    m: usize,
) -> Result<GrowthProfile> {
    if radii.is_empty() {
        return invalid("radii list is empty");
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) || radii[0] <= 0.0 {
        return invalid("radii must be positive and strictly increasing");
    }
    let balls = BallVolumes::new(dist, density);
    let limit = balls.boundary_distance();
    let last = radii[radii.len() - 1];
    if last >= limit {
        return Err(Error::BallClipped {
            radius: last,
            boundary_distance: limit,
        });
    }
    let h = dist.chart().spacing().iter().cloned().fold(0.0, f64::max);
    let mut samples = Vec::with_capacity(radii.len());
    for &r in radii {
        let delta = h.min(0.5 * r).min(0.5 * (limit - r));
        let v = balls.volume_unchecked(r);
        let s =
            (balls.volume_unchecked(r + delta) - balls.volume_unchecked(r - delta)) / (2.0 * delta);
        samples.push(GrowthSample { r, v, s });
    }
    GrowthProfile::sampled(samples, m)
}

/// Distance field, then ball volumes and areas at each radius.
pub fn growth_profile(
    s: &SubRiemannianStructure,
    chart: &GridChart,
    origin: &[f64],
    radii: &[f64],
    tau_schedule: &[f64],
) -> Result<GrowthProfile> {
    if radii.is_empty() {
        return invalid("radii list is empty");
    }
    let dist = cc_distance_field(s, chart, origin, tau_schedule)?;
    growth_profile_from_distance(&dist, s.density(), radii, s.m())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sphere_area_of_analytic_volumes() {
        let disk: Vec<(f64, f64)> = (1..=8)
            .map(|i| {
                let r = 0.25 * i as f64;
                (r, PI * r * r)
            })
            .collect();
        assert!((sphere_area(&disk, 1.0).unwrap() - 2.0 * PI).abs() < 1e-9);
        let ball: Vec<(f64, f64)> = (1..=8)
            .map(|i| {
                let r = 0.25 * i as f64;
                (r, 4.0 / 3.0 * PI * r.powi(3))
            })
            .collect();
        assert!((sphere_area(&ball, 1.0).unwrap() - 4.0 * PI).abs() < 0.03 * 4.0 * PI);
        assert!(sphere_area(&disk, 3.0).is_err());
    }

    #[test]
    fn profile_validation() {
        let ok = |r, v| GrowthSample { r, v, s: 1.0 };
        assert!(GrowthProfile::sampled(vec![ok(1.0, 1.0), ok(2.0, 0.5)], 2).is_err());
        assert!(GrowthProfile::sampled(vec![ok(1.0, 1.0), ok(1.0, 2.0)], 2).is_err());
        assert!(GrowthProfile::sampled(vec![], 2).is_err());
        assert!(GrowthProfile::power_model(0.0, 2.0, 2).is_err());
        assert!(GrowthProfile::exponential_model(1.0, -1.0, 2).is_err());
        let p = GrowthProfile::power_model(PI, 2.0, 2).unwrap();
        assert!((p.area_at(1.0).unwrap() - 2.0 * PI).abs() < 1e-15);
    }
}
